/*
 * Copyright 2026 The jointcov Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "jointcov/metrics.h"

#include <cmath>
#include <random>

#include "Eigen/Eigenvalues"
#include "gtest/gtest.h"
#include "jointcov/error.h"

namespace jointcov {
namespace {

Eigen::MatrixXd RandomPd(int m, std::mt19937* gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m * m; ++i) a(i) = normal(*gen);
  return a * a.transpose() / m + 0.01 * Eigen::MatrixXd::Identity(m, m);
}

TEST(RmseTest, ZeroForIdenticalStates) {
  auto spec = std::make_shared<ManifoldSpec>();
  spec->AddEuclidean(0, 4).AddSe2(1);
  ManifoldPoint x(spec, Eigen::VectorXd::LinSpaced(7, -1., 2.));
  EXPECT_EQ(Rmse(x, x), 0.);
  EXPECT_EQ(Rmse(x, x, RmseComponents::kPositions), 0.);
}

TEST(RmseTest, SingleComponentError) {
  auto spec = std::make_shared<ManifoldSpec>();
  spec->AddEuclidean(0, 9);
  Eigen::VectorXd truth = Eigen::VectorXd::Ones(9);
  Eigen::VectorXd est = truth;
  est[4] += 3.;
  EXPECT_DOUBLE_EQ(Rmse(ManifoldPoint(spec, est), ManifoldPoint(spec, truth)),
                   1.);
}

TEST(RmseTest, PositionsIgnoreHeadings) {
  auto spec = std::make_shared<ManifoldSpec>();
  spec->AddSe2(0).AddSe2(1);
  ManifoldPoint truth(spec), est(spec);
  est.set_pose(0, Pose2(0., 0., 1.));
  est.set_pose(1, Pose2(2., 0., -2.));
  // Squared position errors 0 and 4 over 4 components.
  EXPECT_DOUBLE_EQ(Rmse(est, truth, RmseComponents::kPositions), 1.);
  // Headings enter the full RMSE as wrapped differences.
  EXPECT_DOUBLE_EQ(Rmse(est, truth), std::sqrt((4. + 1. + 4.) / 6.));
}

TEST(RmseTest, InvariantUnderBlockOrder) {
  auto ab = std::make_shared<ManifoldSpec>();
  ab->AddEuclidean(0, 2).AddEuclidean(1, 3);
  auto ba = std::make_shared<ManifoldSpec>();
  ba->AddEuclidean(1, 3).AddEuclidean(0, 2);
  Eigen::VectorXd e(5), t(5);
  e << 1., 2., 3., 4., 5.;
  t << 0., 2., 5., 4., 4.;
  Eigen::VectorXd e2(5), t2(5);
  e2 << e.tail(3), e.head(2);
  t2 << t.tail(3), t.head(2);
  EXPECT_DOUBLE_EQ(Rmse(ManifoldPoint(ab, e), ManifoldPoint(ab, t)),
                   Rmse(ManifoldPoint(ba, e2), ManifoldPoint(ba, t2)));
}

TEST(RmseTest, MismatchedSpecsThrow) {
  auto a = std::make_shared<ManifoldSpec>();
  a->AddEuclidean(0, 2);
  auto b = std::make_shared<ManifoldSpec>();
  b->AddEuclidean(0, 3);
  EXPECT_THROW(Rmse(ManifoldPoint(a), ManifoldPoint(b)), DimensionMismatchError);
}

TEST(Wasserstein2Test, Examples) {
  const Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
  EXPECT_NEAR(Wasserstein2(4. * eye, eye), std::sqrt(2.), 1e-14);
  EXPECT_EQ(Wasserstein2(eye, eye), 0.);
  // Isotropic closed form sqrt(m) |sqrt(a) - sqrt(b)|.
  EXPECT_NEAR(Wasserstein2(9. * Eigen::Matrix3d::Identity(),
                           0.25 * Eigen::Matrix3d::Identity()),
              std::sqrt(3.) * 2.5, 1e-13);
  // Commuting diagonal matrices reduce to per-axis standard deviations.
  EXPECT_NEAR(Wasserstein2(Eigen::Vector2d(1., 4.).asDiagonal(),
                           Eigen::Vector2d(9., 1.).asDiagonal()),
              std::sqrt(4. + 1.), 1e-13);
  EXPECT_THROW(Wasserstein2(eye, Eigen::Matrix3d::Identity()),
               DimensionMismatchError);
}

TEST(Wasserstein2Test, MetricAxioms) {
  std::mt19937 gen(1);
  for (int t = 0; t < 200; ++t) {
    const int m = 2 + t % 5;
    const Eigen::MatrixXd a = RandomPd(m, &gen), b = RandomPd(m, &gen),
                          c = RandomPd(m, &gen);
    const double ab = Wasserstein2(a, b);
    EXPECT_GE(ab, 0.);
    EXPECT_NEAR(ab, Wasserstein2(b, a), 1e-10);
    EXPECT_LE(Wasserstein2(a, a), 1e-10);
    EXPECT_LE(ab, Wasserstein2(a, c) + Wasserstein2(c, b) + 1e-10);
  }
}

TEST(Wasserstein2Test, MatchesTraceFormula) {
  std::mt19937 gen(2);
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd a = RandomPd(3, &gen), b = RandomPd(3, &gen);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(a);
    const Eigen::MatrixXd ra = ea.operatorSqrt();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(ra * b * ra);
    const double radical =
        (a + b - 2. * Eigen::MatrixXd(ec.operatorSqrt())).trace();
    EXPECT_NEAR(Wasserstein2(a, b), std::sqrt(std::max(radical, 0.)), 1e-7);
  }
}

}  // namespace
}  // namespace jointcov

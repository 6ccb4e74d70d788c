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


#include "jointcov/problem.h"

#include <memory>
#include <random>

#include "Eigen/Eigenvalues"
#include "Eigen/LU"
#include "gtest/gtest.h"
#include "jointcov/error.h"

namespace jointcov {
namespace {

NoiseGroup MlGroup(int id, int dim) {
  NoiseGroup g;
  g.id = id;
  g.dim = dim;
  g.variant = CovarianceVariant::kMlUnconstrained;
  return g;
}

std::shared_ptr<ManifoldSpec> EuclideanSpec(int dim) {
  auto spec = std::make_shared<ManifoldSpec>();
  spec->AddEuclidean(0, dim);
  return spec;
}

std::shared_ptr<ManifoldSpec> PoseSpec(int n) {
  auto spec = std::make_shared<ManifoldSpec>();
  for (int i = 0; i < n; ++i) spec->AddSe2(i);
  return spec;
}

TEST(ResidualTest, LinearExactFit) {
  auto spec = EuclideanSpec(2);
  const auto f = MeasurementFactor::LinearGaussian(
      0, {0}, Eigen::Matrix2d::Identity(), Eigen::Vector2d(1., 2.), 0);
  const ManifoldPoint x(spec, Eigen::Vector2d(1., 2.));
  EXPECT_EQ(Residual(f, x), Eigen::Vector2d::Zero());
}

TEST(ResidualTest, RelativeSe2Examples) {
  auto spec = PoseSpec(2);
  ManifoldPoint x(spec);
  const auto same = MeasurementFactor::RelativeSe2(0, 0, 1, Pose2(), 0);
  EXPECT_EQ(Residual(same, x), Eigen::Vector3d::Zero());
  x.set_pose(1, Pose2(1., 0., 0.));
  const auto f = MeasurementFactor::RelativeSe2(0, 0, 1, Pose2(1., 0., 0.), 0);
  EXPECT_LE(Residual(f, x).norm(), 1e-15);
}

TEST(ResidualTest, RelativeSe2IsNoiseInTangentSpace) {
  // z = h(x) Exp(eps) gives r = eps.
  auto spec = PoseSpec(2);
  ManifoldPoint x(spec);
  x.set_pose(0, Pose2(0.3, -1., 0.4));
  x.set_pose(1, Pose2(2., 1., -2.));
  const Eigen::Vector3d eps(0.01, -0.02, 0.03);
  const Pose2 z = x.pose(0).inverse() * x.pose(1) * ExpSe2(eps);
  const auto f = MeasurementFactor::RelativeSe2(0, 0, 1, z, 0);
  EXPECT_LE((Residual(f, x) - eps).norm(), 1e-12);
}

TEST(ResidualJacobianTest, LinearAndPrior) {
  auto spec = std::make_shared<ManifoldSpec>();
  spec->AddEuclidean(0, 2).AddEuclidean(1, 1);
  Eigen::MatrixXd h(2, 3);
  h << 1., 2., 3., 4., 5., 6.;
  const auto lin =
      MeasurementFactor::LinearGaussian(0, {0, 1}, h, Eigen::Vector2d(1., 1.), 0);
  const ManifoldPoint x(spec, Eigen::Vector3d(0.5, -1., 2.));
  EXPECT_EQ(ResidualJacobian(lin, x), -h);
  const auto prior =
      MeasurementFactor::PriorEuclidean(1, 0, Eigen::Vector2d(1., 1.), 0);
  EXPECT_EQ(ResidualJacobian(prior, x), -Eigen::MatrixXd::Identity(2, 2));
}

TEST(ResidualJacobianTest, RelativeSe2MatchesFiniteDifferences) {
  auto spec = PoseSpec(2);
  std::mt19937 gen(41);
  std::uniform_real_distribution<double> u(-3., 3.);
  for (int i = 0; i < 50; ++i) {
    ManifoldPoint x(spec);
    x.set_pose(0, Pose2(u(gen), u(gen), u(gen)));
    x.set_pose(1, Pose2(u(gen), u(gen), u(gen)));
    const Pose2 z = x.pose(0).inverse() * x.pose(1) *
                    ExpSe2(Eigen::Vector3d(0.1 * u(gen), 0.1 * u(gen),
                                           0.3 * u(gen)));
    const auto f = MeasurementFactor::RelativeSe2(0, 0, 1, z, 0);
    const Eigen::MatrixXd analytic = ResidualJacobian(f, x);
    const Eigen::MatrixXd numeric = NumericResidualJacobian(f, x);
    EXPECT_LE((analytic - numeric).norm(), 1e-5 * (1. + analytic.norm()));
  }
}

TEST(ResidualJacobianTest, CustomUsesFiniteDifferences) {
  auto spec = EuclideanSpec(2);
  const auto f = MeasurementFactor::Custom(
      0, {0}, 1,
      [](const std::vector<Eigen::VectorXd>& b) {
        return Eigen::VectorXd::Constant(1, b[0][0] * b[0][0] + 3. * b[0][1]);
      },
      0);
  const ManifoldPoint x(spec, Eigen::Vector2d(2., 1.));
  EXPECT_NEAR(Residual(f, x)[0], 7., 1e-15);
  const Eigen::MatrixXd j = ResidualJacobian(f, x);
  EXPECT_NEAR(j(0, 0), 4., 1e-7);
  EXPECT_NEAR(j(0, 1), 3., 1e-7);
}

TEST(SampleCovarianceTest, HandEvaluated) {
  auto spec = EuclideanSpec(2);
  std::vector<MeasurementFactor> factors = {
      MeasurementFactor::PriorEuclidean(0, 0, Eigen::Vector2d(1., 0.), 0),
      MeasurementFactor::PriorEuclidean(1, 0, Eigen::Vector2d(0., 1.), 0)};
  const JointProblem problem(spec, {MlGroup(0, 2)}, factors);
  const ManifoldPoint x(spec);
  EXPECT_TRUE(SampleCovariance(problem, 0, x)
                  .isApprox(0.5 * Eigen::Matrix2d::Identity()));
  const ManifoldPoint fit(spec, Eigen::Vector2d(0.5, 0.5));
  const Eigen::Vector2d r(0.5, -0.5);
  EXPECT_TRUE(SampleCovariance(problem, 0, fit).isApprox(r * r.transpose()));
}

TEST(SampleCovarianceTest, ZeroResiduals) {
  auto spec = EuclideanSpec(3);
  const JointProblem problem(
      spec, {MlGroup(0, 3)},
      {MeasurementFactor::PriorEuclidean(0, 0, Eigen::Vector3d::Zero(), 0)});
  EXPECT_EQ(SampleCovariance(problem, 0, ManifoldPoint(spec)),
            Eigen::Matrix3d::Zero());
}

TEST(SampleCovarianceTest, PreprocessingJacobian) {
  auto spec = EuclideanSpec(2);
  auto f = MeasurementFactor::PriorEuclidean(0, 0, Eigen::Vector2d(2., 0.), 0);
  f.SetPreprocessingJacobian(2. * Eigen::Matrix2d::Identity());
  const JointProblem problem(spec, {MlGroup(0, 2)}, {f});
  Eigen::Matrix2d expected;
  expected << 1., 0., 0., 0.;
  EXPECT_TRUE(
      SampleCovariance(problem, 0, ManifoldPoint(spec)).isApprox(expected));
  EXPECT_TRUE(EffectiveJacobian(problem.factor(0), ManifoldPoint(spec))
                  .isApprox(-0.5 * Eigen::Matrix2d::Identity()));
}

TEST(SampleCovarianceTest, PreprocessingJacobianMustBeWellConditioned) {
  auto f = MeasurementFactor::PriorEuclidean(0, 0, Eigen::Vector2d(2., 0.), 0);
  Eigen::Matrix2d bad;
  bad << 1., 0., 0., 1e-14;
  EXPECT_THROW(f.SetPreprocessingJacobian(bad), InvalidArgumentError);
  EXPECT_THROW(f.SetPreprocessingJacobian(Eigen::Matrix3d::Identity()),
               DimensionMismatchError);
}

TEST(SampleCovarianceTest, PsdAndRankDeficientWithFewMeasurements) {
  auto spec = EuclideanSpec(4);
  std::mt19937 gen(5);
  std::normal_distribution<double> n;
  std::vector<MeasurementFactor> factors;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector4d z(n(gen), n(gen), n(gen), n(gen));
    factors.push_back(MeasurementFactor::PriorEuclidean(i, 0, z, 0));
  }
  const JointProblem problem(spec, {MlGroup(0, 4)}, factors);
  const Eigen::MatrixXd s = SampleCovariance(problem, 0, ManifoldPoint(spec));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  EXPECT_LE(eig.eigenvalues()[0], 1e-12 * s.trace());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  lu.setThreshold(1e-10);
  EXPECT_EQ(lu.rank(), 3);
}

TEST(SampleCovarianceTest, GroupsPartitionTheFactors) {
  auto spec = EuclideanSpec(2);
  std::vector<MeasurementFactor> factors;
  for (int i = 0; i < 6; ++i) {
    factors.push_back(MeasurementFactor::PriorEuclidean(
        i, 0, Eigen::Vector2d(i, -i * 0.5), i % 2));
  }
  const JointProblem problem(spec, {MlGroup(0, 2), MlGroup(1, 2)}, factors);
  EXPECT_EQ(problem.num_measurements(0), 3);
  EXPECT_EQ(problem.num_measurements(1), 3);
  const ManifoldPoint x(spec, Eigen::Vector2d(0.3, 0.1));
  const std::vector<Eigen::MatrixXd> all = SampleCovariances(problem, x);
  Eigen::Matrix2d total = Eigen::Matrix2d::Zero();
  for (const MeasurementFactor& f : problem.factors()) {
    const Eigen::VectorXd r = Residual(f, x);
    total += r * r.transpose();
  }
  EXPECT_TRUE((3. * all[0] + 3. * all[1]).isApprox(total));
  EXPECT_TRUE(all[1].isApprox(SampleCovariance(problem, 1, x)));
}

TEST(JointProblemTest, ValidatesCrossReferences) {
  auto spec = EuclideanSpec(2);
  const auto f = MeasurementFactor::PriorEuclidean(0, 0, Eigen::Vector2d::Zero(), 0);
  NoiseGroup map = MlGroup(0, 2);
  map.variant = CovarianceVariant::kMapUnconstrained;
  EXPECT_THROW(JointProblem(spec, {map}, {f}), InvalidArgumentError);
  EXPECT_THROW(JointProblem(spec, {MlGroup(1, 2)}, {f}), InvalidArgumentError);
  EXPECT_THROW(JointProblem(spec, {MlGroup(0, 3)}, {f}), DimensionMismatchError);
  EXPECT_THROW(JointProblem(spec, {MlGroup(0, 2), MlGroup(1, 2)}, {f}),
               InvalidArgumentError);
  const auto dangling =
      MeasurementFactor::PriorEuclidean(0, 9, Eigen::Vector2d::Zero(), 0);
  EXPECT_THROW(JointProblem(spec, {MlGroup(0, 2)}, {dangling}),
               InvalidArgumentError);
  const auto wrong_kind = MeasurementFactor::RelativeSe2(0, 0, 0, Pose2(), 0);
  NoiseGroup g3 = MlGroup(0, 3);
  EXPECT_THROW(JointProblem(spec, {g3}, {wrong_kind}), InvalidArgumentError);
}

TEST(JointProblemTest, GaugeAndGroupReplacement) {
  auto spec = PoseSpec(3);
  std::vector<MeasurementFactor> factors = {
      MeasurementFactor::RelativeSe2(0, 0, 1, Pose2(1., 0., 0.), 0),
      MeasurementFactor::RelativeSe2(1, 1, 2, Pose2(1., 0., 0.), 0)};
  const JointProblem problem(spec, {MlGroup(0, 3)}, factors, {0});
  EXPECT_TRUE(problem.IsGaugeBlock(0));
  EXPECT_FALSE(problem.IsGaugeBlock(1));
  EXPECT_FALSE(problem.WithGauge({}).IsGaugeBlock(0));
  NoiseGroup fixed = MlGroup(0, 3);
  fixed.variant = CovarianceVariant::kFixed;
  const JointProblem replaced = problem.WithGroups({fixed});
  EXPECT_EQ(replaced.group(0).variant, CovarianceVariant::kFixed);
  EXPECT_EQ(replaced.group(0).information, Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(replaced.factor_block_indices(1), (std::vector<int>{1, 2}));
}

}  // namespace
}  // namespace jointcov

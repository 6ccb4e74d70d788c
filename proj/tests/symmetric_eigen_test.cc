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


#include "jointcov/symmetric_eigen.h"

#include <random>

#include "Eigen/Eigenvalues"
#include "gtest/gtest.h"

namespace jointcov {
namespace {

Eigen::MatrixXd RandomSymmetric(int m, std::mt19937* gen) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) a(i, j) = n(*gen);
  }
  return 0.5 * (a + a.transpose());
}

TEST(JacobiEigenTest, MatchesEigenSolver) {
  std::mt19937 gen(1);
  for (int m : {1, 2, 3, 5, 6}) {
    for (int t = 0; t < 20; ++t) {
      const Eigen::MatrixXd a = RandomSymmetric(m, &gen);
      const SymmetricEigenDecomposition d = JacobiEigen(a);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(a);
      EXPECT_LE((d.eigenvalues - oracle.eigenvalues()).norm(), 1e-12);
      EXPECT_LE((d.eigenvectors * d.eigenvalues.asDiagonal() *
                     d.eigenvectors.transpose() -
                 a)
                    .norm(),
                1e-12);
      EXPECT_LE((d.eigenvectors.transpose() * d.eigenvectors -
                 Eigen::MatrixXd::Identity(m, m))
                    .norm(),
                1e-12);
      for (int i = 1; i < m; ++i) {
        EXPECT_LE(d.eigenvalues[i - 1], d.eigenvalues[i]);
      }
    }
  }
}

TEST(JacobiEigenTest, DiagonalInputIsSortedUnchanged) {
  Eigen::MatrixXd a = Eigen::Vector3d(3., -1., 2.).asDiagonal();
  const SymmetricEigenDecomposition d = JacobiEigen(a);
  EXPECT_EQ(d.eigenvalues, Eigen::Vector3d(-1., 2., 3.));
}

TEST(JacobiEigenTest, Deterministic) {
  std::mt19937 gen(2);
  const Eigen::MatrixXd a = RandomSymmetric(5, &gen);
  const SymmetricEigenDecomposition d1 = JacobiEigen(a);
  const SymmetricEigenDecomposition d2 = JacobiEigen(a);
  EXPECT_EQ(d1.eigenvalues, d2.eigenvalues);
  EXPECT_EQ(d1.eigenvectors, d2.eigenvectors);
}

TEST(SymmetricSqrtTest, SquaresBack) {
  std::mt19937 gen(3);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd b = RandomSymmetric(4, &gen);
    const Eigen::MatrixXd a = b * b.transpose();
    const Eigen::MatrixXd r = SymmetricSqrt(a);
    EXPECT_LE((r * r - a).norm(), 1e-10 * (1. + a.norm()));
    EXPECT_LE((r - r.transpose()).norm(), 1e-14 * (1. + a.norm()));
  }
}

}  // namespace
}  // namespace jointcov

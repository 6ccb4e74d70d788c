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

#ifndef JOINTCOV_SYMMETRIC_EIGEN_H_
#define JOINTCOV_SYMMETRIC_EIGEN_H_

#include "Eigen/Core"

namespace jointcov {

struct SymmetricEigenDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal
};

// Cyclic Jacobi rotations with a fixed sweep order (row-major upper
// triangle). Intended for the small m x m matrices of the covariance
// subproblem; reproducible bit-for-bit on a given platform. Stops once the
// off-diagonal Frobenius norm drops below 1e-13 (relative to ||A||_F).
SymmetricEigenDecomposition JacobiEigen(const Eigen::MatrixXd& a);

// U f(D) U^T for the principal square root, with tiny negative eigenvalues
// clamped to zero.
Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& a);

}  // namespace jointcov

#endif  // JOINTCOV_SYMMETRIC_EIGEN_H_

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "jointcov/error.h"

namespace jointcov {
namespace {

constexpr double kOffDiagonalTolerance = 1e-13;
constexpr int kMaxSweeps = 100;

double OffDiagonalNorm(const Eigen::MatrixXd& a) {
  double sum = 0.;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

}  // namespace

SymmetricEigenDecomposition JacobiEigen(const Eigen::MatrixXd& input) {
  if (input.rows() != input.cols()) {
    throw DimensionMismatchError("JacobiEigen: matrix is not square");
  }
  const int n = static_cast<int>(input.rows());
  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = a.norm();
  const double tolerance = kOffDiagonalTolerance * (scale > 0. ? scale : 1.);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (OffDiagonalNorm(a) <= tolerance) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.) continue;
        // Rotation angle zeroing a(p, q) (Golub & Van Loan, Alg. 8.4.1).
        const double tau = (a(q, q) - a(p, p)) / (2. * apq);
        const double t = (tau >= 0. ? 1. : -1.) /
                         (std::abs(tau) + std::sqrt(1. + tau * tau));
        const double c = 1. / std::sqrt(1. + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&a](int i, int j) { return a(i, i) < a(j, j); });
  SymmetricEigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.eigenvalues[i] = a(order[i], order[i]);
    out.eigenvectors.col(i) = v.col(order[i]);
  }
  return out;
}

Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& a) {
  const SymmetricEigenDecomposition eig = JacobiEigen(a);
  const Eigen::VectorXd roots = eig.eigenvalues.cwiseMax(0.).cwiseSqrt();
  return eig.eigenvectors * roots.asDiagonal() *
         eig.eigenvectors.transpose();
}

}  // namespace jointcov

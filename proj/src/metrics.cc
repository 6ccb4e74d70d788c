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

#include "Eigen/SVD"
#include "jointcov/error.h"
#include "jointcov/symmetric_eigen.h"

namespace jointcov {

double Rmse(const ManifoldPoint& estimate, const ManifoldPoint& truth,
            RmseComponents which) {
  if (!(estimate.spec() == truth.spec())) {
    throw DimensionMismatchError("rmse: manifold specs differ");
  }
  double sum = 0.;
  int count = 0;
  for (int i = 0; i < truth.spec().num_blocks(); ++i) {
    const BlockSpec& b = truth.spec().block(i);
    const Eigen::VectorXd d =
        estimate.block_values(i) - truth.block_values(i);
    if (b.kind == BlockKind::kEuclidean) {
      sum += d.squaredNorm();
      count += b.dim;
      continue;
    }
    sum += d.head<2>().squaredNorm();
    count += 2;
    if (which == RmseComponents::kAll) {
      sum += std::pow(WrapAngle(d[2]), 2);
      count += 1;
    }
  }
  return count == 0 ? 0. : std::sqrt(sum / count);
}

double Wasserstein2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionMismatchError("wasserstein2: shape mismatch");
  }
  // W2^2 = min over orthogonal U of ||a^1/2 - b^1/2 U||_F^2, attained at the
  // polar factor of b^1/2 a^1/2. Avoids the cancellation of the trace form.
  const Eigen::MatrixXd root_a = SymmetricSqrt(a);
  const Eigen::MatrixXd root_b = SymmetricSqrt(b);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      root_b * root_a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd u = svd.matrixU() * svd.matrixV().transpose();
  return (root_a - root_b * u).norm();
}

}  // namespace jointcov

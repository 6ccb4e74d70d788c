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


#ifndef JOINTCOV_METRICS_H_
#define JOINTCOV_METRICS_H_

#include "Eigen/Core"
#include "jointcov/manifold.h"

namespace jointcov {

enum class RmseComponents {
  kAll,        // every coordinate; SE(2) headings as wrapped differences
  kPositions,  // Euclidean blocks and SE(2) translations
};

// sqrt(mean squared coordinate error). No alignment.
double Rmse(const ManifoldPoint& estimate, const ManifoldPoint& truth,
            RmseComponents which = RmseComponents::kAll);

// 2-Wasserstein distance between N(0, a) and N(0, b).
double Wasserstein2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace jointcov

#endif  // JOINTCOV_METRICS_H_

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

#ifndef JOINTCOV_LBFGS_H_
#define JOINTCOV_LBFGS_H_

#include <functional>
#include <vector>

#include "jointcov/manifold.h"

namespace jointcov {

struct LbfgsConfig {
  int memory = 10;
  int max_iterations = 1000;
  // Stop when ||grad||_inf <= gradient_tolerance * max(1, |f|).
  double gradient_tolerance = 1e-10;
  // Also stop once (f_prev - f) / max(1, |f|) stays below this for
  // `stall_iterations` consecutive steps (the gradient can have a round-off
  // floor above gradient_tolerance on stiff problems).
  double function_tolerance = 1e-14;
  int stall_iterations = 3;
  double armijo_constant = 1e-4;
  int max_backtracks = 60;
};

struct LbfgsResult {
  ManifoldPoint x;
  double value = 0.;
  double gradient_norm = 0.;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<double> values;  // f at every accepted iterate, x0 first
};

// Returns f(x) and writes the chart gradient at x (same length as the
// tangent space). Should return +inf (or throw jointcov::Error) when f is
// undefined at x; the line search then backtracks.
using ObjectiveWithGradient =
    std::function<double(const ManifoldPoint& x, TangentVector* gradient)>;

// Limited-memory BFGS in the retraction chart. Each accepted step moves the
// chart center to the new iterate; stored curvature pairs are reused as-is.
LbfgsResult MinimizeLbfgs(const ManifoldPoint& x0,
                          const ObjectiveWithGradient& objective,
                          const LbfgsConfig& config = {});

}  // namespace jointcov

#endif  // JOINTCOV_LBFGS_H_

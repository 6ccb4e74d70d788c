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

#include "jointcov/lbfgs.h"

#include <cmath>
#include <deque>
#include <limits>
#include <utility>

#include "jointcov/error.h"

namespace jointcov {
namespace {

double MaxAbs(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0. : v.cwiseAbs().maxCoeff();
}

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Two-loop recursion: returns -H g.
Eigen::VectorXd Direction(const std::deque<CurvaturePair>& pairs,
                          const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(pairs.size());
  for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
    alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
    q -= alpha[i] * pairs[i].y;
  }
  if (!pairs.empty()) {
    const CurvaturePair& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (size_t i = 0; i < pairs.size(); ++i) {
    const double beta = pairs[i].rho * pairs[i].y.dot(q);
    q += (alpha[i] - beta) * pairs[i].s;
  }
  return -q;
}

}  // namespace

LbfgsResult MinimizeLbfgs(const ManifoldPoint& x0,
                          const ObjectiveWithGradient& objective,
                          const LbfgsConfig& config) {
  const auto evaluate = [&](const ManifoldPoint& x, TangentVector* g) {
    try {
      const double f = objective(x, g);
      return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  LbfgsResult result{x0};
  TangentVector g;
  result.value = objective(x0, &g);  // must be well-defined at the start
  result.values.push_back(result.value);
  std::deque<CurvaturePair> pairs;
  int stalled = 0;

  for (int it = 0; it < config.max_iterations; ++it) {
    result.gradient_norm = MaxAbs(g);
    if (result.gradient_norm <=
        config.gradient_tolerance * std::max(1., std::abs(result.value))) {
      result.converged = true;
      return result;
    }
    Eigen::VectorXd d = Direction(pairs, g);
    double slope = g.dot(d);
    if (!(slope < 0.)) {
      pairs.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    double t = pairs.empty() ? std::min(1., 1. / std::max(MaxAbs(g), 1e-300))
                             : 1.;
    bool accepted = false;
    ManifoldPoint candidate = result.x;
    TangentVector g_new;
    double f_new = 0.;
    for (int k = 0; k < config.max_backtracks; ++k) {
      candidate = BoxPlus(result.x, t * d);
      f_new = evaluate(candidate, &g_new);
      // Small round-off allowance keeps the search alive at the optimum.
      if (f_new <= result.value + config.armijo_constant * t * slope +
                       4e-16 * std::abs(result.value)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      result.line_search_failed = true;
      return result;
    }
    const Eigen::VectorXd s = t * d;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.) {
      pairs.push_back({s, y, 1. / sy});
      if (static_cast<int>(pairs.size()) > config.memory) pairs.pop_front();
    }
    const double previous = result.value;
    result.x = std::move(candidate);
    result.value = f_new;
    g = std::move(g_new);
    result.values.push_back(result.value);
    result.iterations = it + 1;
    if (previous - result.value <=
        config.function_tolerance * std::max(1., std::abs(result.value))) {
      if (++stalled >= config.stall_iterations) {
        result.converged = true;
        break;
      }
    } else {
      stalled = 0;
    }
  }
  result.gradient_norm = MaxAbs(g);
  return result;
}

}  // namespace jointcov

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

#ifndef JOINTCOV_NLS_H_
#define JOINTCOV_NLS_H_

#include <optional>
#include <vector>

#include "Eigen/Core"
#include "Eigen/SparseCore"
#include "jointcov/manifold.h"
#include "jointcov/problem.h"

namespace jointcov {

// One information matrix per noise group, indexed by group id.
using GroupInformation = std::vector<Eigen::MatrixXd>;

enum class StepMode {
  kFullSolve,        // Levenberg-Marquardt to convergence
  kSingleIteration,  // one damped Gauss-Newton step
  kRiemannianGradient,  // one gradient step with Armijo backtracking
};

struct NlsConfig {
  int max_iterations = 100;
  double initial_damping = 1e-4;
  double damping_increase = 10.;
  double damping_decrease = 10.;
  double max_damping = 1e12;
  double relative_cost_tolerance = 1e-9;
  double gradient_tolerance = 1e-8;
  StepMode step_mode = StepMode::kFullSolve;
  // Armijo backtracking for kRiemannianGradient.
  double armijo_initial_step = 1.;
  double armijo_shrink = 0.5;
  double armijo_constant = 1e-4;
  int armijo_max_backtracks = 60;
  // Systems smaller than this are factored densely.
  int dense_threshold = 200;
};

// Gauss-Newton normal equations over the non-gauge blocks.
struct LinearizedSystem {
  Eigen::SparseMatrix<double> hessian;  // J^T W J, full symmetric storage
  Eigen::VectorXd gradient;             // J^T W r
  double cost = 0.;                     // 1/2 sum r^T W r
  // Offset of each spec block in the reduced system, or -1 for gauge blocks.
  std::vector<int> block_offsets;
  int dim = 0;
};

// 1/2 sum_i r_i^T P_g(i) r_i (effective residuals).
double WeightedCost(const JointProblem& problem, const ManifoldPoint& x,
                    const GroupInformation& information);

LinearizedSystem Linearize(const JointProblem& problem, const ManifoldPoint& x,
                           const GroupInformation& information);

// Gradient of WeightedCost in the retraction chart at x, zero on gauge
// blocks. Length = tangent dimension.
TangentVector CostGradient(const JointProblem& problem, const ManifoldPoint& x,
                           const GroupInformation& information);

// Solves (H + damping * diag(H)) dx = -g. Returns nullopt when the matrix is
// numerically singular (pivot below 1e-12 of the largest).
std::optional<Eigen::VectorXd> SolveNormalEquations(
    const LinearizedSystem& system, double damping, int dense_threshold = 200);

// Scatters a reduced step into a full tangent vector (zeros on gauge blocks).
TangentVector ExpandStep(const LinearizedSystem& system,
                         const ManifoldSpec& spec,
                         const Eigen::VectorXd& reduced);

struct NlsIteration {
  int iteration = 0;
  double cost = 0.;
  double damping = 0.;
  double gradient_norm = 0.;
  bool accepted = false;
};

struct NlsResult {
  ManifoldPoint x;
  double cost = 0.;
  std::vector<NlsIteration> trace;
  bool converged = false;
  // Damping blew past max_damping; x is the best iterate found.
  bool damping_failure = false;
};

// Levenberg-Marquardt with multiplicative damping on the fixed-information
// weighted least-squares problem.
NlsResult SolveFixedInformation(const JointProblem& problem,
                                const ManifoldPoint& x_init,
                                const GroupInformation& information,
                                const NlsConfig& config = {});

// One descent step according to config.step_mode (kFullSolve behaves like
// kSingleIteration). Never increases the weighted cost; returns x unchanged
// when no descent step is found.
ManifoldPoint StepOnce(const JointProblem& problem, const ManifoldPoint& x,
                       const GroupInformation& information,
                       const NlsConfig& config = {});

}  // namespace jointcov

#endif  // JOINTCOV_NLS_H_

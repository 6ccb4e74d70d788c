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

#ifndef JOINTCOV_JOINT_H_
#define JOINTCOV_JOINT_H_

#include <vector>

#include "Eigen/Core"
#include "jointcov/covariance.h"
#include "jointcov/lbfgs.h"
#include "jointcov/manifold.h"
#include "jointcov/nls.h"
#include "jointcov/problem.h"

namespace jointcov {

enum class JointAlgorithm { kElimination, kHybridBcd, kBlockExactBcd };

struct JointConfig {
  JointAlgorithm algorithm = JointAlgorithm::kBlockExactBcd;
  // Outer iteration cap for the BCD variants. Elimination is bounded by
  // lbfgs.max_iterations instead.
  int max_outer_iterations = 25;
  // Step 1 of BCD. Hybrid BCD takes one step with nls.step_mode
  // (kFullSolve is treated as kSingleIteration).
  NlsConfig nls;
  LbfgsConfig lbfgs;
  // Converged when |dF| / (1 + |F|) stays below this for two consecutive
  // outer iterations.
  double objective_tolerance = 1e-9;
};

struct JointIteration {
  int iteration = 0;
  // F(x^t, P^{t-1}); equals `objective` for Elimination.
  double objective_after_x_step = 0.;
  // F(x^t, P^t).
  double objective = 0.;
  // Per group: extreme eigenvalues of Sigma = P^-1.
  std::vector<double> sigma_min;
  std::vector<double> sigma_max;
  // ||grad_x F(x^t, P^t)||_inf.
  double gradient_norm = 0.;
  // Wall time of the covariance update (Step 2).
  double covariance_update_ms = 0.;
};

struct JointResult {
  ManifoldPoint x;
  GroupInformation information;
  std::vector<JointIteration> trace;
  int iterations = 0;
  double objective = 0.;
  bool converged = false;
  bool hit_eigenvalue_bound = false;
  // Some ML group had a numerically singular S at an iterate (only
  // possible for eigenvalue-bounded variants; others throw).
  bool ill_posed_ml_detected = false;
  // Step-1 solver or line search gave up early.
  bool warning = false;
};

// gamma_g = k_g + nu_g - m_g - 1 with a prior, k_g otherwise.
std::vector<double> GroupWeights(const JointProblem& problem);

// M_g(x) for every group; S_g(x) for ML and fixed groups.
std::vector<Eigen::MatrixXd> SecondMomentMatrices(const JointProblem& problem,
                                                  const ManifoldPoint& x);

// F(x, P) = sum_g (gamma_g / Gamma) [-log det P_g + <M_g(x), P_g>] with
// Gamma = sum_g gamma_g. With a single group this is exactly
// -log det P + <M(x), P>; with several it is the negative log posterior up
// to scale and constant, whose x-part is proportional to the weighted
// least-squares cost.
double JointObjective(const JointProblem& problem, const ManifoldPoint& x,
                      const GroupInformation& information);
double JointObjectiveFromMoments(const JointProblem& problem,
                                 const std::vector<Eigen::MatrixXd>& moments,
                                 const GroupInformation& information);

// P*(x) for every group (fixed groups keep their information). Throws
// UnboundedProblemError for ill-posed unconstrained/diagonal groups.
std::vector<InnerSolution> OptimalInformation(
    const JointProblem& problem, const std::vector<Eigen::MatrixXd>& moments);

// F(x, P*(x)). Unconstrained and diagonal groups use log det M_g (resp.
// log det Diag M_g) + m_g; bounded groups evaluate the clamped solution.
// The optional gradient is taken in the retraction chart, zero on gauge
// blocks.
double ReducedObjective(const JointProblem& problem, const ManifoldPoint& x,
                        TangentVector* gradient = nullptr);

// Alternates an exact weighted least-squares solve for x with the
// closed-form information update, starting from P0 = P*(x_init).
JointResult RunBlockExactBcd(const JointProblem& problem,
                             const ManifoldPoint& x_init,
                             const JointConfig& config = {});

// Same, but Step 1 is a single descent step.
JointResult RunHybridBcd(const JointProblem& problem,
                         const ManifoldPoint& x_init,
                         const JointConfig& config = {});

// Minimizes the reduced objective with L-BFGS and returns (x*, P*(x*)).
JointResult RunElimination(const JointProblem& problem,
                           const ManifoldPoint& x_init,
                           const JointConfig& config = {});

// Dispatches on config.algorithm.
JointResult RunJoint(const JointProblem& problem, const ManifoldPoint& x_init,
                     const JointConfig& config = {});

// One-shot inner solve at a known (calibration) state.
std::vector<InnerSolution> Calibrate(const JointProblem& problem,
                                     const ManifoldPoint& x_true);

}  // namespace jointcov

#endif  // JOINTCOV_JOINT_H_

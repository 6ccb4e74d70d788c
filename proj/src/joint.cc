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

#include "jointcov/joint.h"

#include <chrono>
#include <cmath>
#include <numeric>
#include <utility>

#include "Eigen/Cholesky"
#include "jointcov/error.h"
#include "jointcov/symmetric_eigen.h"

namespace jointcov {
namespace {

double MaxAbs(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0. : v.cwiseAbs().maxCoeff();
}

double TotalWeight(const std::vector<double>& weights) {
  return std::accumulate(weights.begin(), weights.end(), 0.);
}

GroupInformation InformationOf(const std::vector<InnerSolution>& solutions) {
  GroupInformation out;
  out.reserve(solutions.size());
  for (const InnerSolution& s : solutions) out.push_back(s.information);
  return out;
}

struct UpdateStats {
  bool hit_bound = false;
  bool ml_singular = false;
};

UpdateStats Inspect(const JointProblem& problem,
                    const std::vector<Eigen::MatrixXd>& moments,
                    const std::vector<InnerSolution>& solutions) {
  UpdateStats stats;
  for (int g = 0; g < problem.num_groups(); ++g) {
    for (ActiveBound a : solutions[g].active) {
      if (a != ActiveBound::kNone) stats.hit_bound = true;
    }
    const NoiseGroup& group = problem.group(g);
    if (IsMl(group.variant) &&
        DiagnoseSingularity(moments[g], IsDiagonal(group.variant)).ill_posed) {
      stats.ml_singular = true;
    }
  }
  return stats;
}

JointIteration MakeIteration(int t, const JointProblem& problem,
                             const ManifoldPoint& x,
                             const GroupInformation& information,
                             double objective_after_x_step, double objective,
                             double update_ms) {
  JointIteration it;
  it.iteration = t;
  it.objective_after_x_step = objective_after_x_step;
  it.objective = objective;
  for (const Eigen::MatrixXd& p : information) {
    const Eigen::VectorXd d = JacobiEigen(p).eigenvalues;
    it.sigma_min.push_back(1. / d.maxCoeff());
    it.sigma_max.push_back(1. / d.minCoeff());
  }
  const std::vector<double> weights = GroupWeights(problem);
  it.gradient_norm =
      2. / TotalWeight(weights) * MaxAbs(CostGradient(problem, x, information));
  it.covariance_update_ms = update_ms;
  return it;
}

JointResult RunBcd(const JointProblem& problem, const ManifoldPoint& x_init,
                   const JointConfig& config, bool exact) {
  using Clock = std::chrono::steady_clock;
  JointResult result{x_init};

  auto start = Clock::now();
  std::vector<Eigen::MatrixXd> moments = SecondMomentMatrices(problem, x_init);
  std::vector<InnerSolution> solutions = OptimalInformation(problem, moments);
  double update_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  result.information = InformationOf(solutions);
  UpdateStats stats = Inspect(problem, moments, solutions);
  result.hit_eigenvalue_bound = stats.hit_bound;
  result.ill_posed_ml_detected = stats.ml_singular;

  double objective =
      JointObjectiveFromMoments(problem, moments, result.information);
  result.trace.push_back(MakeIteration(0, problem, result.x,
                                       result.information, objective,
                                       objective, update_ms));
  int stable = 0;
  for (int t = 1; t <= config.max_outer_iterations; ++t) {
    // Step 1: x with P fixed.
    if (exact) {
      NlsResult nls =
          SolveFixedInformation(problem, result.x, result.information,
                                config.nls);
      if (nls.damping_failure) result.warning = true;
      result.x = std::move(nls.x);
    } else {
      NlsConfig step = config.nls;
      if (step.step_mode == StepMode::kFullSolve) {
        step.step_mode = StepMode::kSingleIteration;
      }
      result.x = StepOnce(problem, result.x, result.information, step);
    }

    // Step 2: closed-form information update.
    start = Clock::now();
    moments = SecondMomentMatrices(problem, result.x);
    const double after_x =
        JointObjectiveFromMoments(problem, moments, result.information);
    solutions = OptimalInformation(problem, moments);
    update_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result.information = InformationOf(solutions);
    stats = Inspect(problem, moments, solutions);
    result.hit_eigenvalue_bound = stats.hit_bound;
    result.ill_posed_ml_detected |= stats.ml_singular;

    const double previous = objective;
    objective = JointObjectiveFromMoments(problem, moments, result.information);
    result.trace.push_back(MakeIteration(t, problem, result.x,
                                         result.information, after_x,
                                         objective, update_ms));
    result.iterations = t;
    if (std::abs(objective - previous) / (1. + std::abs(objective)) <
        config.objective_tolerance) {
      if (++stable >= 2) {
        result.converged = true;
        break;
      }
    } else {
      stable = 0;
    }
  }
  result.objective = objective;
  return result;
}

}  // namespace

std::vector<double> GroupWeights(const JointProblem& problem) {
  std::vector<double> weights;
  weights.reserve(problem.num_groups());
  for (const NoiseGroup& g : problem.groups()) {
    const std::optional<WishartPrior> none;
    weights.push_back(ObjectiveWeight(problem.num_measurements(g.id), g.dim,
                                      IsMap(g.variant) ? g.prior : none));
  }
  return weights;
}

std::vector<Eigen::MatrixXd> SecondMomentMatrices(const JointProblem& problem,
                                                  const ManifoldPoint& x) {
  std::vector<Eigen::MatrixXd> moments = SampleCovariances(problem, x);
  for (int g = 0; g < problem.num_groups(); ++g) {
    const NoiseGroup& group = problem.group(g);
    if (IsMap(group.variant)) {
      moments[g] =
          AssembleM(moments[g], problem.num_measurements(g), group.prior);
    }
  }
  return moments;
}

double JointObjectiveFromMoments(const JointProblem& problem,
                                 const std::vector<Eigen::MatrixXd>& moments,
                                 const GroupInformation& information) {
  const std::vector<double> weights = GroupWeights(problem);
  const double total = TotalWeight(weights);
  double f = 0.;
  for (int g = 0; g < problem.num_groups(); ++g) {
    f += weights[g] / total * InnerObjective(moments[g], information[g]);
  }
  return f;
}

double JointObjective(const JointProblem& problem, const ManifoldPoint& x,
                      const GroupInformation& information) {
  if (static_cast<int>(information.size()) != problem.num_groups()) {
    throw DimensionMismatchError("one information matrix per group required");
  }
  return JointObjectiveFromMoments(problem, SecondMomentMatrices(problem, x),
                                   information);
}

std::vector<InnerSolution> OptimalInformation(
    const JointProblem& problem, const std::vector<Eigen::MatrixXd>& moments) {
  std::vector<InnerSolution> out;
  out.reserve(problem.num_groups());
  for (int g = 0; g < problem.num_groups(); ++g) {
    const NoiseGroup& group = problem.group(g);
    if (group.variant == CovarianceVariant::kFixed) {
      InnerSolution fixed;
      fixed.information = group.information;
      fixed.objective = InnerObjective(moments[g], group.information);
      fixed.active.assign(group.dim, ActiveBound::kNone);
      out.push_back(std::move(fixed));
      continue;
    }
    out.push_back(
        SolveInner(moments[g], ShapeOf(group.variant), group.bounds, g));
  }
  return out;
}

double ReducedObjective(const JointProblem& problem, const ManifoldPoint& x,
                        TangentVector* gradient) {
  const std::vector<Eigen::MatrixXd> moments =
      SecondMomentMatrices(problem, x);
  const std::vector<InnerSolution> solutions =
      OptimalInformation(problem, moments);
  const std::vector<double> weights = GroupWeights(problem);
  const double total = TotalWeight(weights);
  double f = 0.;
  for (int g = 0; g < problem.num_groups(); ++g) {
    const NoiseGroup& group = problem.group(g);
    double fg = 0.;
    if (group.variant == CovarianceVariant::kFixed) {
      fg = solutions[g].objective;
    } else {
      switch (ShapeOf(group.variant)) {
        case InnerShape::kUnconstrained: {
          Eigen::LLT<Eigen::MatrixXd> llt(moments[g]);
          if (llt.info() != Eigen::Success) {
            throw UnboundedProblemError(g, 0.);
          }
          const Eigen::MatrixXd l = llt.matrixL();
          fg = 2. * l.diagonal().array().log().sum() + group.dim;
          break;
        }
        case InnerShape::kDiagonal:
          fg = moments[g].diagonal().array().log().sum() + group.dim;
          break;
        case InnerShape::kEig:
        case InnerShape::kDiagEig:
          fg = solutions[g].objective;
          break;
      }
    }
    f += weights[g] / total * fg;
  }
  if (gradient != nullptr) {
    // Envelope theorem: only the explicit x-dependence of <M_g(x), P_g>
    // survives at P = P*(x).
    *gradient =
        2. / total * CostGradient(problem, x, InformationOf(solutions));
  }
  return f;
}

JointResult RunBlockExactBcd(const JointProblem& problem,
                             const ManifoldPoint& x_init,
                             const JointConfig& config) {
  return RunBcd(problem, x_init, config, /*exact=*/true);
}

JointResult RunHybridBcd(const JointProblem& problem,
                         const ManifoldPoint& x_init,
                         const JointConfig& config) {
  return RunBcd(problem, x_init, config, /*exact=*/false);
}

JointResult RunElimination(const JointProblem& problem,
                           const ManifoldPoint& x_init,
                           const JointConfig& config) {
  const ObjectiveWithGradient objective = [&problem](const ManifoldPoint& x,
                                                     TangentVector* grad) {
    return ReducedObjective(problem, x, grad);
  };
  const LbfgsResult lbfgs = MinimizeLbfgs(x_init, objective, config.lbfgs);

  JointResult result{lbfgs.x};
  const std::vector<Eigen::MatrixXd> moments =
      SecondMomentMatrices(problem, result.x);
  const std::vector<InnerSolution> solutions =
      OptimalInformation(problem, moments);
  result.information = InformationOf(solutions);
  const UpdateStats stats = Inspect(problem, moments, solutions);
  result.hit_eigenvalue_bound = stats.hit_bound;
  result.ill_posed_ml_detected = stats.ml_singular;
  result.objective =
      JointObjectiveFromMoments(problem, moments, result.information);
  for (size_t i = 0; i + 1 < lbfgs.values.size(); ++i) {
    JointIteration it;
    it.iteration = static_cast<int>(i);
    it.objective = it.objective_after_x_step = lbfgs.values[i];
    result.trace.push_back(std::move(it));
  }
  result.trace.push_back(MakeIteration(
      static_cast<int>(lbfgs.values.size()) - 1, problem, result.x,
      result.information, result.objective, result.objective, 0.));
  result.iterations = lbfgs.iterations;
  result.converged = lbfgs.converged;
  result.warning = lbfgs.line_search_failed;
  return result;
}

JointResult RunJoint(const JointProblem& problem, const ManifoldPoint& x_init,
                     const JointConfig& config) {
  switch (config.algorithm) {
    case JointAlgorithm::kElimination:
      return RunElimination(problem, x_init, config);
    case JointAlgorithm::kHybridBcd:
      return RunHybridBcd(problem, x_init, config);
    case JointAlgorithm::kBlockExactBcd:
      return RunBlockExactBcd(problem, x_init, config);
  }
  throw InvalidArgumentError("unknown joint algorithm");
}

std::vector<InnerSolution> Calibrate(const JointProblem& problem,
                                     const ManifoldPoint& x_true) {
  return OptimalInformation(problem, SecondMomentMatrices(problem, x_true));
}

}  // namespace jointcov

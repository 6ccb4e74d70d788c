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

#include "jointcov/nls.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "Eigen/Cholesky"
#include "Eigen/SparseCholesky"
#include "jointcov/error.h"

namespace jointcov {
namespace {

constexpr double kSingularPivot = 1e-12;

void CheckInformation(const JointProblem& problem,
                      const GroupInformation& information) {
  if (static_cast<int>(information.size()) != problem.num_groups()) {
    throw DimensionMismatchError("one information matrix per group required");
  }
  for (int g = 0; g < problem.num_groups(); ++g) {
    if (information[g].rows() != problem.group(g).dim ||
        information[g].cols() != problem.group(g).dim) {
      throw DimensionMismatchError("information matrix has wrong size");
    }
  }
}

template <typename Decomposition>
bool PivotsHealthy(const Decomposition& ldlt) {
  const Eigen::VectorXd d = ldlt.vectorD();
  if (d.size() == 0) return true;
  if (!d.allFinite()) return false;
  const double largest = d.cwiseAbs().maxCoeff();
  return d.minCoeff() > kSingularPivot * largest;
}

double MaxAbs(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0. : v.cwiseAbs().maxCoeff();
}

}  // namespace

double WeightedCost(const JointProblem& problem, const ManifoldPoint& x,
                    const GroupInformation& information) {
  CheckInformation(problem, information);
  double cost = 0.;
  for (const MeasurementFactor& f : problem.factors()) {
    const Eigen::VectorXd r = EffectiveResidual(f, x);
    cost += 0.5 * r.dot(information[f.group_id()] * r);
  }
  return cost;
}

LinearizedSystem Linearize(const JointProblem& problem, const ManifoldPoint& x,
                           const GroupInformation& information) {
  CheckInformation(problem, information);
  const ManifoldSpec& spec = problem.spec();
  LinearizedSystem system;
  system.block_offsets.assign(spec.num_blocks(), -1);
  for (int b = 0; b < spec.num_blocks(); ++b) {
    if (problem.IsGaugeBlock(b)) continue;
    system.block_offsets[b] = system.dim;
    system.dim += spec.block(b).dim;
  }
  system.gradient = Eigen::VectorXd::Zero(system.dim);

  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < problem.num_factors(); ++i) {
    const MeasurementFactor& f = problem.factor(i);
    const Eigen::MatrixXd& w = information[f.group_id()];
    const Eigen::VectorXd r = EffectiveResidual(f, x);
    const Eigen::MatrixXd jac = EffectiveJacobian(f, x);
    system.cost += 0.5 * r.dot(w * r);
    const Eigen::MatrixXd wj = w * jac;
    const Eigen::VectorXd wr = w * r;

    const std::vector<int>& blocks = problem.factor_block_indices(i);
    std::vector<int> cols(blocks.size());
    int col = 0;
    for (size_t a = 0; a < blocks.size(); ++a) {
      cols[a] = col;
      col += spec.block(blocks[a]).dim;
    }
    for (size_t a = 0; a < blocks.size(); ++a) {
      const int row_offset = system.block_offsets[blocks[a]];
      if (row_offset < 0) continue;
      const int da = spec.block(blocks[a]).dim;
      const auto ja = jac.middleCols(cols[a], da);
      system.gradient.segment(row_offset, da) += ja.transpose() * wr;
      for (size_t b = 0; b < blocks.size(); ++b) {
        const int col_offset = system.block_offsets[blocks[b]];
        if (col_offset < 0) continue;
        const int db = spec.block(blocks[b]).dim;
        const Eigen::MatrixXd hab =
            ja.transpose() * wj.middleCols(cols[b], db);
        for (int p = 0; p < da; ++p) {
          for (int q = 0; q < db; ++q) {
            triplets.emplace_back(row_offset + p, col_offset + q, hab(p, q));
          }
        }
      }
    }
  }
  system.hessian.resize(system.dim, system.dim);
  system.hessian.setFromTriplets(triplets.begin(), triplets.end());
  return system;
}

TangentVector CostGradient(const JointProblem& problem, const ManifoldPoint& x,
                           const GroupInformation& information) {
  CheckInformation(problem, information);
  const ManifoldSpec& spec = problem.spec();
  TangentVector grad = TangentVector::Zero(spec.tangent_dim());
  for (int i = 0; i < problem.num_factors(); ++i) {
    const MeasurementFactor& f = problem.factor(i);
    const Eigen::VectorXd wr = information[f.group_id()] * EffectiveResidual(f, x);
    const Eigen::MatrixXd jac = EffectiveJacobian(f, x);
    int col = 0;
    for (int b : problem.factor_block_indices(i)) {
      const BlockSpec& block = spec.block(b);
      if (!problem.IsGaugeBlock(b)) {
        grad.segment(block.offset, block.dim) +=
            jac.middleCols(col, block.dim).transpose() * wr;
      }
      col += block.dim;
    }
  }
  return grad;
}

std::optional<Eigen::VectorXd> SolveNormalEquations(
    const LinearizedSystem& system, double damping, int dense_threshold) {
  if (system.dim == 0) return Eigen::VectorXd();
  Eigen::SparseMatrix<double> a = system.hessian;
  if (damping > 0.) {
    for (int i = 0; i < system.dim; ++i) {
      const double d = std::max(system.hessian.coeff(i, i), 1e-12);
      a.coeffRef(i, i) += damping * d;
    }
  }
  if (system.dim < dense_threshold) {
    const Eigen::MatrixXd dense(a);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(dense);
    if (ldlt.info() != Eigen::Success || !PivotsHealthy(ldlt)) {
      return std::nullopt;
    }
    Eigen::VectorXd step = ldlt.solve(-system.gradient);
    if (!step.allFinite()) return std::nullopt;
    return step;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                        Eigen::AMDOrdering<int>>
      ldlt(a);
  if (ldlt.info() != Eigen::Success || !PivotsHealthy(ldlt)) {
    return std::nullopt;
  }
  Eigen::VectorXd step = ldlt.solve(-system.gradient);
  if (ldlt.info() != Eigen::Success || !step.allFinite()) return std::nullopt;
  return step;
}

TangentVector ExpandStep(const LinearizedSystem& system,
                         const ManifoldSpec& spec,
                         const Eigen::VectorXd& reduced) {
  TangentVector full = TangentVector::Zero(spec.tangent_dim());
  for (int b = 0; b < spec.num_blocks(); ++b) {
    const int offset = system.block_offsets[b];
    if (offset < 0) continue;
    const BlockSpec& block = spec.block(b);
    full.segment(block.offset, block.dim) = reduced.segment(offset, block.dim);
  }
  return full;
}

NlsResult SolveFixedInformation(const JointProblem& problem,
                                const ManifoldPoint& x_init,
                                const GroupInformation& information,
                                const NlsConfig& config) {
  NlsResult result{x_init};
  double damping = config.initial_damping;
  LinearizedSystem system = Linearize(problem, x_init, information);
  result.cost = system.cost;

  for (int it = 0; it < config.max_iterations; ++it) {
    const double gradient_norm = MaxAbs(system.gradient);
    if (gradient_norm <= config.gradient_tolerance || system.cost == 0.) {
      result.converged = true;
      break;
    }
    bool accepted = false;
    bool checked_decrement = false;
    while (!accepted) {
      if (damping > config.max_damping) {
        result.damping_failure = true;
        return result;
      }
      const std::optional<Eigen::VectorXd> step =
          SolveNormalEquations(system, damping, config.dense_threshold);
      if (step) {
        ManifoldPoint candidate = BoxPlus(
            result.x, ExpandStep(system, problem.spec(), *step));
        double cost = std::numeric_limits<double>::infinity();
        try {
          cost = WeightedCost(problem, candidate, information);
        } catch (const IllConditionedLogError&) {
        }
        if (cost < system.cost) {
          const double previous = system.cost;
          result.x = std::move(candidate);
          system = Linearize(problem, result.x, information);
          result.cost = system.cost;
          damping = std::max(damping / config.damping_decrease, 1e-15);
          accepted = true;
          result.trace.push_back(
              {it + 1, result.cost, damping, MaxAbs(system.gradient), true});
          if ((previous - result.cost) <=
              config.relative_cost_tolerance * previous) {
            result.converged = true;
            return result;
          }
          break;
        }
      }
      result.trace.push_back({it + 1, system.cost, damping, gradient_norm,
                              false});
      if (!checked_decrement) {
        // Nothing left to gain beyond round-off: treat as converged.
        checked_decrement = true;
        const std::optional<Eigen::VectorXd> gn =
            SolveNormalEquations(system, 1e-12, config.dense_threshold);
        if (gn && -0.5 * system.gradient.dot(*gn) <=
                      config.relative_cost_tolerance * system.cost) {
          result.converged = true;
          return result;
        }
      }
      damping = damping == 0. ? 1e-4 : damping * config.damping_increase;
    }
  }
  return result;
}

ManifoldPoint StepOnce(const JointProblem& problem, const ManifoldPoint& x,
                       const GroupInformation& information,
                       const NlsConfig& config) {
  if (config.step_mode == StepMode::kRiemannianGradient) {
    const TangentVector grad = CostGradient(problem, x, information);
    const double cost = WeightedCost(problem, x, information);
    const double g2 = grad.squaredNorm();
    if (std::sqrt(g2) <= config.gradient_tolerance) return x;
    double eta = config.armijo_initial_step;
    for (int k = 0; k < config.armijo_max_backtracks; ++k) {
      ManifoldPoint candidate = BoxPlus(x, -eta * grad);
      double trial = std::numeric_limits<double>::infinity();
      try {
        trial = WeightedCost(problem, candidate, information);
      } catch (const IllConditionedLogError&) {
      }
      if (trial <= cost - config.armijo_constant * eta * g2) return candidate;
      eta *= config.armijo_shrink;
    }
    return x;
  }

  const LinearizedSystem system = Linearize(problem, x, information);
  if (MaxAbs(system.gradient) <= config.gradient_tolerance) return x;
  // Undamped Gauss-Newton first, then increasing Marquardt damping.
  double damping = 0.;
  while (damping <= config.max_damping) {
    const std::optional<Eigen::VectorXd> step =
        SolveNormalEquations(system, damping, config.dense_threshold);
    if (step) {
      ManifoldPoint candidate =
          BoxPlus(x, ExpandStep(system, problem.spec(), *step));
      double cost = std::numeric_limits<double>::infinity();
      try {
        cost = WeightedCost(problem, candidate, information);
      } catch (const IllConditionedLogError&) {
      }
      if (cost < system.cost) return candidate;
    }
    damping = damping == 0. ? config.initial_damping
                            : damping * config.damping_increase;
  }
  return x;
}

}  // namespace jointcov

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

#include "jointcov/covariance.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "Eigen/Cholesky"
#include "Eigen/Eigenvalues"
#include "jointcov/error.h"
#include "jointcov/symmetric_eigen.h"

namespace jointcov {
namespace {

Eigen::MatrixXd Symmetrize(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

void CheckSquare(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionMismatchError(std::string(what) + ": not a square matrix");
  }
}

void CheckBounds(const EigenvalueBounds& bounds) {
  if (!(bounds.min > 0.) || bounds.max < bounds.min) {
    throw InvalidArgumentError(
        "eigenvalue bounds require lambda_max >= lambda_min > 0");
  }
}

// Clamp a covariance eigenvalue (or variance) to the bounds, returning the
// matching information value.
double ClampedInformation(double d, const EigenvalueBounds& bounds,
                          ActiveBound* active) {
  if (d <= bounds.min) {
    *active = ActiveBound::kLower;
    return 1. / bounds.min;
  }
  if (d >= bounds.max) {
    *active = ActiveBound::kUpper;
    return 1. / bounds.max;
  }
  *active = ActiveBound::kNone;
  return 1. / d;
}

Eigen::MatrixXd SpdInverse(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("matrix is not positive definite");
  }
  return Symmetrize(
      llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
}

}  // namespace

bool IsMap(CovarianceVariant v) {
  switch (v) {
    case CovarianceVariant::kMapUnconstrained:
    case CovarianceVariant::kMapDiagonal:
    case CovarianceVariant::kMapEig:
    case CovarianceVariant::kMapDiagEig:
      return true;
    default:
      return false;
  }
}

bool IsMl(CovarianceVariant v) {
  return !IsMap(v) && v != CovarianceVariant::kFixed;
}

InnerShape ShapeOf(CovarianceVariant v) {
  switch (v) {
    case CovarianceVariant::kMapUnconstrained:
    case CovarianceVariant::kMlUnconstrained:
      return InnerShape::kUnconstrained;
    case CovarianceVariant::kMapDiagonal:
    case CovarianceVariant::kMlDiagonal:
      return InnerShape::kDiagonal;
    case CovarianceVariant::kMapEig:
    case CovarianceVariant::kMlEig:
      return InnerShape::kEig;
    case CovarianceVariant::kMapDiagEig:
    case CovarianceVariant::kMlDiagEig:
      return InnerShape::kDiagEig;
    case CovarianceVariant::kFixed:
      break;
  }
  throw InvalidArgumentError("fixed covariance has no inner problem");
}

bool UsesEigenvalueBounds(CovarianceVariant v) {
  if (v == CovarianceVariant::kFixed) return false;
  const InnerShape s = ShapeOf(v);
  return s == InnerShape::kEig || s == InnerShape::kDiagEig;
}

bool IsDiagonal(CovarianceVariant v) {
  if (v == CovarianceVariant::kFixed) return false;
  const InnerShape s = ShapeOf(v);
  return s == InnerShape::kDiagonal || s == InnerShape::kDiagEig;
}

std::string ToString(CovarianceVariant v) {
  switch (v) {
    case CovarianceVariant::kMapUnconstrained: return "map";
    case CovarianceVariant::kMapDiagonal: return "map-diag";
    case CovarianceVariant::kMapEig: return "map-eig";
    case CovarianceVariant::kMapDiagEig: return "map-diag-eig";
    case CovarianceVariant::kMlUnconstrained: return "ml";
    case CovarianceVariant::kMlDiagonal: return "ml-diag";
    case CovarianceVariant::kMlEig: return "ml-eig";
    case CovarianceVariant::kMlDiagEig: return "ml-diag-eig";
    case CovarianceVariant::kFixed: return "fixed";
  }
  return "unknown";
}

CovarianceVariant ParseCovarianceVariant(const std::string& name) {
  for (CovarianceVariant v :
       {CovarianceVariant::kMapUnconstrained, CovarianceVariant::kMapDiagonal,
        CovarianceVariant::kMapEig, CovarianceVariant::kMapDiagEig,
        CovarianceVariant::kMlUnconstrained, CovarianceVariant::kMlDiagonal,
        CovarianceVariant::kMlEig, CovarianceVariant::kMlDiagEig,
        CovarianceVariant::kFixed}) {
    if (ToString(v) == name) return v;
  }
  throw InvalidArgumentError("unknown covariance variant '" + name + "'");
}

WishartPrior::WishartPrior(Eigen::MatrixXd scale, double dof)
    : scale_(Symmetrize(scale)), dof_(dof) {
  CheckSquare(scale_, "Wishart scale");
  if (dof_ < dim() + 1) {
    throw InvalidArgumentError("Wishart degrees of freedom must be >= m + 1");
  }
  scale_inverse_ = SpdInverse(scale_);
}

WishartPrior ModeMatchPrior(const Eigen::MatrixXd& sigma0, double prior_weight,
                            int num_measurements) {
  CheckSquare(sigma0, "sigma0");
  if (!(prior_weight > 0.)) {
    throw InvalidArgumentError("prior weight must be positive");
  }
  if (num_measurements < 1) {
    throw InvalidArgumentError("mode matching needs k >= 1");
  }
  const int m = static_cast<int>(sigma0.rows());
  const Eigen::MatrixXd scale_inverse =
      prior_weight * num_measurements * Symmetrize(sigma0);
  WishartPrior prior(SpdInverse(scale_inverse),
                     prior_weight * num_measurements + m + 1);
  prior.scale_inverse_ = scale_inverse;
  prior.provenance_ =
      WishartPrior::ModeMatchProvenance{sigma0, prior_weight, num_measurements};
  return prior;
}

WishartPrior FixedDofPrior(const Eigen::MatrixXd& sigma0, double dof) {
  CheckSquare(sigma0, "sigma0");
  const int m = static_cast<int>(sigma0.rows());
  if (!(dof > m + 1)) {
    throw InvalidArgumentError("fixed-dof prior needs nu > m + 1");
  }
  return WishartPrior(SpdInverse(sigma0) / (dof - m - 1), dof);
}

double ObjectiveWeight(int num_measurements, int dim,
                       const std::optional<WishartPrior>& prior) {
  if (!prior) return num_measurements;
  return num_measurements + prior->dof() - dim - 1;
}

Eigen::MatrixXd AssembleM(const Eigen::MatrixXd& s, int num_measurements,
                          const std::optional<WishartPrior>& prior) {
  CheckSquare(s, "sample covariance");
  if (!prior) return s;
  const int m = static_cast<int>(s.rows());
  if (prior->dim() != m) {
    throw DimensionMismatchError("prior dimension does not match residuals");
  }
  const double gamma = ObjectiveWeight(num_measurements, m, prior);
  if (!(gamma > 0.)) {
    throw InvalidArgumentError("k + nu - m - 1 must be positive");
  }
  return Symmetrize((num_measurements * s + prior->scale_inverse()) / gamma);
}

double InnerObjective(const Eigen::MatrixXd& m, const Eigen::MatrixXd& p) {
  CheckSquare(p, "information");
  if (m.rows() != p.rows() || m.cols() != p.cols()) {
    throw DimensionMismatchError("inner objective: size mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Symmetrize(p));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("inner objective: P is not positive definite");
  }
  const double logdet =
      2. * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -logdet + m.cwiseProduct(p).sum();
}

double DefaultSingularityThreshold(const Eigen::MatrixXd& s) {
  return 1e-12 * std::max(s.trace(), 0.) / static_cast<double>(s.rows());
}

SingularityReport DiagnoseSingularity(const Eigen::MatrixXd& s, bool diagonal,
                                      std::optional<double> threshold) {
  CheckSquare(s, "sample covariance");
  SingularityReport report;
  report.threshold = threshold.value_or(DefaultSingularityThreshold(s));
  const SymmetricEigenDecomposition eig = JacobiEigen(s);
  report.min_eigenvalue = eig.eigenvalues.minCoeff();
  report.min_diagonal = s.diagonal().minCoeff();
  report.rank = static_cast<int>(
      (eig.eigenvalues.array() > report.threshold).count());
  report.ill_posed = diagonal ? report.min_diagonal <= report.threshold
                              : report.min_eigenvalue <= report.threshold;
  return report;
}

InnerSolution SolveInnerUnconstrained(const Eigen::MatrixXd& m, int group_id) {
  CheckSquare(m, "M");
  const SingularityReport report = DiagnoseSingularity(m);
  if (report.ill_posed) {
    throw UnboundedProblemError(group_id, report.min_eigenvalue);
  }
  InnerSolution out;
  try {
    out.information = SpdInverse(m);
  } catch (const NotPositiveDefiniteError&) {
    throw UnboundedProblemError(group_id, report.min_eigenvalue);
  }
  out.objective = InnerObjective(m, out.information);
  out.active.assign(m.rows(), ActiveBound::kNone);
  return out;
}

InnerSolution SolveInnerDiagonal(const Eigen::MatrixXd& m, int group_id) {
  CheckSquare(m, "M");
  const SingularityReport report = DiagnoseSingularity(m, /*diagonal=*/true);
  if (report.ill_posed) {
    throw UnboundedProblemError(group_id, report.min_diagonal);
  }
  InnerSolution out;
  out.information = m.diagonal().cwiseInverse().asDiagonal();
  out.objective = InnerObjective(m, out.information);
  out.active.assign(m.rows(), ActiveBound::kNone);
  return out;
}

InnerSolution SolveInnerEig(const Eigen::MatrixXd& m,
                            const EigenvalueBounds& bounds) {
  CheckSquare(m, "M");
  CheckBounds(bounds);
  const SymmetricEigenDecomposition eig = JacobiEigen(m);
  const int n = static_cast<int>(m.rows());
  InnerSolution out;
  out.active.resize(n);
  Eigen::VectorXd lambda(n);
  for (int i = 0; i < n; ++i) {
    lambda[i] = ClampedInformation(eig.eigenvalues[i], bounds, &out.active[i]);
  }
  out.information = Symmetrize(eig.eigenvectors * lambda.asDiagonal() *
                               eig.eigenvectors.transpose());
  out.objective = InnerObjective(m, out.information);
  return out;
}

InnerSolution SolveInnerDiagEig(const Eigen::MatrixXd& m,
                                const EigenvalueBounds& bounds) {
  CheckSquare(m, "M");
  CheckBounds(bounds);
  const int n = static_cast<int>(m.rows());
  InnerSolution out;
  out.active.resize(n);
  Eigen::VectorXd lambda(n);
  for (int i = 0; i < n; ++i) {
    lambda[i] = ClampedInformation(m(i, i), bounds, &out.active[i]);
  }
  out.information = lambda.asDiagonal();
  out.objective = InnerObjective(m, out.information);
  return out;
}

InnerSolution SolveInner(const Eigen::MatrixXd& m, InnerShape shape,
                         const EigenvalueBounds& bounds, int group_id) {
  switch (shape) {
    case InnerShape::kUnconstrained:
      return SolveInnerUnconstrained(m, group_id);
    case InnerShape::kDiagonal:
      return SolveInnerDiagonal(m, group_id);
    case InnerShape::kEig:
      return SolveInnerEig(m, bounds);
    case InnerShape::kDiagEig:
      return SolveInnerDiagEig(m, bounds);
  }
  throw InvalidArgumentError("unknown inner shape");
}

Eigen::MatrixXd NumericInnerOracle(const Eigen::MatrixXd& m, InnerShape shape,
                                   const EigenvalueBounds& bounds,
                                   double tolerance, int max_iterations) {
  CheckSquare(m, "M");
  const int n = static_cast<int>(m.rows());
  const bool bounded =
      shape == InnerShape::kEig || shape == InnerShape::kDiagEig;
  const bool diagonal =
      shape == InnerShape::kDiagonal || shape == InnerShape::kDiagEig;
  if (bounded) CheckBounds(bounds);
  // Feasible information eigenvalues / entries.
  const double lo = bounded ? 1. / bounds.max : 1e-12;
  const double hi =
      bounded ? 1. / bounds.min : std::numeric_limits<double>::infinity();

  // Iterates live in a flat vector: the diagonal for diagonal shapes, the
  // full (symmetric) matrix otherwise. Projection and objective use Eigen's
  // own eigensolver and Cholesky so the oracle shares no code with the
  // closed forms it validates.
  const auto to_matrix = [&](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
    if (diagonal) return v.asDiagonal();
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
  };
  const auto to_vector = [&](const Eigen::MatrixXd& p) -> Eigen::VectorXd {
    if (diagonal) return p.diagonal();
    return Eigen::Map<const Eigen::VectorXd>(p.data(), n * n);
  };
  const auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    if (diagonal) return v.cwiseMax(lo).cwiseMin(hi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Symmetrize(to_matrix(v)));
    const Eigen::VectorXd d = es.eigenvalues().cwiseMax(lo).cwiseMin(hi);
    return to_vector(Symmetrize(es.eigenvectors() * d.asDiagonal() *
                                es.eigenvectors().transpose()));
  };
  // Returns +inf outside the PD cone.
  const auto objective = [&](const Eigen::VectorXd& v) {
    Eigen::LLT<Eigen::MatrixXd> llt(Symmetrize(to_matrix(v)));
    if (llt.info() != Eigen::Success) {
      return std::numeric_limits<double>::infinity();
    }
    const Eigen::MatrixXd l = llt.matrixL();
    return -2. * l.diagonal().array().log().sum() +
           m.cwiseProduct(to_matrix(v)).sum();
  };
  const auto gradient = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    if (diagonal) return m.diagonal() - v.cwiseInverse();
    Eigen::LLT<Eigen::MatrixXd> llt(Symmetrize(to_matrix(v)));
    const Eigen::MatrixXd inv = Symmetrize(
        llt.solve(Eigen::MatrixXd::Identity(n, n)));
    return to_vector(Symmetrize(m)) - to_vector(inv);
  };

  // P (M - P^-1) P, the gradient in the affine-invariant metric.
  const auto scaled = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& g) {
    const Eigen::MatrixXd p = to_matrix(v);
    if (diagonal) return Eigen::VectorXd(v.cwiseProduct(g).cwiseProduct(v));
    return to_vector(Symmetrize(p * to_matrix(g) * p));
  };

  const double trace = std::max(m.trace(), 1e-12);
  Eigen::VectorXd x = project(to_vector(
      Eigen::MatrixXd::Identity(n, n) * (static_cast<double>(n) / trace)));
  double f = objective(x);
  constexpr double kArmijo = 1e-4;
  // Backtracks along the projection arc x(t) = proj(x - t dir).
  const auto arc_search = [&](const Eigen::VectorXd& g,
                              const Eigen::VectorXd& dir, Eigen::VectorXd* out,
                              double* f_out) {
    double t = 1.;
    for (int ls = 0; ls < 100; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = project(x - t * dir);
      const double decrease = g.dot(trial - x);
      if (!(decrease < 0.)) continue;
      const double f_trial = objective(trial);
      // The allowance lets steps continue below the objective's round-off
      // floor, where only the stationarity measure still resolves progress.
      if (f_trial <= f + kArmijo * decrease + 1e-15 * std::abs(f)) {
        *out = trial;
        *f_out = f_trial;
        return true;
      }
    }
    return false;
  };
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd g = gradient(x);
    const Eigen::VectorXd natural = scaled(x, g);
    const double scale = std::max(1., x.norm());
    if ((x - project(x - natural)).norm() < tolerance * scale) {
      return to_matrix(x);
    }
    Eigen::VectorXd x_new;
    double f_new = f;
    if (!arc_search(g, natural, &x_new, &f_new) &&
        !arc_search(g, g, &x_new, &f_new)) {
      // No representable decrease left: round-off floor near the optimum.
      if ((x - project(x - natural)).norm() < 1e-6 * scale) {
        return to_matrix(x);
      }
      break;
    }
    x = x_new;
    f = f_new;
  }
  throw ConvergenceError("numeric inner oracle did not converge");
}

}  // namespace jointcov

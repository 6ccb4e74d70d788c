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

#ifndef JOINTCOV_COVARIANCE_H_
#define JOINTCOV_COVARIANCE_H_

#include <optional>
#include <string>
#include <vector>

#include "Eigen/Core"

namespace jointcov {

// How the information matrix of a noise group is estimated. MAP variants
// blend a Wishart prior into the second-moment matrix; ML variants use the
// sample covariance directly; kFixed keeps the user-supplied information.
enum class CovarianceVariant {
  kMapUnconstrained,
  kMapDiagonal,
  kMapEig,
  kMapDiagEig,
  kMlUnconstrained,
  kMlDiagonal,
  kMlEig,
  kMlDiagEig,
  kFixed,
};

// Shape of the feasible set, independent of MAP/ML.
enum class InnerShape { kUnconstrained, kDiagonal, kEig, kDiagEig };

bool IsMap(CovarianceVariant variant);
bool IsMl(CovarianceVariant variant);
InnerShape ShapeOf(CovarianceVariant variant);  // throws for kFixed
bool UsesEigenvalueBounds(CovarianceVariant variant);
bool IsDiagonal(CovarianceVariant variant);
std::string ToString(CovarianceVariant variant);
CovarianceVariant ParseCovarianceVariant(const std::string& name);

// Bounds on the eigenvalues of the covariance (not the information).
struct EigenvalueBounds {
  double min = 1e-4;
  double max = 1e4;
};

class WishartPrior {
 public:
  struct ModeMatchProvenance {
    Eigen::MatrixXd sigma0;
    double prior_weight = 0.;
    int num_measurements = 0;
  };

  // Requires scale > 0 and dof >= m + 1.
  WishartPrior(Eigen::MatrixXd scale, double dof);

  const Eigen::MatrixXd& scale() const { return scale_; }
  const Eigen::MatrixXd& scale_inverse() const { return scale_inverse_; }
  double dof() const { return dof_; }
  int dim() const { return static_cast<int>(scale_.rows()); }
  const std::optional<ModeMatchProvenance>& provenance() const {
    return provenance_;
  }

 private:
  friend WishartPrior ModeMatchPrior(const Eigen::MatrixXd&, double, int);

  Eigen::MatrixXd scale_;
  Eigen::MatrixXd scale_inverse_;
  double dof_;
  std::optional<ModeMatchProvenance> provenance_;
};

// Chooses (V, nu) so that the prior mode equals sigma0^-1 and the prior
// carries weight `prior_weight` relative to k measurements:
//   V = (w k sigma0)^-1,  nu = w k + m + 1.
WishartPrior ModeMatchPrior(const Eigen::MatrixXd& sigma0, double prior_weight,
                            int num_measurements);

// Alternative construction with nu chosen independently of k; V is set so
// that the mode (nu - m - 1) V equals sigma0^-1. Requires nu > m + 1.
WishartPrior FixedDofPrior(const Eigen::MatrixXd& sigma0, double dof);

// M = (k S + V^-1) / (k + nu - m - 1) with a prior, S itself without.
Eigen::MatrixXd AssembleM(const Eigen::MatrixXd& sample_covariance,
                          int num_measurements,
                          const std::optional<WishartPrior>& prior);

// Normalizer gamma = k + nu - m - 1 (or k without a prior).
double ObjectiveWeight(int num_measurements, int dim,
                       const std::optional<WishartPrior>& prior);

enum class ActiveBound { kNone, kLower, kUpper };

struct InnerSolution {
  Eigen::MatrixXd information;  // P*
  double objective = 0.;        // -log det P* + <M, P*>
  // Per eigenvalue (eig) or diagonal entry (diag-eig) of the covariance:
  // kLower if clamped at lambda_min, kUpper if clamped at lambda_max.
  std::vector<ActiveBound> active;
};

// -log det P + <M, P>. Throws NotPositiveDefiniteError unless P > 0.
double InnerObjective(const Eigen::MatrixXd& m, const Eigen::MatrixXd& p);

// Closed-form minimizers of -log det P + <M, P> over the four feasible sets.
// `group_id` only labels UnboundedProblemError.
InnerSolution SolveInnerUnconstrained(const Eigen::MatrixXd& m,
                                      int group_id = -1);
InnerSolution SolveInnerDiagonal(const Eigen::MatrixXd& m, int group_id = -1);
InnerSolution SolveInnerEig(const Eigen::MatrixXd& m,
                            const EigenvalueBounds& bounds);
InnerSolution SolveInnerDiagEig(const Eigen::MatrixXd& m,
                                const EigenvalueBounds& bounds);
InnerSolution SolveInner(const Eigen::MatrixXd& m, InnerShape shape,
                         const EigenvalueBounds& bounds, int group_id = -1);

struct SingularityReport {
  double min_eigenvalue = 0.;
  double min_diagonal = 0.;
  int rank = 0;
  double threshold = 0.;
  bool ill_posed = false;
};

// Relative default threshold: 1e-12 * trace(S) / m.
double DefaultSingularityThreshold(const Eigen::MatrixXd& s);

// Flags the unconstrained (or, with `diagonal`, the diagonal) ML inner
// problem as unbounded when the smallest eigenvalue (diagonal entry) of S is
// at or below the threshold.
SingularityReport DiagnoseSingularity(
    const Eigen::MatrixXd& s, bool diagonal = false,
    std::optional<double> threshold = std::nullopt);

// Slow validation oracle: projected descent on P along P (M - P^-1) P with
// projection onto the feasible set (eigenvalue clamp, or entrywise clamp for
// diagonal shapes). Stops once the projected step is below `tolerance`
// relative to max(1, |P|).
// Throws ConvergenceError after `max_iterations`.
Eigen::MatrixXd NumericInnerOracle(const Eigen::MatrixXd& m, InnerShape shape,
                                   const EigenvalueBounds& bounds,
                                   double tolerance = 1e-10,
                                   int max_iterations = 1000000);

}  // namespace jointcov

#endif  // JOINTCOV_COVARIANCE_H_

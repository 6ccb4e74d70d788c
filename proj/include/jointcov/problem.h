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

#ifndef JOINTCOV_PROBLEM_H_
#define JOINTCOV_PROBLEM_H_

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "Eigen/Core"
#include "jointcov/covariance.h"
#include "jointcov/manifold.h"

namespace jointcov {

enum class ResidualKind { kLinearGaussian, kRelativeSe2, kPriorEuclidean, kCustom };

// Receives the storage vectors of the connected blocks, in factor order.
using CustomResidualFunction =
    std::function<Eigen::VectorXd(const std::vector<Eigen::VectorXd>&)>;

// One measurement z_i with residual r_i(x) = z_i [-] h_i(x).
class MeasurementFactor {
 public:
  // h(x) = H [x_b1; x_b2; ...] over Euclidean blocks.
  static MeasurementFactor LinearGaussian(int id, std::vector<int> block_ids,
                                          Eigen::MatrixXd h, Eigen::VectorXd z,
                                          int group_id);
  // h(x) = pose_from^-1 * pose_to.
  static MeasurementFactor RelativeSe2(int id, int from_block, int to_block,
                                       const Pose2& z, int group_id);
  // h(x) = x_b for a Euclidean block.
  static MeasurementFactor PriorEuclidean(int id, int block_id,
                                          Eigen::VectorXd z, int group_id);
  // Residual computed by `fn`; Jacobians by central differences.
  static MeasurementFactor Custom(int id, std::vector<int> block_ids,
                                  int residual_dim, CustomResidualFunction fn,
                                  int group_id);

  // Attaches the Jacobian J_i of a measurement preprocessing step. The noise
  // of the transformed measurement is J_i eps_i, so J_i^-1 r_i enters the
  // sample covariance and the weighted cost. J_i must be square and
  // well-conditioned (cond < 1e12).
  MeasurementFactor& SetPreprocessingJacobian(const Eigen::MatrixXd& j);

  int id() const { return id_; }
  ResidualKind kind() const { return kind_; }
  const std::vector<int>& block_ids() const { return block_ids_; }
  int group_id() const { return group_id_; }
  int residual_dim() const { return residual_dim_; }
  const Eigen::VectorXd& measurement() const { return z_; }
  const Eigen::MatrixXd& linear_map() const { return h_; }
  const std::optional<Eigen::MatrixXd>& preprocessing_jacobian() const {
    return j_;
  }
  const std::optional<Eigen::MatrixXd>& preprocessing_jacobian_inverse()
      const {
    return j_inverse_;
  }
  const CustomResidualFunction& custom_function() const { return custom_; }

 private:
  MeasurementFactor() = default;

  int id_ = 0;
  ResidualKind kind_ = ResidualKind::kLinearGaussian;
  std::vector<int> block_ids_;
  int group_id_ = 0;
  int residual_dim_ = 0;
  Eigen::VectorXd z_;
  Eigen::MatrixXd h_;
  CustomResidualFunction custom_;
  std::optional<Eigen::MatrixXd> j_;
  std::optional<Eigen::MatrixXd> j_inverse_;
};

struct NoiseGroup {
  int id = 0;
  int dim = 0;
  CovarianceVariant variant = CovarianceVariant::kMlUnconstrained;
  std::optional<WishartPrior> prior;  // required by MAP variants
  EigenvalueBounds bounds;            // used by eig variants
  // Initial / fixed information matrix; identity when left empty.
  Eigen::MatrixXd information;
};

class JointProblem {
 public:
  // Validates every cross reference. Group ids must be 0..T-1 in order.
  JointProblem(std::shared_ptr<const ManifoldSpec> spec,
               std::vector<NoiseGroup> groups,
               std::vector<MeasurementFactor> factors,
               std::set<int> gauge_block_ids = {});

  const ManifoldSpec& spec() const { return *spec_; }
  const std::shared_ptr<const ManifoldSpec>& spec_ptr() const { return spec_; }
  const std::vector<NoiseGroup>& groups() const { return groups_; }
  const NoiseGroup& group(int id) const { return groups_.at(id); }
  int num_groups() const { return static_cast<int>(groups_.size()); }
  const std::vector<MeasurementFactor>& factors() const { return factors_; }
  const MeasurementFactor& factor(int index) const {
    return factors_.at(index);
  }
  int num_factors() const { return static_cast<int>(factors_.size()); }
  const std::set<int>& gauge_block_ids() const { return gauge_; }
  bool IsGaugeBlock(int block_index) const;

  // Factor indices belonging to a group (k_g = size).
  const std::vector<int>& factors_in_group(int group_id) const {
    return group_factors_.at(group_id);
  }
  int num_measurements(int group_id) const {
    return static_cast<int>(group_factors_.at(group_id).size());
  }
  // Block indices (into spec().blocks()) of a factor.
  const std::vector<int>& factor_block_indices(int factor_index) const {
    return factor_blocks_.at(factor_index);
  }

  // Same problem with another gauge set.
  JointProblem WithGauge(std::set<int> gauge_block_ids) const;
  // Same factors, replacing the group table (ids, dims must match).
  JointProblem WithGroups(std::vector<NoiseGroup> groups) const;

 private:
  std::shared_ptr<const ManifoldSpec> spec_;
  std::vector<NoiseGroup> groups_;
  std::vector<MeasurementFactor> factors_;
  std::set<int> gauge_;
  std::set<int> gauge_indices_;
  std::vector<std::vector<int>> group_factors_;
  std::vector<std::vector<int>> factor_blocks_;
};

// r_i(x), before any preprocessing correction.
Eigen::VectorXd Residual(const MeasurementFactor& factor,
                         const ManifoldPoint& x);

// d r_i / d v for x [+] v, columns ordered by the factor's blocks.
Eigen::MatrixXd ResidualJacobian(const MeasurementFactor& factor,
                                 const ManifoldPoint& x);

// Central-difference Jacobian (step 1e-6) through BoxPlus. Used for custom
// factors and as a test oracle.
Eigen::MatrixXd NumericResidualJacobian(const MeasurementFactor& factor,
                                        const ManifoldPoint& x,
                                        double step = 1e-6);

// J_i^-1 r_i (or r_i) and its Jacobian: what the noise model sees.
Eigen::VectorXd EffectiveResidual(const MeasurementFactor& factor,
                                  const ManifoldPoint& x);
Eigen::MatrixXd EffectiveJacobian(const MeasurementFactor& factor,
                                  const ManifoldPoint& x);

// S(x) = (1/k) sum r r^T over the group, with J_i^-1 r_i when present.
Eigen::MatrixXd SampleCovariance(const JointProblem& problem, int group_id,
                                 const ManifoldPoint& x);
// All groups in one pass over the factors.
std::vector<Eigen::MatrixXd> SampleCovariances(const JointProblem& problem,
                                               const ManifoldPoint& x);

}  // namespace jointcov

#endif  // JOINTCOV_PROBLEM_H_

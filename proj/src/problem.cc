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

#include "jointcov/problem.h"

#include <string>
#include <utility>

#include "Eigen/LU"
#include "Eigen/SVD"
#include "jointcov/error.h"

namespace jointcov {
namespace {

constexpr double kMaxConditionNumber = 1e12;

std::vector<Eigen::VectorXd> GatherBlocks(const MeasurementFactor& factor,
                                          const ManifoldPoint& x) {
  std::vector<Eigen::VectorXd> blocks;
  blocks.reserve(factor.block_ids().size());
  for (int id : factor.block_ids()) {
    blocks.push_back(x.block_values(x.spec().IndexOf(id)));
  }
  return blocks;
}

Eigen::VectorXd ResidualFromBlocks(const MeasurementFactor& factor,
                                   const std::vector<Eigen::VectorXd>& blocks) {
  switch (factor.kind()) {
    case ResidualKind::kLinearGaussian: {
      Eigen::VectorXd stacked(factor.linear_map().cols());
      int offset = 0;
      for (const Eigen::VectorXd& b : blocks) {
        stacked.segment(offset, b.size()) = b;
        offset += static_cast<int>(b.size());
      }
      return factor.measurement() - factor.linear_map() * stacked;
    }
    case ResidualKind::kPriorEuclidean:
      return factor.measurement() - blocks[0];
    case ResidualKind::kRelativeSe2: {
      const Pose2 h =
          Pose2::FromVector(blocks[0]).inverse() * Pose2::FromVector(blocks[1]);
      return LogSe2(h.inverse() * Pose2::FromVector(factor.measurement()));
    }
    case ResidualKind::kCustom: {
      Eigen::VectorXd r = factor.custom_function()(blocks);
      if (r.size() != factor.residual_dim()) {
        throw DimensionMismatchError("custom residual has wrong length");
      }
      return r;
    }
  }
  throw InvalidArgumentError("unknown residual kind");
}

}  // namespace

MeasurementFactor MeasurementFactor::LinearGaussian(int id,
                                                    std::vector<int> block_ids,
                                                    Eigen::MatrixXd h,
                                                    Eigen::VectorXd z,
                                                    int group_id) {
  if (h.rows() != z.size()) {
    throw DimensionMismatchError("linear factor: H rows != measurement size");
  }
  MeasurementFactor f;
  f.id_ = id;
  f.kind_ = ResidualKind::kLinearGaussian;
  f.block_ids_ = std::move(block_ids);
  f.group_id_ = group_id;
  f.residual_dim_ = static_cast<int>(z.size());
  f.h_ = std::move(h);
  f.z_ = std::move(z);
  return f;
}

MeasurementFactor MeasurementFactor::RelativeSe2(int id, int from_block,
                                                 int to_block, const Pose2& z,
                                                 int group_id) {
  MeasurementFactor f;
  f.id_ = id;
  f.kind_ = ResidualKind::kRelativeSe2;
  f.block_ids_ = {from_block, to_block};
  f.group_id_ = group_id;
  f.residual_dim_ = 3;
  f.z_ = z.ToVector();
  return f;
}

MeasurementFactor MeasurementFactor::PriorEuclidean(int id, int block_id,
                                                    Eigen::VectorXd z,
                                                    int group_id) {
  MeasurementFactor f;
  f.id_ = id;
  f.kind_ = ResidualKind::kPriorEuclidean;
  f.block_ids_ = {block_id};
  f.group_id_ = group_id;
  f.residual_dim_ = static_cast<int>(z.size());
  f.z_ = std::move(z);
  return f;
}

MeasurementFactor MeasurementFactor::Custom(int id, std::vector<int> block_ids,
                                            int residual_dim,
                                            CustomResidualFunction fn,
                                            int group_id) {
  if (!fn) throw InvalidArgumentError("custom factor needs a function");
  MeasurementFactor f;
  f.id_ = id;
  f.kind_ = ResidualKind::kCustom;
  f.block_ids_ = std::move(block_ids);
  f.group_id_ = group_id;
  f.residual_dim_ = residual_dim;
  f.custom_ = std::move(fn);
  return f;
}

MeasurementFactor& MeasurementFactor::SetPreprocessingJacobian(
    const Eigen::MatrixXd& j) {
  if (j.rows() != residual_dim_ || j.cols() != residual_dim_) {
    throw DimensionMismatchError("preprocessing Jacobian must be m x m");
  }
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(j).singularValues();
  if (!(sv.minCoeff() > 0.) ||
      sv.maxCoeff() / sv.minCoeff() >= kMaxConditionNumber) {
    throw InvalidArgumentError("preprocessing Jacobian is ill-conditioned");
  }
  j_ = j;
  j_inverse_ = j.inverse();
  return *this;
}

JointProblem::JointProblem(std::shared_ptr<const ManifoldSpec> spec,
                           std::vector<NoiseGroup> groups,
                           std::vector<MeasurementFactor> factors,
                           std::set<int> gauge_block_ids)
    : spec_(std::move(spec)),
      groups_(std::move(groups)),
      factors_(std::move(factors)),
      gauge_(std::move(gauge_block_ids)) {
  if (!spec_) throw InvalidArgumentError("problem needs a manifold spec");
  for (int id : gauge_) gauge_indices_.insert(spec_->IndexOf(id));

  for (size_t g = 0; g < groups_.size(); ++g) {
    NoiseGroup& group = groups_[g];
    if (group.id != static_cast<int>(g)) {
      throw InvalidArgumentError("noise group ids must be 0..T-1 in order");
    }
    if (group.dim <= 0) throw InvalidArgumentError("noise group needs m > 0");
    if (IsMap(group.variant) && !group.prior) {
      throw InvalidArgumentError("MAP variant of group " +
                                 std::to_string(group.id) + " needs a prior");
    }
    if (group.prior && group.prior->dim() != group.dim) {
      throw DimensionMismatchError("prior dimension != group dimension");
    }
    if (UsesEigenvalueBounds(group.variant) &&
        !(group.bounds.min > 0. && group.bounds.max >= group.bounds.min)) {
      throw InvalidArgumentError("invalid eigenvalue bounds");
    }
    if (group.information.size() == 0) {
      group.information = Eigen::MatrixXd::Identity(group.dim, group.dim);
    }
    if (group.information.rows() != group.dim ||
        group.information.cols() != group.dim) {
      throw DimensionMismatchError("group information has wrong size");
    }
  }

  group_factors_.resize(groups_.size());
  factor_blocks_.reserve(factors_.size());
  for (size_t i = 0; i < factors_.size(); ++i) {
    const MeasurementFactor& f = factors_[i];
    if (f.group_id() < 0 || f.group_id() >= num_groups()) {
      throw InvalidArgumentError("factor " + std::to_string(f.id()) +
                                 " references unknown group");
    }
    if (f.residual_dim() != groups_[f.group_id()].dim) {
      throw DimensionMismatchError("factor " + std::to_string(f.id()) +
                                   ": residual dim != group dim");
    }
    std::vector<int> indices;
    int total_dim = 0;
    for (int id : f.block_ids()) {
      const int index = spec_->IndexOf(id);
      indices.push_back(index);
      total_dim += spec_->block(index).dim;
    }
    const auto kind_of = [&](size_t k) { return spec_->block(indices[k]).kind; };
    switch (f.kind()) {
      case ResidualKind::kRelativeSe2:
        if (indices.size() != 2 || kind_of(0) != BlockKind::kSe2 ||
            kind_of(1) != BlockKind::kSe2) {
          throw InvalidArgumentError("relative SE(2) factor needs two poses");
        }
        break;
      case ResidualKind::kLinearGaussian:
        for (size_t k = 0; k < indices.size(); ++k) {
          if (kind_of(k) != BlockKind::kEuclidean) {
            throw InvalidArgumentError("linear factor on non-Euclidean block");
          }
        }
        if (f.linear_map().cols() != total_dim) {
          throw DimensionMismatchError("linear factor: H cols != block dims");
        }
        break;
      case ResidualKind::kPriorEuclidean:
        if (indices.size() != 1 || kind_of(0) != BlockKind::kEuclidean ||
            total_dim != f.residual_dim()) {
          throw InvalidArgumentError("bad Euclidean prior factor");
        }
        break;
      case ResidualKind::kCustom:
        break;
    }
    group_factors_[f.group_id()].push_back(static_cast<int>(i));
    factor_blocks_.push_back(std::move(indices));
  }
  for (const NoiseGroup& group : groups_) {
    if (group_factors_[group.id].empty()) {
      throw InvalidArgumentError("noise group " + std::to_string(group.id) +
                                 " has no factors");
    }
  }
}

bool JointProblem::IsGaugeBlock(int block_index) const {
  return gauge_indices_.count(block_index) > 0;
}

JointProblem JointProblem::WithGauge(std::set<int> gauge_block_ids) const {
  return JointProblem(spec_, groups_, factors_, std::move(gauge_block_ids));
}

JointProblem JointProblem::WithGroups(std::vector<NoiseGroup> groups) const {
  return JointProblem(spec_, std::move(groups), factors_, gauge_);
}

Eigen::VectorXd Residual(const MeasurementFactor& factor,
                         const ManifoldPoint& x) {
  return ResidualFromBlocks(factor, GatherBlocks(factor, x));
}

Eigen::MatrixXd NumericResidualJacobian(const MeasurementFactor& factor,
                                        const ManifoldPoint& x, double step) {
  std::vector<Eigen::VectorXd> blocks = GatherBlocks(factor, x);
  int cols = 0;
  for (const auto& b : blocks) cols += static_cast<int>(b.size());
  Eigen::MatrixXd jac(factor.residual_dim(), cols);
  int col = 0;
  for (size_t k = 0; k < blocks.size(); ++k) {
    const BlockKind kind =
        x.spec().block(x.spec().IndexOf(factor.block_ids()[k])).kind;
    const Eigen::VectorXd base = blocks[k];
    for (int d = 0; d < base.size(); ++d, ++col) {
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(base.size());
      delta[d] = step;
      blocks[k] = BoxPlusBlock(kind, base, delta);
      const Eigen::VectorXd plus = ResidualFromBlocks(factor, blocks);
      blocks[k] = BoxPlusBlock(kind, base, -delta);
      const Eigen::VectorXd minus = ResidualFromBlocks(factor, blocks);
      jac.col(col) = (plus - minus) / (2. * step);
    }
    blocks[k] = base;
  }
  return jac;
}

Eigen::MatrixXd ResidualJacobian(const MeasurementFactor& factor,
                                 const ManifoldPoint& x) {
  switch (factor.kind()) {
    case ResidualKind::kLinearGaussian:
      return -factor.linear_map();
    case ResidualKind::kPriorEuclidean:
      return -Eigen::MatrixXd::Identity(factor.residual_dim(),
                                        factor.residual_dim());
    case ResidualKind::kRelativeSe2: {
      const ManifoldSpec& spec = x.spec();
      const Pose2 a = x.pose(spec.IndexOf(factor.block_ids()[0]));
      const Pose2 b = x.pose(spec.IndexOf(factor.block_ids()[1]));
      const Pose2 z = Pose2::FromVector(factor.measurement());
      // E = (a^-1 b)^-1 z = Exp(r).
      const Eigen::Vector3d r = LogSe2(b.inverse() * a * z);
      const Eigen::Matrix3d jr_inv = InverseRightJacobianSe2(r);
      Eigen::MatrixXd jac(3, 6);
      jac.leftCols<3>() = jr_inv * AdjointSe2(z.inverse());
      jac.rightCols<3>() = -jr_inv * AdjointSe2(ExpSe2(-r));
      return jac;
    }
    case ResidualKind::kCustom:
      return NumericResidualJacobian(factor, x);
  }
  throw InvalidArgumentError("unknown residual kind");
}

Eigen::VectorXd EffectiveResidual(const MeasurementFactor& factor,
                                  const ManifoldPoint& x) {
  Eigen::VectorXd r = Residual(factor, x);
  if (factor.preprocessing_jacobian_inverse()) {
    return *factor.preprocessing_jacobian_inverse() * r;
  }
  return r;
}

Eigen::MatrixXd EffectiveJacobian(const MeasurementFactor& factor,
                                  const ManifoldPoint& x) {
  Eigen::MatrixXd jac = ResidualJacobian(factor, x);
  if (factor.preprocessing_jacobian_inverse()) {
    return *factor.preprocessing_jacobian_inverse() * jac;
  }
  return jac;
}

Eigen::MatrixXd SampleCovariance(const JointProblem& problem, int group_id,
                                 const ManifoldPoint& x) {
  const NoiseGroup& group = problem.group(group_id);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(group.dim, group.dim);
  const std::vector<int>& members = problem.factors_in_group(group_id);
  for (int i : members) {
    const Eigen::VectorXd r = EffectiveResidual(problem.factor(i), x);
    s.selfadjointView<Eigen::Lower>().rankUpdate(r);
  }
  s = s.selfadjointView<Eigen::Lower>();
  return s / static_cast<double>(members.size());
}

std::vector<Eigen::MatrixXd> SampleCovariances(const JointProblem& problem,
                                               const ManifoldPoint& x) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(problem.num_groups());
  for (int g = 0; g < problem.num_groups(); ++g) {
    out.push_back(SampleCovariance(problem, g, x));
  }
  return out;
}

}  // namespace jointcov

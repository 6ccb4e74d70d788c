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

#ifndef JOINTCOV_MANIFOLD_H_
#define JOINTCOV_MANIFOLD_H_

#include <memory>
#include <unordered_map>
#include <vector>

#include "Eigen/Core"

namespace jointcov {

// Tangent vectors are flat; block offsets come from the owning ManifoldSpec.
using TangentVector = Eigen::VectorXd;

// Wraps an angle into (-pi, pi].
double WrapAngle(double angle);

// Rigid planar transform stored as (x, y, theta) with theta in (-pi, pi].
struct Pose2 {
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();
  double angle = 0.;

  Pose2() = default;
  Pose2(double x, double y, double theta)
      : translation(x, y), angle(WrapAngle(theta)) {}
  Pose2(const Eigen::Vector2d& t, double theta)
      : translation(t), angle(WrapAngle(theta)) {}

  static Pose2 Identity() { return Pose2(); }
  static Pose2 FromVector(const Eigen::Vector3d& v) {
    return Pose2(v.x(), v.y(), v.z());
  }

  Eigen::Matrix2d rotation() const;
  Eigen::Vector3d ToVector() const {
    return {translation.x(), translation.y(), angle};
  }
  Pose2 inverse() const;
  Pose2 operator*(const Pose2& rhs) const;
};

// SE(2) exponential of the tangent triple (vx, vy, omega).
Pose2 ExpSe2(const Eigen::Vector3d& xi);

// Inverse of ExpSe2 on |theta| < pi. Throws IllConditionedLogError on the
// cut locus.
Eigen::Vector3d LogSe2(const Pose2& g);

// Adjoint of g acting on (vx, vy, omega): Exp(Ad_g xi) = g Exp(xi) g^-1.
Eigen::Matrix3d AdjointSe2(const Pose2& g);

// Right Jacobian: Exp(xi + d) ~ Exp(xi) Exp(Jr(xi) d).
Eigen::Matrix3d RightJacobianSe2(const Eigen::Vector3d& xi);
Eigen::Matrix3d InverseRightJacobianSe2(const Eigen::Vector3d& xi);

enum class BlockKind { kEuclidean, kSe2 };

struct BlockSpec {
  int id = 0;
  BlockKind kind = BlockKind::kEuclidean;
  int dim = 0;     // tangent (and storage) dimension
  int offset = 0;  // into the flat tangent / storage vector
};

// Ordered product of Euclidean and SE(2) blocks. SE(2) blocks are stored as
// (x, y, theta), so storage and tangent layouts coincide.
class ManifoldSpec {
 public:
  ManifoldSpec& AddEuclidean(int id, int dim);
  ManifoldSpec& AddSe2(int id);

  int tangent_dim() const { return tangent_dim_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const BlockSpec& block(int index) const { return blocks_.at(index); }
  const std::vector<BlockSpec>& blocks() const { return blocks_; }

  bool HasBlock(int id) const { return index_by_id_.count(id) > 0; }
  // Position of block `id` in blocks(). Throws InvalidArgumentError.
  int IndexOf(int id) const;

  bool operator==(const ManifoldSpec& other) const;

 private:
  void Add(BlockSpec block);

  std::vector<BlockSpec> blocks_;
  std::unordered_map<int, int> index_by_id_;
  int tangent_dim_ = 0;
};

class ManifoldPoint {
 public:
  // Zero vectors and identity poses.
  explicit ManifoldPoint(std::shared_ptr<const ManifoldSpec> spec);
  ManifoldPoint(std::shared_ptr<const ManifoldSpec> spec,
                Eigen::VectorXd values);

  const ManifoldSpec& spec() const { return *spec_; }
  const std::shared_ptr<const ManifoldSpec>& spec_ptr() const {
    return spec_;
  }
  const Eigen::VectorXd& values() const { return values_; }

  Eigen::VectorXd block_values(int index) const;
  Pose2 pose(int index) const;
  void set_pose(int index, const Pose2& pose);
  void set_block_values(int index, const Eigen::VectorXd& values);

 private:
  std::shared_ptr<const ManifoldSpec> spec_;
  Eigen::VectorXd values_;
};

// Retraction: Euclidean blocks add, SE(2) blocks compose x * Exp(v).
ManifoldPoint BoxPlus(const ManifoldPoint& x, const TangentVector& v);
// Euclidean: z - y; SE(2): Log(y^-1 z).
TangentVector BoxMinus(const ManifoldPoint& z, const ManifoldPoint& y);

// Single-block versions on raw storage.
Eigen::VectorXd BoxPlusBlock(BlockKind kind, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& v);
Eigen::VectorXd BoxMinusBlock(BlockKind kind, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& y);

}  // namespace jointcov

#endif  // JOINTCOV_MANIFOLD_H_

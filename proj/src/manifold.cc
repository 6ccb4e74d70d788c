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

#include "jointcov/manifold.h"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "Eigen/LU"
#include "jointcov/error.h"

namespace jointcov {
namespace {

constexpr double kPi = std::numbers::pi;
// Below this |omega| the closed forms switch to Taylor expansions.
constexpr double kSmallAngle = 1e-7;
constexpr double kCutLocusTolerance = 1e-12;

// sin(w)/w and (1 - cos(w))/w.
void SinCosRatios(double w, double* s, double* c) {
  if (std::abs(w) < kSmallAngle) {
    *s = 1. - w * w / 6.;
    *c = w / 2. - w * w * w / 24.;
  } else {
    *s = std::sin(w) / w;
    *c = (1. - std::cos(w)) / w;
  }
}

void CheckDims(const ManifoldSpec& a, const ManifoldSpec& b) {
  if (&a != &b && !(a == b)) {
    throw DimensionMismatchError("manifold points have different layouts");
  }
}

}  // namespace

double WrapAngle(double angle) {
  double a = std::remainder(angle, 2. * kPi);
  if (a <= -kPi) a += 2. * kPi;
  return a;
}

Eigen::Matrix2d Pose2::rotation() const {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Pose2 Pose2::inverse() const {
  return Pose2(-(rotation().transpose() * translation), -angle);
}

Pose2 Pose2::operator*(const Pose2& rhs) const {
  return Pose2(translation + rotation() * rhs.translation, angle + rhs.angle);
}

Pose2 ExpSe2(const Eigen::Vector3d& xi) {
  double s, c;
  SinCosRatios(xi.z(), &s, &c);
  const Eigen::Vector2d t(s * xi.x() - c * xi.y(), c * xi.x() + s * xi.y());
  return Pose2(t, xi.z());
}

Eigen::Vector3d LogSe2(const Pose2& g) {
  const double theta = g.angle;
  if (kPi - std::abs(theta) < kCutLocusTolerance) {
    throw IllConditionedLogError("log_se2: rotation angle on the cut locus");
  }
  double s, c;
  SinCosRatios(theta, &s, &c);
  // V = [s -c; c s], V^-1 = [s c; -c s] / (s^2 + c^2).
  const double det = s * s + c * c;
  const Eigen::Vector2d& t = g.translation;
  return {(s * t.x() + c * t.y()) / det, (-c * t.x() + s * t.y()) / det,
          theta};
}

Eigen::Matrix3d AdjointSe2(const Pose2& g) {
  Eigen::Matrix3d ad = Eigen::Matrix3d::Identity();
  ad.topLeftCorner<2, 2>() = g.rotation();
  ad(0, 2) = g.translation.y();
  ad(1, 2) = -g.translation.x();
  return ad;
}

Eigen::Matrix3d RightJacobianSe2(const Eigen::Vector3d& xi) {
  const double p1 = xi.x(), p2 = xi.y(), w = xi.z();
  double s, c;
  SinCosRatios(w, &s, &c);
  double j02, j12;
  if (std::abs(w) < kSmallAngle) {
    j02 = -p2 / 2. + p1 * w / 6.;
    j12 = p1 / 2. + p2 * w / 6.;
  } else {
    const double w2 = w * w;
    j02 = (w * p1 - p2 + p2 * std::cos(w) - p1 * std::sin(w)) / w2;
    j12 = (p1 + w * p2 - p1 * std::cos(w) - p2 * std::sin(w)) / w2;
  }
  Eigen::Matrix3d jr;
  jr << s, c, j02,  //
      -c, s, j12,   //
      0., 0., 1.;
  return jr;
}

Eigen::Matrix3d InverseRightJacobianSe2(const Eigen::Vector3d& xi) {
  const Eigen::Matrix3d jr = RightJacobianSe2(xi);
  const Eigen::Matrix2d a_inv = jr.topLeftCorner<2, 2>().inverse();
  Eigen::Matrix3d inv = Eigen::Matrix3d::Identity();
  inv.topLeftCorner<2, 2>() = a_inv;
  inv.topRightCorner<2, 1>() = -a_inv * jr.topRightCorner<2, 1>();
  return inv;
}

void ManifoldSpec::Add(BlockSpec block) {
  if (HasBlock(block.id)) {
    throw InvalidArgumentError("duplicate block id " +
                               std::to_string(block.id));
  }
  block.offset = tangent_dim_;
  tangent_dim_ += block.dim;
  index_by_id_.emplace(block.id, num_blocks());
  blocks_.push_back(block);
}

ManifoldSpec& ManifoldSpec::AddEuclidean(int id, int dim) {
  if (dim <= 0) throw InvalidArgumentError("Euclidean block needs dim > 0");
  Add({id, BlockKind::kEuclidean, dim, 0});
  return *this;
}

ManifoldSpec& ManifoldSpec::AddSe2(int id) {
  Add({id, BlockKind::kSe2, 3, 0});
  return *this;
}

int ManifoldSpec::IndexOf(int id) const {
  const auto it = index_by_id_.find(id);
  if (it == index_by_id_.end()) {
    throw InvalidArgumentError("unknown block id " + std::to_string(id));
  }
  return it->second;
}

bool ManifoldSpec::operator==(const ManifoldSpec& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const BlockSpec& a = blocks_[i];
    const BlockSpec& b = other.blocks_[i];
    if (a.id != b.id || a.kind != b.kind || a.dim != b.dim) return false;
  }
  return true;
}

ManifoldPoint::ManifoldPoint(std::shared_ptr<const ManifoldSpec> spec)
    : spec_(std::move(spec)),
      values_(Eigen::VectorXd::Zero(spec_->tangent_dim())) {}

ManifoldPoint::ManifoldPoint(std::shared_ptr<const ManifoldSpec> spec,
                             Eigen::VectorXd values)
    : spec_(std::move(spec)), values_(std::move(values)) {
  if (values_.size() != spec_->tangent_dim()) {
    throw DimensionMismatchError("point storage does not match manifold");
  }
  for (const BlockSpec& b : spec_->blocks()) {
    if (b.kind == BlockKind::kSe2) {
      values_[b.offset + 2] = WrapAngle(values_[b.offset + 2]);
    }
  }
}

Eigen::VectorXd ManifoldPoint::block_values(int index) const {
  const BlockSpec& b = spec_->block(index);
  return values_.segment(b.offset, b.dim);
}

Pose2 ManifoldPoint::pose(int index) const {
  const BlockSpec& b = spec_->block(index);
  if (b.kind != BlockKind::kSe2) {
    throw InvalidArgumentError("block is not SE(2)");
  }
  return Pose2::FromVector(values_.segment<3>(b.offset));
}

void ManifoldPoint::set_pose(int index, const Pose2& pose) {
  const BlockSpec& b = spec_->block(index);
  if (b.kind != BlockKind::kSe2) {
    throw InvalidArgumentError("block is not SE(2)");
  }
  values_.segment<3>(b.offset) = pose.ToVector();
}

void ManifoldPoint::set_block_values(int index, const Eigen::VectorXd& v) {
  const BlockSpec& b = spec_->block(index);
  if (v.size() != b.dim) throw DimensionMismatchError("block size mismatch");
  values_.segment(b.offset, b.dim) =
      b.kind == BlockKind::kSe2 ? Eigen::VectorXd(Pose2::FromVector(v).ToVector())
                                 : v;
}

Eigen::VectorXd BoxPlusBlock(BlockKind kind, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& v) {
  if (x.size() != v.size()) throw DimensionMismatchError("boxplus");
  if (kind == BlockKind::kEuclidean) return x + v;
  return (Pose2::FromVector(x) * ExpSe2(v)).ToVector();
}

Eigen::VectorXd BoxMinusBlock(BlockKind kind, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& y) {
  if (z.size() != y.size()) throw DimensionMismatchError("boxminus");
  if (kind == BlockKind::kEuclidean) return z - y;
  return LogSe2(Pose2::FromVector(y).inverse() * Pose2::FromVector(z));
}

ManifoldPoint BoxPlus(const ManifoldPoint& x, const TangentVector& v) {
  const ManifoldSpec& spec = x.spec();
  if (v.size() != spec.tangent_dim()) {
    throw DimensionMismatchError("tangent vector length " +
                                 std::to_string(v.size()) + " != " +
                                 std::to_string(spec.tangent_dim()));
  }
  Eigen::VectorXd out = x.values();
  for (const BlockSpec& b : spec.blocks()) {
    if (b.kind == BlockKind::kEuclidean) {
      out.segment(b.offset, b.dim) += v.segment(b.offset, b.dim);
    } else {
      const Pose2 g = Pose2::FromVector(x.values().segment<3>(b.offset)) *
                      ExpSe2(v.segment<3>(b.offset));
      out.segment<3>(b.offset) = g.ToVector();
    }
  }
  return ManifoldPoint(x.spec_ptr(), std::move(out));
}

TangentVector BoxMinus(const ManifoldPoint& z, const ManifoldPoint& y) {
  CheckDims(z.spec(), y.spec());
  TangentVector out(z.spec().tangent_dim());
  for (const BlockSpec& b : z.spec().blocks()) {
    if (b.kind == BlockKind::kEuclidean) {
      out.segment(b.offset, b.dim) = z.values().segment(b.offset, b.dim) -
                                     y.values().segment(b.offset, b.dim);
    } else {
      const Pose2 zp = Pose2::FromVector(z.values().segment<3>(b.offset));
      const Pose2 yp = Pose2::FromVector(y.values().segment<3>(b.offset));
      out.segment<3>(b.offset) = LogSe2(yp.inverse() * zp);
    }
  }
  return out;
}

}  // namespace jointcov

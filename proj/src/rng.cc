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


#include "jointcov/rng.h"

#include <cmath>
#include <numbers>

#include "Eigen/Cholesky"
#include "jointcov/error.h"

namespace jointcov {

namespace {
constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}  // namespace

uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t DeriveSeed(uint64_t master, uint64_t a, uint64_t b) {
  return Mix64(Mix64(Mix64(master) + a * kGolden) + b);
}

uint64_t CounterRng::NextU64() { return Mix64(key_ + ++counter_ * kGolden); }

double CounterRng::Uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::Normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double radius = std::sqrt(-2. * std::log(Uniform()));
  const double phase = 2. * std::numbers::pi * Uniform();
  spare_ = radius * std::sin(phase);
  return radius * std::cos(phase);
}

Eigen::VectorXd CounterRng::Normals(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = Normal();
  return v;
}

Eigen::MatrixXd CounterRng::NormalMatrix(int rows, int cols) {
  Eigen::MatrixXd a(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) a(i, j) = Normal();
  }
  return a;
}

Eigen::VectorXd SampleGaussian(const Eigen::MatrixXd& covariance,
                               CounterRng* rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("sampling covariance is not PD");
  }
  return llt.matrixL() * rng->Normals(static_cast<int>(covariance.rows()));
}

}  // namespace jointcov

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


#ifndef JOINTCOV_RNG_H_
#define JOINTCOV_RNG_H_

#include <cstdint>
#include <optional>

#include "Eigen/Core"

namespace jointcov {

// SplitMix64 finalizer.
uint64_t Mix64(uint64_t z);

// Independent seed for (master, a, b), e.g. (seed, noise level, trial).
uint64_t DeriveSeed(uint64_t master, uint64_t a, uint64_t b = 0);

// Counter-based generator: draw i is Mix64(key + i * golden ratio). The
// output depends only on (seed, counter), so streams reproduce exactly on
// every platform and compiler.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : key_(Mix64(seed)) {}

  uint64_t NextU64();
  // Uniform on the open interval (0, 1).
  double Uniform();
  // Standard normal by Box-Muller.
  double Normal();
  Eigen::VectorXd Normals(int n);
  Eigen::MatrixXd NormalMatrix(int rows, int cols);

  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  std::optional<double> spare_;
};

// Zero-mean Gaussian sample L * n with L the Cholesky factor of
// `covariance`.
Eigen::VectorXd SampleGaussian(const Eigen::MatrixXd& covariance,
                               CounterRng* rng);

}  // namespace jointcov

#endif  // JOINTCOV_RNG_H_

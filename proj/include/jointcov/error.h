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

#ifndef JOINTCOV_ERROR_H_
#define JOINTCOV_ERROR_H_

#include <stdexcept>
#include <string>

namespace jointcov {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// log_se2 evaluated at (or numerically at) a rotation of +-pi.
class IllConditionedLogError : public Error {
 public:
  using Error::Error;
};

// Matrix that must be positive definite is not.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

// The covariance subproblem has no minimizer: the objective is unbounded
// below along a nullspace direction of the (sample) second-moment matrix.
class UnboundedProblemError : public Error {
 public:
  UnboundedProblemError(int group_id, double min_eigenvalue)
      : Error("noise group " + std::to_string(group_id) +
              ": singular second-moment matrix (min eigenvalue " +
              std::to_string(min_eigenvalue) +
              "); objective is unbounded below"),
        group_id_(group_id),
        min_eigenvalue_(min_eigenvalue) {}

  int group_id() const { return group_id_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  int group_id_;
  double min_eigenvalue_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class DisconnectedGraphError : public Error {
 public:
  using Error::Error;
};

}  // namespace jointcov

#endif  // JOINTCOV_ERROR_H_

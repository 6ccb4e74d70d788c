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


#ifndef JOINTCOV_RESULTS_H_
#define JOINTCOV_RESULTS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace jointcov {

// One (trial, algorithm) outcome. Metrics that do not apply are NaN; for
// single-group runs the W2 error is reported in w2_odometry.
struct ResultRow {
  std::string experiment;
  int trial = 0;
  uint64_t seed = 0;
  std::string algorithm;
  double noise_level = 0.;
  double rmse = 0.;
  double w2_odometry = 0.;
  double w2_loop = 0.;
  double final_f = 0.;
  int iters = 0;
  double wall_ms = 0.;
  std::string status;

  // NaN fields compare equal to each other.
  bool operator==(const ResultRow& other) const;
};

using ResultTable = std::vector<ResultRow>;

// experiment, trial, seed, algorithm, noise_level, rmse, w2_odometry,
// w2_loop, final_F, iters, wall_ms, status.
const std::vector<std::string>& ResultColumns();

// Doubles are written with 17 significant digits; NaN as "nan".
void WriteCsv(const ResultTable& table, std::ostream& out);
ResultTable ParseCsv(std::istream& in);

// Array of records keyed by the column names; NaN as null.
void WriteJson(const ResultTable& table, std::ostream& out);
ResultTable ParseJson(std::istream& in);

void WriteResultFile(const ResultTable& table, const std::string& path);

}  // namespace jointcov

#endif  // JOINTCOV_RESULTS_H_

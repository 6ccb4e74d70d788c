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


#include "jointcov/results.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gtest/gtest.h"
#include "nlohmann/json.hpp"

namespace jointcov {
namespace {

ResultTable SampleTable() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {
      {"linear-mc", 0, 1234567890123ull, "bcd", 0.01, 0.1 + 0.2, 1. / 3.,
       nan, -12.5, 7, 3.25, "ok"},
      {"pgo-ablation", 3, 7, "fixed-identity", 40., 1e-300, 2.5e10, 0.5,
       nan, 0, 0., "error: group 1, \"quoted\", comma"},
      {"pgo-ablation", 4, 8, "bcd-diag", 5., nan, nan, nan, nan, 13, 1.,
       "max-iter+bound"},
  };
}

TEST(ResultColumnsTest, FixedOrder) {
  EXPECT_EQ(ResultColumns(),
            (std::vector<std::string>{"experiment", "trial", "seed",
                                      "algorithm", "noise_level", "rmse",
                                      "w2_odometry", "w2_loop", "final_F",
                                      "iters", "wall_ms", "status"}));
}

TEST(CsvTest, EmptyTableIsHeaderOnly) {
  std::ostringstream out;
  WriteCsv({}, out);
  EXPECT_EQ(out.str(),
            "experiment,trial,seed,algorithm,noise_level,rmse,w2_odometry,"
            "w2_loop,final_F,iters,wall_ms,status\n");
  std::istringstream in(out.str());
  EXPECT_TRUE(ParseCsv(in).empty());
}

TEST(CsvTest, RoundTrip) {
  const ResultTable table = SampleTable();
  std::ostringstream out;
  WriteCsv(table, out);
  std::istringstream in(out.str());
  const ResultTable parsed = ParseCsv(in);
  EXPECT_EQ(parsed, table);
  std::ostringstream again;
  WriteCsv(parsed, again);
  EXPECT_EQ(again.str(), out.str());
}

TEST(CsvTest, RejectsWrongHeader) {
  std::istringstream in("trial,experiment\n");
  EXPECT_ANY_THROW(ParseCsv(in));
}

TEST(JsonTest, RoundTripAndKeys) {
  const ResultTable table = SampleTable();
  std::ostringstream out;
  WriteJson(table, out);
  const nlohmann::json doc = nlohmann::json::parse(out.str());
  ASSERT_TRUE(doc.is_array());
  ASSERT_EQ(doc.size(), table.size());
  std::vector<std::string> keys;
  for (auto it = doc[0].begin(); it != doc[0].end(); ++it) {
    keys.push_back(it.key());
  }
  std::vector<std::string> sorted_columns = ResultColumns();
  std::sort(sorted_columns.begin(), sorted_columns.end());
  std::sort(keys.begin(), keys.end());
  EXPECT_EQ(keys, sorted_columns);
  EXPECT_TRUE(doc[0]["w2_loop"].is_null());
  std::istringstream in(out.str());
  EXPECT_EQ(ParseJson(in), table);
}

TEST(WriteResultFileTest, PicksFormatFromExtension) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string csv = (dir / "jointcov_results_test.csv").string();
  const std::string json = (dir / "jointcov_results_test.json").string();
  WriteResultFile(SampleTable(), csv);
  WriteResultFile(SampleTable(), json);
  std::ifstream csv_in(csv), json_in(json);
  EXPECT_EQ(ParseCsv(csv_in), SampleTable());
  EXPECT_EQ(ParseJson(json_in), SampleTable());
  std::filesystem::remove(csv);
  std::filesystem::remove(json);
}

}  // namespace
}  // namespace jointcov

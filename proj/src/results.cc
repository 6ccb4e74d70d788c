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

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "nlohmann/json.hpp"
#include "jointcov/error.h"

namespace jointcov {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool SameDouble(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

double ParseDouble(const std::string& s, int line) {
  if (s == "nan") return kNaN;
  size_t used = 0;
  double v = 0.;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "bad number '" + s + "'");
  }
  if (used != s.size()) throw ParseError(line, "bad number '" + s + "'");
  return v;
}

std::string Quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Splits one CSV record; quoted fields may contain commas and doubled
// quotes.
std::vector<std::string> SplitRecord(const std::string& line, int line_number) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError(line_number, "unterminated quote");
  return fields;
}

nlohmann::json NumberOrNull(double v) {
  return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

double NumberFrom(const nlohmann::json& j) {
  return j.is_null() ? kNaN : j.get<double>();
}

}  // namespace

bool ResultRow::operator==(const ResultRow& o) const {
  return experiment == o.experiment && trial == o.trial && seed == o.seed &&
         algorithm == o.algorithm && SameDouble(noise_level, o.noise_level) &&
         SameDouble(rmse, o.rmse) && SameDouble(w2_odometry, o.w2_odometry) &&
         SameDouble(w2_loop, o.w2_loop) && SameDouble(final_f, o.final_f) &&
         iters == o.iters && SameDouble(wall_ms, o.wall_ms) &&
         status == o.status;
}

const std::vector<std::string>& ResultColumns() {
  static const std::vector<std::string> columns = {
      "experiment", "trial",   "seed",    "algorithm", "noise_level", "rmse",
      "w2_odometry", "w2_loop", "final_F", "iters",     "wall_ms",     "status"};
  return columns;
}

void WriteCsv(const ResultTable& table, std::ostream& out) {
  const std::vector<std::string>& columns = ResultColumns();
  for (size_t i = 0; i < columns.size(); ++i) {
    out << (i ? "," : "") << columns[i];
  }
  out << '\n';
  for (const ResultRow& r : table) {
    out << Quote(r.experiment) << ',' << r.trial << ',' << r.seed << ','
        << Quote(r.algorithm) << ',' << FormatDouble(r.noise_level) << ','
        << FormatDouble(r.rmse) << ',' << FormatDouble(r.w2_odometry) << ','
        << FormatDouble(r.w2_loop) << ',' << FormatDouble(r.final_f) << ','
        << r.iters << ',' << FormatDouble(r.wall_ms) << ','
        << Quote(r.status) << '\n';
  }
}

ResultTable ParseCsv(std::istream& in) {
  std::string line;
  int line_number = 1;
  if (!std::getline(in, line) || SplitRecord(line, 1) != ResultColumns()) {
    throw ParseError(1, "unexpected CSV header");
  }
  ResultTable table;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitRecord(line, line_number);
    if (f.size() != ResultColumns().size()) {
      throw ParseError(line_number, "wrong number of fields");
    }
    ResultRow r;
    try {
      r.experiment = f[0];
      r.trial = std::stoi(f[1]);
      r.seed = std::stoull(f[2]);
      r.algorithm = f[3];
      r.iters = std::stoi(f[9]);
    } catch (const std::exception&) {
      throw ParseError(line_number, "bad integer field");
    }
    r.noise_level = ParseDouble(f[4], line_number);
    r.rmse = ParseDouble(f[5], line_number);
    r.w2_odometry = ParseDouble(f[6], line_number);
    r.w2_loop = ParseDouble(f[7], line_number);
    r.final_f = ParseDouble(f[8], line_number);
    r.wall_ms = ParseDouble(f[10], line_number);
    r.status = f[11];
    table.push_back(std::move(r));
  }
  return table;
}

void WriteJson(const ResultTable& table, std::ostream& out) {
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const ResultRow& r : table) {
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    j["trial"] = r.trial;
    j["seed"] = r.seed;
    j["algorithm"] = r.algorithm;
    j["noise_level"] = NumberOrNull(r.noise_level);
    j["rmse"] = NumberOrNull(r.rmse);
    j["w2_odometry"] = NumberOrNull(r.w2_odometry);
    j["w2_loop"] = NumberOrNull(r.w2_loop);
    j["final_F"] = NumberOrNull(r.final_f);
    j["iters"] = r.iters;
    j["wall_ms"] = NumberOrNull(r.wall_ms);
    j["status"] = r.status;
    records.push_back(std::move(j));
  }
  out << records.dump(2) << '\n';
}

ResultTable ParseJson(std::istream& in) {
  ResultTable table;
  try {
    const nlohmann::json records = nlohmann::json::parse(in);
    for (const nlohmann::json& j : records) {
      ResultRow r;
      r.experiment = j.at("experiment").get<std::string>();
      r.trial = j.at("trial").get<int>();
      r.seed = j.at("seed").get<uint64_t>();
      r.algorithm = j.at("algorithm").get<std::string>();
      r.noise_level = NumberFrom(j.at("noise_level"));
      r.rmse = NumberFrom(j.at("rmse"));
      r.w2_odometry = NumberFrom(j.at("w2_odometry"));
      r.w2_loop = NumberFrom(j.at("w2_loop"));
      r.final_f = NumberFrom(j.at("final_F"));
      r.iters = j.at("iters").get<int>();
      r.wall_ms = NumberFrom(j.at("wall_ms"));
      r.status = j.at("status").get<std::string>();
      table.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("invalid result JSON: ") + e.what());
  }
  return table;
}

void WriteResultFile(const ResultTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgumentError("cannot write " + path);
  const bool json =
      path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (json) {
    WriteJson(table, out);
  } else {
    WriteCsv(table, out);
  }
  if (!out) throw Error("I/O failure writing " + path);
}

}  // namespace jointcov

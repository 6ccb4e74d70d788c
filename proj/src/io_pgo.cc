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


#include "jointcov/io_pgo.h"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "Eigen/LU"
#include "jointcov/error.h"
#include "jointcov/rng.h"
#include "jointcov/symmetric_eigen.h"

namespace jointcov {
namespace {

std::vector<std::string> Tokenize(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  std::string token;
  while (in >> token) tokens.push_back(token);
  return tokens;
}

double ParseDouble(const std::string& token, int line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE ||
      !std::isfinite(v)) {
    throw ParseError(line, "bad number '" + token + "'");
  }
  return v;
}

int ParseInt(const std::string& token, int line) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE ||
      v < std::numeric_limits<int>::min() ||
      v > std::numeric_limits<int>::max()) {
    throw ParseError(line, "bad integer '" + token + "'");
  }
  return static_cast<int>(v);
}

EdgeClass ClassFromIds(int from, int to) {
  return std::abs(from - to) == 1 ? EdgeClass::kOdometry
                                  : EdgeClass::kLoopClosure;
}

std::string FormatDouble(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

struct RawEdge {
  int line;
  int from;
  int to;
  Pose2 measurement;
  Eigen::Matrix3d information;
};

Eigen::Matrix3d DiagonalFromTokens(const std::vector<std::string>& tokens,
                                   int line) {
  if (tokens.size() != 3) {
    throw ParseError(line, "expected three diagonal entries");
  }
  Eigen::Vector3d d;
  for (int i = 0; i < 3; ++i) d[i] = ParseDouble(tokens[i], line);
  if ((d.array() <= 0.).any()) {
    throw ParseError(line, "information diagonal must be positive");
  }
  return d.asDiagonal();
}

const Eigen::Vector3d kBaseInformation(20., 40., 30.);
const Eigen::Vector3d kOdometryInformation(1000., 1000., 800.);

}  // namespace

std::string ToString(EdgeClass edge_class) {
  return edge_class == EdgeClass::kOdometry ? "odometry" : "loop";
}

bool PoseGraphEdge::operator==(const PoseGraphEdge& other) const {
  return from == other.from && to == other.to &&
         measurement.ToVector() == other.measurement.ToVector() &&
         information == other.information && edge_class == other.edge_class;
}

int PoseGraph2D::CountEdges(EdgeClass edge_class) const {
  return static_cast<int>(std::count_if(
      edges.begin(), edges.end(),
      [edge_class](const PoseGraphEdge& e) {
        return e.edge_class == edge_class;
      }));
}

bool PoseGraph2D::operator==(const PoseGraph2D& other) const {
  if (vertices.size() != other.vertices.size() ||
      original_ids != other.original_ids || edges != other.edges) {
    return false;
  }
  for (size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i].ToVector() != other.vertices[i].ToVector()) return false;
  }
  return true;
}

PoseGraph2D ParseG2o(std::istream& in, std::vector<int>* skipped_lines) {
  std::map<int, Pose2> vertices;
  std::vector<RawEdge> raw_edges;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::vector<std::string> tokens = Tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens[0] == "VERTEX_SE2") {
      if (tokens.size() != 5) {
        throw ParseError(line_number, "VERTEX_SE2 expects 4 fields");
      }
      const int id = ParseInt(tokens[1], line_number);
      const Pose2 pose(ParseDouble(tokens[2], line_number),
                       ParseDouble(tokens[3], line_number),
                       ParseDouble(tokens[4], line_number));
      if (!vertices.emplace(id, pose).second) {
        throw ParseError(line_number,
                         "duplicate vertex " + std::to_string(id));
      }
    } else if (tokens[0] == "EDGE_SE2") {
      if (tokens.size() != 12) {
        throw ParseError(line_number, "EDGE_SE2 expects 11 fields");
      }
      RawEdge e{line_number, ParseInt(tokens[1], line_number),
                ParseInt(tokens[2], line_number)};
      double v[9];
      for (int i = 0; i < 9; ++i) v[i] = ParseDouble(tokens[3 + i], line_number);
      e.measurement = Pose2(v[0], v[1], v[2]);
      e.information << v[3], v[4], v[5],  //
          v[4], v[6], v[7],               //
          v[5], v[7], v[8];
      const double scale = std::max(1., e.information.cwiseAbs().maxCoeff());
      if (JacobiEigen(e.information).eigenvalues[0] < -1e-12 * scale) {
        throw ParseError(line_number, "information matrix is not PSD");
      }
      raw_edges.push_back(e);
    } else if (skipped_lines != nullptr) {
      skipped_lines->push_back(line_number);
    }
  }

  PoseGraph2D graph;
  std::unordered_map<int, int> dense;
  for (const auto& [id, pose] : vertices) {
    dense[id] = graph.num_vertices();
    graph.original_ids.push_back(id);
    graph.vertices.push_back(pose);
  }
  for (const RawEdge& e : raw_edges) {
    const auto from = dense.find(e.from);
    const auto to = dense.find(e.to);
    if (from == dense.end() || to == dense.end()) {
      throw ParseError(e.line, "edge references a missing vertex");
    }
    graph.edges.push_back({from->second, to->second, e.measurement,
                           e.information, ClassFromIds(e.from, e.to)});
  }
  return graph;
}

PoseGraph2D ReadG2oFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgumentError("cannot open " + path);
  std::vector<int> skipped;
  PoseGraph2D graph = ParseG2o(in, &skipped);
  if (!skipped.empty()) {
    std::cerr << "warning: " << path << ": skipped " << skipped.size()
              << " line(s) with unknown tags (first at line " << skipped[0]
              << ")\n";
  }
  return graph;
}

void WriteG2o(const PoseGraph2D& graph, std::ostream& out) {
  for (int i = 0; i < graph.num_vertices(); ++i) {
    const Pose2& p = graph.vertices[i];
    out << "VERTEX_SE2 " << graph.original_ids[i] << ' '
        << FormatDouble(p.translation.x()) << ' '
        << FormatDouble(p.translation.y()) << ' ' << FormatDouble(p.angle)
        << '\n';
  }
  for (const PoseGraphEdge& e : graph.edges) {
    const Eigen::Matrix3d& q = e.information;
    out << "EDGE_SE2 " << graph.original_ids[e.from] << ' '
        << graph.original_ids[e.to];
    for (double v : {e.measurement.translation.x(),
                     e.measurement.translation.y(), e.measurement.angle,
                     q(0, 0), q(0, 1), q(0, 2), q(1, 1), q(1, 2), q(2, 2)}) {
      out << ' ' << FormatDouble(v);
    }
    out << '\n';
  }
}

std::string WriteG2oString(const PoseGraph2D& graph) {
  std::ostringstream out;
  WriteG2o(graph, out);
  return out.str();
}

void WriteG2oFile(const PoseGraph2D& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgumentError("cannot write " + path);
  WriteG2o(graph, out);
}

void ApplyClassOverrides(std::istream& in, PoseGraph2D* graph) {
  std::map<std::pair<int, int>, EdgeClass> overrides;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::vector<std::string> tokens = Tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens.size() != 3) {
      throw ParseError(line_number, "expected 'from to class'");
    }
    EdgeClass c;
    if (tokens[2] == "odometry") {
      c = EdgeClass::kOdometry;
    } else if (tokens[2] == "loop" || tokens[2] == "loop-closure") {
      c = EdgeClass::kLoopClosure;
    } else {
      throw ParseError(line_number, "unknown edge class '" + tokens[2] + "'");
    }
    overrides[{ParseInt(tokens[0], line_number),
               ParseInt(tokens[1], line_number)}] = c;
  }
  for (PoseGraphEdge& e : graph->edges) {
    const auto it = overrides.find(
        {graph->original_ids[e.from], graph->original_ids[e.to]});
    if (it != overrides.end()) e.edge_class = it->second;
  }
}

std::vector<Pose2> SpanningTreeInit(const PoseGraph2D& graph) {
  const int n = graph.num_vertices();
  std::vector<Pose2> poses(n);
  if (n == 0) return poses;
  std::vector<std::vector<int>> incident(n);
  for (int e = 0; e < graph.num_edges(); ++e) {
    incident[graph.edges[e].from].push_back(e);
    incident[graph.edges[e].to].push_back(e);
  }
  std::vector<bool> visited(n, false);
  std::deque<int> queue = {0};
  visited[0] = true;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int e : incident[v]) {
      const PoseGraphEdge& edge = graph.edges[e];
      if (edge.from == v && !visited[edge.to]) {
        poses[edge.to] = poses[v] * edge.measurement;
        visited[edge.to] = true;
        queue.push_back(edge.to);
      } else if (edge.to == v && !visited[edge.from]) {
        poses[edge.from] = poses[v] * edge.measurement.inverse();
        visited[edge.from] = true;
        queue.push_back(edge.from);
      }
    }
  }
  const int reached =
      static_cast<int>(std::count(visited.begin(), visited.end(), true));
  if (reached != n) {
    const int first = static_cast<int>(
        std::find(visited.begin(), visited.end(), false) - visited.begin());
    throw DisconnectedGraphError(
        "pose graph is disconnected: vertex " +
        std::to_string(graph.original_ids[first]) +
        " is not reachable from vertex " +
        std::to_string(graph.original_ids[0]) + " (" +
        std::to_string(n - reached) + " unreachable vertices)");
  }
  return poses;
}

SyntheticNoiseSpec SyntheticNoiseSpec::Homoscedastic(double alpha,
                                                     uint64_t seed) {
  SyntheticNoiseSpec spec;
  spec.odometry_information = (alpha * kBaseInformation).asDiagonal();
  spec.loop_information = spec.odometry_information;
  spec.seed = seed;
  spec.alpha = alpha;
  return spec;
}

SyntheticNoiseSpec SyntheticNoiseSpec::Heteroscedastic(double alpha,
                                                       uint64_t seed) {
  SyntheticNoiseSpec spec;
  spec.odometry_information = kOdometryInformation.asDiagonal();
  spec.loop_information = (alpha * kBaseInformation).asDiagonal();
  spec.seed = seed;
  spec.alpha = alpha;
  return spec;
}

SyntheticDataset GenerateManhattanLike(const GeneratorConfig& config,
                                       const SyntheticNoiseSpec& noise) {
  const int n = config.num_poses;
  if (n < 2) throw InvalidArgumentError("num_poses must be at least 2");
  const int side =
      config.grid_size > 0
          ? std::max(config.grid_size, 3)
          : static_cast<int>(std::ceil(std::sqrt(double(n)) / 2.)) + 2;

  // Ground truth: a walk on the integer grid confined to a side x side box,
  // heading along the direction of travel. No U-turns unless cornered.
  CounterRng topology(config.topology_seed);
  const int dx[4] = {1, 0, -1, 0};
  const int dy[4] = {0, 1, 0, -1};
  const int origin = side / 2;
  int cx = origin, cy = origin, heading = 0;
  auto inside = [side](int x, int y) {
    return x >= 0 && y >= 0 && x < side && y < side;
  };

  SyntheticDataset data;
  PoseGraph2D& graph = data.graph;
  std::map<std::pair<int, int>, std::vector<int>> visits;
  std::vector<std::pair<int, int>> loops;
  data.ground_truth.push_back(Pose2::Identity());
  visits[{cx, cy}].push_back(0);
  for (int i = 1; i < n; ++i) {
    int preferred = heading;
    if (topology.Uniform() < config.turn_probability) {
      preferred = (heading + (topology.Uniform() < 0.5 ? 1 : 3)) % 4;
    }
    const int side_turn = topology.Uniform() < 0.5 ? 1 : 3;
    const int options[4] = {preferred, heading, (heading + side_turn) % 4,
                            (heading + 4 - side_turn) % 4};
    int next = (heading + 2) % 4;
    for (int o : options) {
      if (inside(cx + dx[o], cy + dy[o])) {
        next = o;
        break;
      }
    }
    heading = next;
    cx += dx[heading];
    cy += dy[heading];
    data.ground_truth.emplace_back(cx - origin, cy - origin,
                                   heading * std::numbers::pi / 2.);

    std::vector<int>& seen = visits[{cx, cy}];
    std::vector<int> candidates;
    for (int j : seen) {
      if (j < i - 1) candidates.push_back(j);
    }
    if (!candidates.empty() &&
        topology.Uniform() < config.loop_closure_probability) {
      const int pick = std::min<int>(
          static_cast<int>(topology.Uniform() * candidates.size()),
          static_cast<int>(candidates.size()) - 1);
      loops.emplace_back(candidates[pick], i);
    }
    seen.push_back(i);
  }

  std::vector<std::pair<int, int>> pairs;
  size_t next_loop = 0;
  for (int i = 1; i < n; ++i) {
    pairs.emplace_back(i - 1, i);
    while (next_loop < loops.size() && loops[next_loop].second == i) {
      pairs.push_back(loops[next_loop++]);
    }
  }
  if (config.scheme == LoopClosureScheme::kDensified) {
    for (int i = 0; i + 2 < n; ++i) pairs.emplace_back(i, i + 2);
    for (int i = 0; i + 3 < n; ++i) pairs.emplace_back(i, i + 3);
  }

  graph.vertices = data.ground_truth;
  graph.original_ids.resize(n);
  for (int i = 0; i < n; ++i) graph.original_ids[i] = i;
  for (const auto& [from, to] : pairs) {
    graph.edges.push_back({from, to, Pose2(), Eigen::Matrix3d::Identity(),
                           ClassFromIds(from, to)});
  }
  return ResampleMeasurements(graph, data.ground_truth, noise);
}

SyntheticDataset ResampleMeasurements(const PoseGraph2D& topology,
                                      const std::vector<Pose2>& truth,
                                      const SyntheticNoiseSpec& noise) {
  if (static_cast<int>(truth.size()) != topology.num_vertices()) {
    throw DimensionMismatchError("one ground-truth pose per vertex required");
  }
  SyntheticDataset data;
  data.graph = topology;
  data.graph.vertices = truth;
  data.ground_truth = truth;
  CounterRng rng(noise.seed);
  const Eigen::Matrix3d odometry_covariance =
      noise.odometry_information.inverse();
  const Eigen::Matrix3d loop_covariance = noise.loop_information.inverse();
  for (PoseGraphEdge& e : data.graph.edges) {
    Eigen::Vector3d eps = Eigen::Vector3d::Zero();
    if (noise.enabled) {
      eps = SampleGaussian(e.edge_class == EdgeClass::kOdometry
                               ? odometry_covariance
                               : loop_covariance,
                           &rng);
    }
    e.measurement = truth[e.from].inverse() * truth[e.to] * ExpSe2(eps);
    e.information = Eigen::Matrix3d::Identity();
    data.noise.push_back(eps);
  }
  return data;
}

GeneratorSettings ParseGeneratorConfig(std::istream& in) {
  GeneratorSettings settings;
  double alpha = 1.;
  uint64_t seed = 0;
  std::string noise_model = "homoscedastic";
  std::optional<Eigen::Matrix3d> odometry, loop;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), '=', ' ');
    std::vector<std::string> tokens = Tokenize(line);
    if (tokens.empty()) continue;
    const std::string key = tokens[0];
    tokens.erase(tokens.begin());
    auto single = [&]() -> const std::string& {
      if (tokens.size() != 1) {
        throw ParseError(line_number, "expected one value for " + key);
      }
      return tokens[0];
    };
    if (key == "num_poses") {
      settings.generator.num_poses = ParseInt(single(), line_number);
    } else if (key == "alpha") {
      alpha = ParseDouble(single(), line_number);
    } else if (key == "seed") {
      seed = std::stoull(single());
    } else if (key == "topology_seed") {
      settings.generator.topology_seed = std::stoull(single());
    } else if (key == "scheme") {
      const std::string& v = single();
      if (v == "revisits") {
        settings.generator.scheme = LoopClosureScheme::kRevisits;
      } else if (v == "densified") {
        settings.generator.scheme = LoopClosureScheme::kDensified;
      } else {
        throw ParseError(line_number, "unknown scheme '" + v + "'");
      }
    } else if (key == "noise") {
      noise_model = single();
      if (noise_model != "homoscedastic" && noise_model != "heteroscedastic" &&
          noise_model != "none") {
        throw ParseError(line_number, "unknown noise model '" + noise_model +
                                          "'");
      }
    } else if (key == "grid_size") {
      settings.generator.grid_size = ParseInt(single(), line_number);
    } else if (key == "loop_closure_probability") {
      settings.generator.loop_closure_probability =
          ParseDouble(single(), line_number);
    } else if (key == "turn_probability") {
      settings.generator.turn_probability = ParseDouble(single(), line_number);
    } else if (key == "odometry_information") {
      odometry = DiagonalFromTokens(tokens, line_number);
    } else if (key == "loop_information") {
      loop = DiagonalFromTokens(tokens, line_number);
    } else {
      throw ParseError(line_number, "unknown key '" + key + "'");
    }
  }
  settings.noise = noise_model == "heteroscedastic"
                       ? SyntheticNoiseSpec::Heteroscedastic(alpha, seed)
                       : SyntheticNoiseSpec::Homoscedastic(alpha, seed);
  settings.noise.enabled = noise_model != "none";
  if (odometry) settings.noise.odometry_information = *odometry;
  if (loop) settings.noise.loop_information = *loop;
  return settings;
}

JointProblem MakePoseGraphProblem(
    const PoseGraph2D& graph, GroupingMode mode, const NoiseGroup& base,
    const std::vector<Eigen::Matrix3d>& information) {
  auto spec = std::make_shared<ManifoldSpec>();
  for (int v = 0; v < graph.num_vertices(); ++v) spec->AddSe2(v);
  const int num_groups = mode == GroupingMode::kHomoscedastic ? 1 : 2;
  auto group_of = [mode](const PoseGraphEdge& e) {
    return mode == GroupingMode::kHeteroscedastic &&
                   e.edge_class == EdgeClass::kLoopClosure
               ? 1
               : 0;
  };

  std::vector<MeasurementFactor> factors;
  std::vector<Eigen::Matrix3d> mean_information(num_groups,
                                                Eigen::Matrix3d::Zero());
  std::vector<int> counts(num_groups, 0);
  for (int e = 0; e < graph.num_edges(); ++e) {
    const PoseGraphEdge& edge = graph.edges[e];
    const int g = group_of(edge);
    factors.push_back(MeasurementFactor::RelativeSe2(e, edge.from, edge.to,
                                                     edge.measurement, g));
    mean_information[g] += edge.information;
    ++counts[g];
  }
  std::vector<NoiseGroup> groups;
  for (int g = 0; g < num_groups; ++g) {
    NoiseGroup group = base;
    group.id = g;
    group.dim = 3;
    if (static_cast<int>(information.size()) > g) {
      group.information = information[g];
    } else if (counts[g] > 0) {
      group.information = mean_information[g] / counts[g];
    } else {
      group.information = Eigen::Matrix3d::Identity();
    }
    groups.push_back(group);
  }
  return JointProblem(spec, std::move(groups), std::move(factors), {0});
}

ManifoldPoint PosesToPoint(const JointProblem& problem,
                           const std::vector<Pose2>& poses) {
  if (static_cast<int>(poses.size()) != problem.spec().num_blocks()) {
    throw DimensionMismatchError("one pose per block required");
  }
  ManifoldPoint x(problem.spec_ptr());
  for (size_t i = 0; i < poses.size(); ++i) {
    x.set_pose(static_cast<int>(i), poses[i]);
  }
  return x;
}

std::vector<Pose2> PointToPoses(const ManifoldPoint& x) {
  std::vector<Pose2> poses;
  poses.reserve(x.spec().num_blocks());
  for (int i = 0; i < x.spec().num_blocks(); ++i) poses.push_back(x.pose(i));
  return poses;
}

}  // namespace jointcov

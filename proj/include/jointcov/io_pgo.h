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


#ifndef JOINTCOV_IO_PGO_H_
#define JOINTCOV_IO_PGO_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "Eigen/Core"
#include "jointcov/covariance.h"
#include "jointcov/manifold.h"
#include "jointcov/problem.h"

namespace jointcov {

enum class EdgeClass { kOdometry, kLoopClosure };

std::string ToString(EdgeClass edge_class);

struct PoseGraphEdge {
  int from = 0;
  int to = 0;
  Pose2 measurement;
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
  EdgeClass edge_class = EdgeClass::kOdometry;

  bool operator==(const PoseGraphEdge& other) const;
};

// Vertices are indexed densely 0..n-1; `original_ids` keeps the file ids.
struct PoseGraph2D {
  std::vector<Pose2> vertices;
  std::vector<int> original_ids;
  std::vector<PoseGraphEdge> edges;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int CountEdges(EdgeClass edge_class) const;
  bool operator==(const PoseGraph2D& other) const;
};

// Reads VERTEX_SE2 / EDGE_SE2 lines. Unknown tags are skipped; their line
// numbers are appended to `skipped_lines` when given. Edges between
// consecutive ids are odometry, everything else is a loop closure.
PoseGraph2D ParseG2o(std::istream& in,
                     std::vector<int>* skipped_lines = nullptr);
PoseGraph2D ReadG2oFile(const std::string& path);

// 17 significant digits; edge order preserved.
void WriteG2o(const PoseGraph2D& graph, std::ostream& out);
std::string WriteG2oString(const PoseGraph2D& graph);
void WriteG2oFile(const PoseGraph2D& graph, const std::string& path);

// Lines "from to odometry|loop" (file ids) reassign edge classes.
void ApplyClassOverrides(std::istream& in, PoseGraph2D* graph);

// Breadth-first tree from vertex 0, composing edge measurements.
std::vector<Pose2> SpanningTreeInit(const PoseGraph2D& graph);

// Noise information per edge class.
struct SyntheticNoiseSpec {
  Eigen::Matrix3d odometry_information = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d loop_information = Eigen::Matrix3d::Identity();
  uint64_t seed = 0;
  double alpha = 1.;
  // Noise-free measurements when false.
  bool enabled = true;

  // alpha * diag(20, 40, 30) for both classes.
  static SyntheticNoiseSpec Homoscedastic(double alpha, uint64_t seed);
  // diag(1000, 1000, 800) for odometry, alpha * diag(20, 40, 30) for loop
  // closures.
  static SyntheticNoiseSpec Heteroscedastic(double alpha, uint64_t seed);
};

enum class LoopClosureScheme { kRevisits, kDensified };

struct GeneratorConfig {
  int num_poses = 500;
  LoopClosureScheme scheme = LoopClosureScheme::kRevisits;
  // Side length of the square grid the walk is confined to; 0 picks
  // ceil(sqrt(num_poses) / 2) + 2.
  int grid_size = 0;
  // Chance that a revisit of an earlier cell produces a loop closure. The
  // default gives about 1.6 edges per pose, the Manhattan benchmark ratio.
  double loop_closure_probability = 0.82;
  // Chance of turning at each step.
  double turn_probability = 0.3;
  // Seed of the trajectory and topology (noise uses the noise spec seed).
  uint64_t topology_seed = 1;
};

struct SyntheticDataset {
  PoseGraph2D graph;
  std::vector<Pose2> ground_truth;
  // Tangent-space noise drawn for each edge, in edge order.
  std::vector<Eigen::Vector3d> noise;
};

SyntheticDataset GenerateManhattanLike(const GeneratorConfig& config,
                                       const SyntheticNoiseSpec& noise);

// Fresh measurements on the edges of `topology`: z = h(truth) * Exp(eps),
// eps ~ N(0, class covariance). Edge information is set to identity.
SyntheticDataset ResampleMeasurements(const PoseGraph2D& topology,
                                      const std::vector<Pose2>& truth,
                                      const SyntheticNoiseSpec& noise);

// Key-value file: num_poses, alpha, seed, topology_seed, scheme
// (revisits|densified), noise (homoscedastic|heteroscedastic|none),
// grid_size, loop_closure_probability, turn_probability and optional
// odometry_information / loop_information diagonals ("a b c").
struct GeneratorSettings {
  GeneratorConfig generator;
  SyntheticNoiseSpec noise;
};
GeneratorSettings ParseGeneratorConfig(std::istream& in);

// How pose-graph edges map to noise groups.
enum class GroupingMode { kHomoscedastic, kHeteroscedastic };

// Group 0 = all edges (homoscedastic) or odometry; group 1 = loop closures.
// Vertex 0 is the gauge. Each group starts from `base` with its information
// replaced by `information[g]` when provided, else by the mean of the file
// information matrices of its edges.
JointProblem MakePoseGraphProblem(
    const PoseGraph2D& graph, GroupingMode mode, const NoiseGroup& base,
    const std::vector<Eigen::Matrix3d>& information = {});

// Vertex poses packed into a point of the problem's manifold.
ManifoldPoint PosesToPoint(const JointProblem& problem,
                           const std::vector<Pose2>& poses);
std::vector<Pose2> PointToPoses(const ManifoldPoint& x);

}  // namespace jointcov

#endif  // JOINTCOV_IO_PGO_H_

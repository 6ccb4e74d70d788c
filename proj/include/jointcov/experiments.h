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


#ifndef JOINTCOV_EXPERIMENTS_H_
#define JOINTCOV_EXPERIMENTS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "Eigen/Core"
#include "jointcov/covariance.h"
#include "jointcov/io_pgo.h"
#include "jointcov/joint.h"
#include "jointcov/problem.h"
#include "jointcov/results.h"

namespace jointcov {

enum class ExperimentKind { kLinearMc, kPgoAblation, kSingleRun };

std::string ToString(ExperimentKind kind);
ExperimentKind ParseExperimentKind(const std::string& name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kLinearMc;
  int trials = 20;
  uint64_t seed = 1;
  // sigma^2 values (linear) or information levels alpha (pose graphs).
  std::vector<double> noise_levels = {0.01, 1., 100.};
  // Empty selects every algorithm of the experiment.
  std::vector<std::string> algorithms;
  // Wishart prior: Sigma_0 = prior_sigma * I with weight prior_weight.
  double prior_weight = 0.1;
  double prior_sigma = 0.002;
  EigenvalueBounds bounds;
  std::string csv_path;
  std::string json_path;

  // Linear model.
  int linear_states = 20;
  int linear_measurements = 50;
  int linear_measurement_dim = 5;
  int linear_iterations = 25;

  // Pose graphs.
  GeneratorConfig generator;
  // When set, this file supplies topology and ground truth instead of the
  // generator; its measurements are re-sampled per trial.
  std::string dataset_path;
  GroupingMode grouping = GroupingMode::kHomoscedastic;
  int outer_iterations = 13;
  int baseline_iterations = 8;
  // Block-exact instead of hybrid BCD.
  bool exact_bcd = false;

  // Zero wall times keep result files bit-identical across runs.
  bool record_timing = false;
  // 0 uses the hardware concurrency.
  int num_threads = 0;

  static ExperimentConfig LinearMcDefaults();
  static ExperimentConfig PgoAblationDefaults();
};

// Key-value lines ("key = value"); lists are space separated. Overrides
// only the keys present.
void ApplyConfigFile(std::istream& in, ExperimentConfig* config);

std::vector<std::string> LinearAlgorithms();  // elimination, bcd, fixed-*
std::vector<std::string> PgoAlgorithms();     // bcd[-diag][-wishart], fixed-*

struct AlgorithmOutcome {
  std::string algorithm;
  double rmse = 0.;
  // Per noise group.
  std::vector<double> w2;
  std::vector<Eigen::MatrixXd> covariance;
  double final_f = 0.;
  int iterations = 0;
  double wall_ms = 0.;
  std::string status;
  // F(x0, P0), then F after each x-step and after each P-step.
  std::vector<double> objective_trace;
  std::vector<double> covariance_update_ms;
};

struct TrialRecord {
  std::string experiment;
  double noise_level = 0.;
  int trial = 0;
  uint64_t seed = 0;
  std::vector<AlgorithmOutcome> outcomes;

  const AlgorithmOutcome* Find(const std::string& algorithm) const;
};

struct LinearInstance {
  JointProblem problem;
  ManifoldPoint x_true;
  Eigen::MatrixXd sigma_true;
};

// A^T A / m with A an m x m standard normal matrix drawn from `seed`.
Eigen::MatrixXd LinearBaseCovariance(int dim, uint64_t seed);

// z_i = H_i x_true + eps_i with H_i standard normal, x_true = 1 and
// eps_i ~ N(0, sigma_base + sigma2 I). One ML-unconstrained noise group.
LinearInstance MakeLinearInstance(const ExperimentConfig& config,
                                  const Eigen::MatrixXd& sigma_base,
                                  double sigma2, uint64_t seed);

std::vector<TrialRecord> RunLinearMc(const ExperimentConfig& config);
std::vector<TrialRecord> RunPgoAblation(const ExperimentConfig& config);

ResultTable ToResultTable(const std::vector<TrialRecord>& records);

// Single pose-graph solve.
struct PoseGraphSolveOptions {
  CovarianceVariant variant = CovarianceVariant::kMapDiagEig;
  GroupingMode grouping = GroupingMode::kHeteroscedastic;
  double prior_weight = 0.1;
  double prior_sigma = 0.002;
  EigenvalueBounds bounds;
  JointAlgorithm algorithm = JointAlgorithm::kHybridBcd;
  int outer_iterations = 13;
};

struct PoseGraphSolution {
  // Estimated poses; edge information replaced by the group estimates.
  PoseGraph2D graph;
  JointResult result;
};

// Initializes with SpanningTreeInit. Fixed variants use the mean file
// information of each group.
PoseGraphSolution SolvePoseGraph(const PoseGraph2D& graph,
                                 const PoseGraphSolveOptions& options);

// Sets every group to `variant`; MAP variants get a mode-matched Wishart
// prior with Sigma_0 = prior_sigma * I.
JointProblem WithVariant(const JointProblem& problem,
                         CovarianceVariant variant, double prior_weight,
                         double prior_sigma);

}  // namespace jointcov

#endif  // JOINTCOV_EXPERIMENTS_H_

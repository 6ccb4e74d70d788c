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


// Command-line front end: linear-mc, pgo, solve, calibrate, generate.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "Eigen/LU"
#include "nlohmann/json.hpp"
#include "jointcov/covariance.h"
#include "jointcov/error.h"
#include "jointcov/experiments.h"
#include "jointcov/io_pgo.h"
#include "jointcov/joint.h"
#include "jointcov/results.h"

namespace {

using jointcov::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
};

void AddCommonFlags(CLI::App* app, ExperimentConfig* c, CommonFlags* flags) {
  app->add_option("--config", flags->config_path,
                  "Key-value config file; its entries override flags");
  app->add_option("--trials", c->trials, "Monte Carlo trials per level")
      ->check(CLI::PositiveNumber);
  app->add_option("--seed", c->seed, "Master seed");
  app->add_option("--algorithms", c->algorithms,
                  "Subset of algorithms (default: all)");
  app->add_option("--csv", c->csv_path, "CSV output path");
  app->add_option("--json", c->json_path, "JSON output path");
  app->add_option("--threads", c->num_threads, "Worker threads (0 = auto)");
  app->add_flag("--timing", c->record_timing,
                "Record wall times (results are no longer bit-reproducible)");
}

void ApplyConfig(const CommonFlags& flags, ExperimentConfig* c) {
  if (flags.config_path.empty()) return;
  std::ifstream in(flags.config_path);
  if (!in) throw jointcov::InvalidArgumentError("cannot open " +
                                                flags.config_path);
  jointcov::ApplyConfigFile(in, c);
}

double Mean(const std::vector<double>& v) {
  double s = 0.;
  int n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  }
  return n ? s / n : std::nan("");
}

void PrintSummary(const std::vector<jointcov::TrialRecord>& records) {
  // (level, algorithm) -> metric lists, in first-seen order.
  std::vector<std::pair<double, std::string>> keys;
  std::map<std::pair<double, std::string>, std::vector<double>> rmse, w2a,
      w2b;
  for (const jointcov::TrialRecord& r : records) {
    for (const jointcov::AlgorithmOutcome& o : r.outcomes) {
      const auto key = std::make_pair(r.noise_level, o.algorithm);
      if (!rmse.count(key)) keys.push_back(key);
      rmse[key].push_back(o.rmse);
      w2a[key].push_back(o.w2.size() > 0 ? o.w2[0] : std::nan(""));
      w2b[key].push_back(o.w2.size() > 1 ? o.w2[1] : std::nan(""));
    }
  }
  std::cout << std::left << std::setw(12) << "level" << std::setw(20)
            << "algorithm" << std::setw(14) << "mean_rmse" << std::setw(14)
            << "mean_w2_g0" << "mean_w2_g1\n";
  for (const auto& key : keys) {
    std::cout << std::left << std::setw(12) << key.first << std::setw(20)
              << key.second << std::setw(14) << Mean(rmse[key])
              << std::setw(14) << Mean(w2a[key]) << Mean(w2b[key]) << '\n';
  }
}

void Emit(const ExperimentConfig& c,
          const std::vector<jointcov::TrialRecord>& records) {
  const jointcov::ResultTable table = jointcov::ToResultTable(records);
  if (!c.csv_path.empty()) jointcov::WriteResultFile(table, c.csv_path);
  if (!c.json_path.empty()) {
    std::ofstream out(c.json_path);
    if (!out) throw jointcov::InvalidArgumentError("cannot write " +
                                                   c.json_path);
    jointcov::WriteJson(table, out);
  }
  PrintSummary(records);
}

jointcov::GroupingMode ParseGrouping(const std::string& s) {
  if (s == "homoscedastic") return jointcov::GroupingMode::kHomoscedastic;
  if (s == "heteroscedastic") return jointcov::GroupingMode::kHeteroscedastic;
  throw jointcov::InvalidArgumentError("unknown grouping '" + s + "'");
}

jointcov::JointAlgorithm ParseAlgorithm(const std::string& s) {
  if (s == "hybrid") return jointcov::JointAlgorithm::kHybridBcd;
  if (s == "exact") return jointcov::JointAlgorithm::kBlockExactBcd;
  if (s == "elimination") return jointcov::JointAlgorithm::kElimination;
  throw jointcov::InvalidArgumentError("unknown algorithm '" + s + "'");
}

jointcov::PoseGraph2D LoadGraph(const std::string& path,
                                const std::string& classes_path) {
  jointcov::PoseGraph2D graph = jointcov::ReadG2oFile(path);
  if (!classes_path.empty()) {
    std::ifstream in(classes_path);
    if (!in) throw jointcov::InvalidArgumentError("cannot open " +
                                                  classes_path);
    jointcov::ApplyClassOverrides(in, &graph);
  }
  return graph;
}

nlohmann::ordered_json MatrixJson(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (int j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint estimation of states and measurement noise covariances"};
  app.require_subcommand(1);

  // linear-mc
  ExperimentConfig linear = ExperimentConfig::LinearMcDefaults();
  CommonFlags linear_flags;
  CLI::App* linear_cmd =
      app.add_subcommand("linear-mc", "Linear-model Monte Carlo study");
  AddCommonFlags(linear_cmd, &linear, &linear_flags);
  linear_cmd->add_option("--noise-levels", linear.noise_levels,
                         "sigma^2 grid");
  linear_cmd->add_option("--iterations", linear.linear_iterations,
                         "BCD outer iteration cap");
  linear_cmd->add_option("--states", linear.linear_states, "State dimension");
  linear_cmd->add_option("--measurements", linear.linear_measurements,
                         "Measurements per trial");
  linear_cmd->add_option("--measurement-dim", linear.linear_measurement_dim,
                         "Measurement dimension");

  // pgo
  ExperimentConfig pgo = ExperimentConfig::PgoAblationDefaults();
  CommonFlags pgo_flags;
  std::string pgo_grouping = "homoscedastic", pgo_scheme = "revisits";
  CLI::App* pgo_cmd =
      app.add_subcommand("pgo", "Pose-graph ablation of the BCD variants");
  AddCommonFlags(pgo_cmd, &pgo, &pgo_flags);
  pgo_cmd->add_option("--alphas", pgo.noise_levels, "Information levels");
  pgo_cmd->add_option("--num-poses", pgo.generator.num_poses,
                      "Generated poses");
  pgo_cmd->add_option("--scheme", pgo_scheme, "revisits | densified");
  pgo_cmd->add_option("--topology-seed", pgo.generator.topology_seed,
                      "Seed of the generated trajectory");
  pgo_cmd->add_option("--grouping", pgo_grouping,
                      "homoscedastic | heteroscedastic");
  pgo_cmd->add_option("--dataset", pgo.dataset_path,
                      "g2o file whose vertices are taken as ground truth");
  pgo_cmd->add_option("--outer-iterations", pgo.outer_iterations,
                      "BCD outer iterations");
  pgo_cmd->add_option("--baseline-iterations", pgo.baseline_iterations,
                      "LM iterations of the fixed baselines");
  pgo_cmd->add_option("--prior-weight", pgo.prior_weight, "w_prior");
  pgo_cmd->add_option("--prior-sigma", pgo.prior_sigma,
                      "Sigma_0 = prior_sigma * I");
  pgo_cmd->add_option("--lambda-min", pgo.bounds.min,
                      "Lower covariance eigenvalue bound");
  pgo_cmd->add_option("--lambda-max", pgo.bounds.max,
                      "Upper covariance eigenvalue bound");
  pgo_cmd->add_flag("--exact", pgo.exact_bcd,
                    "Block-exact BCD instead of hybrid");
  bool full_scale = false;
  pgo_cmd->add_flag("--full-scale", full_scale,
                    "3500 poses, 50 trials, alpha in {5,10,20,30,40}");

  // solve
  std::string solve_input, solve_output, solve_classes, solve_variant =
      "map-diag-eig", solve_grouping = "heteroscedastic",
      solve_algorithm = "hybrid";
  jointcov::PoseGraphSolveOptions solve_options;
  CLI::App* solve_cmd =
      app.add_subcommand("solve", "Jointly solve one SE(2) g2o dataset");
  solve_cmd->add_option("--input", solve_input, "Input g2o file")->required();
  solve_cmd->add_option("--output", solve_output,
                        "Output g2o with estimated poses and information");
  solve_cmd->add_option("--classes", solve_classes,
                        "Edge-class override file ('from to odometry|loop')");
  solve_cmd->add_option("--variant", solve_variant,
                        "map[-diag][-eig] | ml[-diag][-eig] | fixed");
  solve_cmd->add_option("--grouping", solve_grouping,
                        "homoscedastic | heteroscedastic");
  solve_cmd->add_option("--algorithm", solve_algorithm,
                        "hybrid | exact | elimination");
  solve_cmd->add_option("--iterations", solve_options.outer_iterations,
                        "Outer iterations");
  solve_cmd->add_option("--prior-weight", solve_options.prior_weight,
                        "w_prior");
  solve_cmd->add_option("--prior-sigma", solve_options.prior_sigma,
                        "Sigma_0 = prior_sigma * I");
  solve_cmd->add_option("--lambda-min", solve_options.bounds.min,
                        "Lower covariance eigenvalue bound");
  solve_cmd->add_option("--lambda-max", solve_options.bounds.max,
                        "Upper covariance eigenvalue bound");

  // calibrate
  std::string calibrate_input, calibrate_classes,
      calibrate_variant = "ml", calibrate_grouping = "heteroscedastic";
  CLI::App* calibrate_cmd = app.add_subcommand(
      "calibrate",
      "Estimate noise covariances with the g2o vertices as known states");
  calibrate_cmd->add_option("--input", calibrate_input, "Input g2o file")
      ->required();
  calibrate_cmd->add_option("--classes", calibrate_classes,
                            "Edge-class override file");
  calibrate_cmd->add_option("--variant", calibrate_variant,
                            "Covariance variant");
  calibrate_cmd->add_option("--grouping", calibrate_grouping,
                            "homoscedastic | heteroscedastic");
  double calibrate_prior_weight = 0.1, calibrate_prior_sigma = 0.002;
  calibrate_cmd->add_option("--prior-weight", calibrate_prior_weight,
                            "w_prior (MAP variants)");
  calibrate_cmd->add_option("--prior-sigma", calibrate_prior_sigma,
                            "Sigma_0 = prior_sigma * I (MAP variants)");

  // generate
  std::string generate_config, generate_output, generate_truth;
  CLI::App* generate_cmd = app.add_subcommand(
      "generate", "Write a synthetic Manhattan-like g2o dataset");
  generate_cmd->add_option("--config", generate_config,
                           "Generator key-value file")
      ->required();
  generate_cmd->add_option("--output", generate_output,
                           "Noisy g2o output (vertices from spanning tree)")
      ->required();
  generate_cmd->add_option("--truth", generate_truth,
                           "Ground-truth g2o output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*linear_cmd) {
      ApplyConfig(linear_flags, &linear);
      linear.experiment = jointcov::ExperimentKind::kLinearMc;
      Emit(linear, jointcov::RunLinearMc(linear));
    } else if (*pgo_cmd) {
      pgo.grouping = ParseGrouping(pgo_grouping);
      if (pgo_scheme == "densified") {
        pgo.generator.scheme = jointcov::LoopClosureScheme::kDensified;
      } else if (pgo_scheme != "revisits") {
        throw jointcov::InvalidArgumentError("unknown scheme " + pgo_scheme);
      }
      if (full_scale) {
        pgo.generator.num_poses = 3500;
        pgo.trials = 50;
        pgo.noise_levels = {5., 10., 20., 30., 40.};
      }
      ApplyConfig(pgo_flags, &pgo);
      pgo.experiment = jointcov::ExperimentKind::kPgoAblation;
      Emit(pgo, jointcov::RunPgoAblation(pgo));
    } else if (*solve_cmd) {
      solve_options.variant = jointcov::ParseCovarianceVariant(solve_variant);
      solve_options.grouping = ParseGrouping(solve_grouping);
      solve_options.algorithm = ParseAlgorithm(solve_algorithm);
      const jointcov::PoseGraphSolution solution = jointcov::SolvePoseGraph(
          LoadGraph(solve_input, solve_classes), solve_options);
      if (!solve_output.empty()) {
        jointcov::WriteG2oFile(solution.graph, solve_output);
      }
      nlohmann::ordered_json report;
      report["objective"] = solution.result.objective;
      report["iterations"] = solution.result.iterations;
      report["converged"] = solution.result.converged;
      report["hit_eigenvalue_bound"] = solution.result.hit_eigenvalue_bound;
      nlohmann::ordered_json cov = nlohmann::ordered_json::array();
      for (const Eigen::MatrixXd& p : solution.result.information) {
        cov.push_back(MatrixJson(p.inverse()));
      }
      report["covariances"] = cov;
      std::cout << report.dump(2) << '\n';
    } else if (*calibrate_cmd) {
      const jointcov::PoseGraph2D graph =
          LoadGraph(calibrate_input, calibrate_classes);
      const jointcov::JointProblem problem = jointcov::WithVariant(
          jointcov::MakePoseGraphProblem(graph,
                                         ParseGrouping(calibrate_grouping),
                                         jointcov::NoiseGroup{}),
          jointcov::ParseCovarianceVariant(calibrate_variant),
          calibrate_prior_weight, calibrate_prior_sigma);
      const auto solutions = jointcov::Calibrate(
          problem, jointcov::PosesToPoint(problem, graph.vertices));
      nlohmann::ordered_json cov = nlohmann::ordered_json::array();
      for (const jointcov::InnerSolution& s : solutions) {
        cov.push_back(MatrixJson(s.information.inverse()));
      }
      std::cout << nlohmann::ordered_json{{"covariances", cov}}.dump(2)
                << '\n';
    } else if (*generate_cmd) {
      std::ifstream in(generate_config);
      if (!in) throw jointcov::InvalidArgumentError("cannot open " +
                                                    generate_config);
      const jointcov::GeneratorSettings settings =
          jointcov::ParseGeneratorConfig(in);
      jointcov::SyntheticDataset data =
          jointcov::GenerateManhattanLike(settings.generator, settings.noise);
      if (!generate_truth.empty()) {
        jointcov::WriteG2oFile(data.graph, generate_truth);
      }
      data.graph.vertices = jointcov::SpanningTreeInit(data.graph);
      jointcov::WriteG2oFile(data.graph, generate_output);
      std::cout << "wrote " << data.graph.num_vertices() << " poses, "
                << data.graph.num_edges() << " edges ("
                << data.graph.CountEdges(jointcov::EdgeClass::kLoopClosure)
                << " loop closures)\n";
    }
  } catch (const jointcov::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

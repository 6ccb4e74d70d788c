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


#include "jointcov/experiments.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "Eigen/Cholesky"
#include "jointcov/error.h"
#include "jointcov/metrics.h"
#include "jointcov/nls.h"
#include "jointcov/rng.h"

namespace jointcov {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Stream tag of the fixed base covariance of the linear study.
constexpr uint64_t kBaseCovarianceStream = 0x5eedba5e;

template <typename Fn>
void ParallelFor(int num_tasks, int num_threads, const Fn& fn) {
  if (num_threads <= 0) {
    num_threads = std::max(1u, std::thread::hardware_concurrency());
  }
  num_threads = std::min(num_threads, num_tasks);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < num_threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next++; i < num_tasks; i = next++) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled)
      : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double ElapsedMs() const {
    if (!enabled_) return 0.;
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

Eigen::MatrixXd Inverse(const Eigen::MatrixXd& p) {
  Eigen::LLT<Eigen::MatrixXd> llt(p);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("information matrix is not PD");
  }
  return llt.solve(Eigen::MatrixXd::Identity(p.rows(), p.cols()));
}

std::string JoinFlags(const std::vector<std::string>& flags) {
  if (flags.empty()) return "ok";
  std::string out;
  for (const std::string& f : flags) out += (out.empty() ? "" : "+") + f;
  return out;
}

std::string StatusOf(const JointResult& r) {
  std::vector<std::string> flags;
  if (!r.converged) flags.push_back("max-iter");
  if (r.hit_eigenvalue_bound) flags.push_back("bound");
  if (r.ill_posed_ml_detected) flags.push_back("ill-posed");
  if (r.warning) flags.push_back("warning");
  return JoinFlags(flags);
}

std::string StatusOf(const NlsResult& r) {
  std::vector<std::string> flags;
  if (!r.converged) flags.push_back("max-iter");
  if (r.damping_failure) flags.push_back("warning");
  return JoinFlags(flags);
}

void FillJoint(const JointResult& r, bool interleaved, AlgorithmOutcome* out) {
  out->final_f = r.objective;
  out->iterations = r.iterations;
  out->status = StatusOf(r);
  for (size_t t = 0; t < r.trace.size(); ++t) {
    if (interleaved && t > 0) {
      out->objective_trace.push_back(r.trace[t].objective_after_x_step);
    }
    out->objective_trace.push_back(r.trace[t].objective);
    out->covariance_update_ms.push_back(r.trace[t].covariance_update_ms);
  }
  for (const Eigen::MatrixXd& p : r.information) {
    out->covariance.push_back(Inverse(p));
  }
}

void FillFixed(const JointProblem& problem, const NlsResult& r,
               const GroupInformation& information, AlgorithmOutcome* out) {
  out->final_f = JointObjective(problem, r.x, information);
  out->iterations = static_cast<int>(r.trace.size());
  out->status = StatusOf(r);
  for (const Eigen::MatrixXd& p : information) {
    out->covariance.push_back(Inverse(p));
  }
}

void MarkFailed(const std::exception& e, AlgorithmOutcome* out) {
  out->rmse = out->final_f = kNaN;
  out->w2.clear();
  out->covariance.clear();
  out->status = std::string("error: ") + e.what();
}

JointProblem WithFixedInformation(const JointProblem& problem,
                                  const GroupInformation& information) {
  std::vector<NoiseGroup> groups = problem.groups();
  for (NoiseGroup& g : groups) {
    g.variant = CovarianceVariant::kFixed;
    g.prior.reset();
    g.information = information[g.id];
  }
  return problem.WithGroups(std::move(groups));
}

TrialRecord RunLinearTrial(const ExperimentConfig& config,
                           const Eigen::MatrixXd& sigma_base, double level,
                           int trial) {
  TrialRecord record{ToString(config.experiment), level, trial,
                     DeriveSeed(config.seed, static_cast<uint64_t>(trial))};
  const LinearInstance instance =
      MakeLinearInstance(config, sigma_base, level, record.seed);
  const ManifoldPoint x0(instance.problem.spec_ptr());
  const std::vector<std::string> algorithms =
      config.algorithms.empty() ? LinearAlgorithms() : config.algorithms;
  for (const std::string& name : algorithms) {
    AlgorithmOutcome out{name};
    try {
      const Stopwatch watch(config.record_timing);
      ManifoldPoint x = x0;
      if (name == "elimination" || name == "bcd") {
        JointConfig jc;
        jc.algorithm = name == "bcd" ? JointAlgorithm::kBlockExactBcd
                                     : JointAlgorithm::kElimination;
        jc.max_outer_iterations = config.linear_iterations;
        const JointResult r = RunJoint(instance.problem, x0, jc);
        out.wall_ms = watch.ElapsedMs();
        FillJoint(r, name == "bcd", &out);
        x = r.x;
      } else if (name == "fixed-true" || name == "fixed-identity") {
        const GroupInformation info = {
            name == "fixed-true"
                ? Inverse(instance.sigma_true)
                : Eigen::MatrixXd::Identity(config.linear_measurement_dim,
                                            config.linear_measurement_dim)};
        const JointProblem fixed =
            WithFixedInformation(instance.problem, info);
        const NlsResult r = SolveFixedInformation(fixed, x0, info);
        out.wall_ms = watch.ElapsedMs();
        FillFixed(fixed, r, info, &out);
        x = r.x;
      } else {
        throw InvalidArgumentError("unknown linear algorithm '" + name + "'");
      }
      out.rmse = Rmse(x, instance.x_true);
      out.w2 = {Wasserstein2(out.covariance[0], instance.sigma_true)};
    } catch (const std::exception& e) {
      MarkFailed(e, &out);
    }
    record.outcomes.push_back(std::move(out));
  }
  return record;
}

CovarianceVariant PgoVariantOf(const std::string& name) {
  if (name == "bcd") return CovarianceVariant::kMlEig;
  if (name == "bcd-diag") return CovarianceVariant::kMlDiagEig;
  if (name == "bcd-wishart") return CovarianceVariant::kMapEig;
  if (name == "bcd-diag-wishart") return CovarianceVariant::kMapDiagEig;
  throw InvalidArgumentError("unknown pose-graph algorithm '" + name + "'");
}

TrialRecord RunPgoTrial(const ExperimentConfig& config,
                        const PoseGraph2D& topology,
                        const std::vector<Pose2>& truth, double level,
                        int trial) {
  TrialRecord record{ToString(config.experiment), level, trial,
                     DeriveSeed(config.seed, static_cast<uint64_t>(trial))};
  const SyntheticNoiseSpec noise =
      config.grouping == GroupingMode::kHomoscedastic
          ? SyntheticNoiseSpec::Homoscedastic(level, record.seed)
          : SyntheticNoiseSpec::Heteroscedastic(level, record.seed);
  const SyntheticDataset data = ResampleMeasurements(topology, truth, noise);
  GroupInformation true_information = {noise.odometry_information};
  if (config.grouping == GroupingMode::kHeteroscedastic) {
    true_information.push_back(noise.loop_information);
  }
  std::vector<Eigen::MatrixXd> sigma_true;
  for (const Eigen::MatrixXd& p : true_information) {
    sigma_true.push_back(Inverse(p));
  }

  NoiseGroup base;
  base.bounds = config.bounds;
  const JointProblem problem =
      MakePoseGraphProblem(data.graph, config.grouping, base);
  const ManifoldPoint x_true = PosesToPoint(problem, truth);
  const ManifoldPoint x_init =
      PosesToPoint(problem, SpanningTreeInit(data.graph));

  const std::vector<std::string> algorithms =
      config.algorithms.empty() ? PgoAlgorithms() : config.algorithms;
  for (const std::string& name : algorithms) {
    AlgorithmOutcome out{name};
    try {
      const Stopwatch watch(config.record_timing);
      ManifoldPoint x = x_init;
      if (name == "fixed-true" || name == "fixed-identity") {
        GroupInformation info = true_information;
        if (name == "fixed-identity") {
          for (Eigen::MatrixXd& p : info) p.setIdentity();
        }
        const JointProblem fixed = WithFixedInformation(problem, info);
        NlsConfig nc;
        nc.max_iterations = config.baseline_iterations;
        const NlsResult r = SolveFixedInformation(fixed, x_init, info, nc);
        out.wall_ms = watch.ElapsedMs();
        FillFixed(fixed, r, info, &out);
        x = r.x;
      } else {
        const JointProblem variant = WithVariant(
            problem, PgoVariantOf(name), config.prior_weight, config.prior_sigma);
        JointConfig jc;
        jc.algorithm = config.exact_bcd ? JointAlgorithm::kBlockExactBcd
                                        : JointAlgorithm::kHybridBcd;
        jc.max_outer_iterations = config.outer_iterations;
        jc.nls.step_mode = StepMode::kSingleIteration;
        const JointResult r = RunJoint(variant, x_init, jc);
        out.wall_ms = watch.ElapsedMs();
        FillJoint(r, /*interleaved=*/true, &out);
        x = r.x;
      }
      out.rmse = Rmse(x, x_true, RmseComponents::kPositions);
      for (size_t g = 0; g < sigma_true.size(); ++g) {
        out.w2.push_back(Wasserstein2(out.covariance[g], sigma_true[g]));
      }
    } catch (const std::exception& e) {
      MarkFailed(e, &out);
    }
    record.outcomes.push_back(std::move(out));
  }
  return record;
}

std::vector<double> ParseDoubles(const std::vector<std::string>& tokens,
                                 int line) {
  std::vector<double> out;
  for (const std::string& t : tokens) {
    try {
      size_t used = 0;
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw ParseError(line, "bad number '" + t + "'");
    }
  }
  return out;
}

// Splits list values on commas as well as whitespace.
std::vector<std::string> ListItems(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (const std::string& t : tokens) {
    std::istringstream in(t);
    for (std::string item; std::getline(in, item, ',');) {
      if (!item.empty()) out.push_back(item);
    }
  }
  return out;
}

void CheckAlgorithms(const std::vector<std::string>& selected,
                     const std::vector<std::string>& known,
                     const std::string& experiment) {
  for (const std::string& name : selected) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw InvalidArgumentError("unknown " + experiment + " algorithm '" +
                                 name + "'");
    }
  }
}

bool ParseBool(const std::string& s, int line) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError(line, "bad boolean '" + s + "'");
}

}  // namespace

std::string ToString(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kLinearMc:
      return "linear-mc";
    case ExperimentKind::kPgoAblation:
      return "pgo-ablation";
    case ExperimentKind::kSingleRun:
      return "single-run";
  }
  return "unknown";
}

ExperimentKind ParseExperimentKind(const std::string& name) {
  if (name == "linear-mc") return ExperimentKind::kLinearMc;
  if (name == "pgo-ablation") return ExperimentKind::kPgoAblation;
  if (name == "single-run") return ExperimentKind::kSingleRun;
  throw InvalidArgumentError("unknown experiment '" + name + "'");
}

ExperimentConfig ExperimentConfig::LinearMcDefaults() { return {}; }

ExperimentConfig ExperimentConfig::PgoAblationDefaults() {
  ExperimentConfig config;
  config.experiment = ExperimentKind::kPgoAblation;
  config.trials = 10;
  config.noise_levels = {5., 10., 20., 30., 40.};
  return config;
}

void ApplyConfigFile(std::istream& in, ExperimentConfig* config) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), '=', ' ');
    std::istringstream tokens_in(line);
    std::vector<std::string> tokens;
    for (std::string t; tokens_in >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    const std::string key = tokens[0];
    tokens.erase(tokens.begin());
    if (tokens.empty()) throw ParseError(n, "missing value for " + key);
    const std::string& v = tokens[0];
    auto number = [&]() {
      if (tokens.size() != 1) throw ParseError(n, "one value expected");
      return ParseDoubles(tokens, n)[0];
    };
    auto integer = [&]() {
      const double d = number();
      if (d != std::floor(d)) throw ParseError(n, "integer expected");
      return static_cast<int>(d);
    };
    ExperimentConfig& c = *config;
    if (key == "experiment") {
      c.experiment = ParseExperimentKind(v);
    } else if (key == "trials") {
      c.trials = integer();
      if (c.trials < 1) throw ParseError(n, "trials must be at least 1");
    } else if (key == "seed") {
      c.seed = std::stoull(v);
    } else if (key == "noise_levels") {
      c.noise_levels = ParseDoubles(ListItems(tokens), n);
    } else if (key == "algorithms") {
      c.algorithms = ListItems(tokens);
    } else if (key == "prior_weight") {
      c.prior_weight = number();
    } else if (key == "prior_sigma") {
      c.prior_sigma = number();
    } else if (key == "lambda_min") {
      c.bounds.min = number();
    } else if (key == "lambda_max") {
      c.bounds.max = number();
    } else if (key == "csv") {
      c.csv_path = v;
    } else if (key == "json") {
      c.json_path = v;
    } else if (key == "linear_states") {
      c.linear_states = integer();
    } else if (key == "linear_measurements") {
      c.linear_measurements = integer();
    } else if (key == "linear_measurement_dim") {
      c.linear_measurement_dim = integer();
    } else if (key == "linear_iterations") {
      c.linear_iterations = integer();
    } else if (key == "num_poses") {
      c.generator.num_poses = integer();
    } else if (key == "scheme") {
      if (v == "revisits") {
        c.generator.scheme = LoopClosureScheme::kRevisits;
      } else if (v == "densified") {
        c.generator.scheme = LoopClosureScheme::kDensified;
      } else {
        throw ParseError(n, "unknown scheme '" + v + "'");
      }
    } else if (key == "grid_size") {
      c.generator.grid_size = integer();
    } else if (key == "loop_closure_probability") {
      c.generator.loop_closure_probability = number();
    } else if (key == "turn_probability") {
      c.generator.turn_probability = number();
    } else if (key == "topology_seed") {
      c.generator.topology_seed = std::stoull(v);
    } else if (key == "dataset") {
      c.dataset_path = v;
    } else if (key == "grouping") {
      if (v == "homoscedastic") {
        c.grouping = GroupingMode::kHomoscedastic;
      } else if (v == "heteroscedastic") {
        c.grouping = GroupingMode::kHeteroscedastic;
      } else {
        throw ParseError(n, "unknown grouping '" + v + "'");
      }
    } else if (key == "outer_iterations") {
      c.outer_iterations = integer();
    } else if (key == "baseline_iterations") {
      c.baseline_iterations = integer();
    } else if (key == "exact_bcd") {
      c.exact_bcd = ParseBool(v, n);
    } else if (key == "record_timing") {
      c.record_timing = ParseBool(v, n);
    } else if (key == "threads") {
      c.num_threads = integer();
    } else {
      throw ParseError(n, "unknown key '" + key + "'");
    }
  }
}

std::vector<std::string> LinearAlgorithms() {
  return {"elimination", "bcd", "fixed-true", "fixed-identity"};
}

std::vector<std::string> PgoAlgorithms() {
  return {"bcd",        "bcd-diag",       "bcd-wishart", "bcd-diag-wishart",
          "fixed-true", "fixed-identity"};
}

const AlgorithmOutcome* TrialRecord::Find(const std::string& algorithm) const {
  for (const AlgorithmOutcome& o : outcomes) {
    if (o.algorithm == algorithm) return &o;
  }
  return nullptr;
}

Eigen::MatrixXd LinearBaseCovariance(int dim, uint64_t seed) {
  CounterRng rng(seed);
  const Eigen::MatrixXd a = rng.NormalMatrix(dim, dim);
  return a.transpose() * a / dim;
}

LinearInstance MakeLinearInstance(const ExperimentConfig& config,
                                  const Eigen::MatrixXd& sigma_base,
                                  double sigma2, uint64_t seed) {
  const int n = config.linear_states;
  const int m = config.linear_measurement_dim;
  if (sigma_base.rows() != m || sigma_base.cols() != m) {
    throw DimensionMismatchError("base covariance size");
  }
  auto spec = std::make_shared<ManifoldSpec>();
  spec->AddEuclidean(0, n);
  const Eigen::VectorXd truth = Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd sigma_true =
      sigma_base + sigma2 * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma_true).matrixL();

  CounterRng rng(seed);
  std::vector<MeasurementFactor> factors;
  for (int i = 0; i < config.linear_measurements; ++i) {
    const Eigen::MatrixXd h = rng.NormalMatrix(m, n);
    const Eigen::VectorXd z = h * truth + chol * rng.Normals(m);
    factors.push_back(MeasurementFactor::LinearGaussian(i, {0}, h, z, 0));
  }
  NoiseGroup group;
  group.dim = m;
  group.variant = CovarianceVariant::kMlUnconstrained;
  return {JointProblem(spec, {group}, std::move(factors)),
          ManifoldPoint(spec, truth), sigma_true};
}

std::vector<TrialRecord> RunLinearMc(const ExperimentConfig& config) {
  if (config.trials < 1 || config.noise_levels.empty()) {
    throw InvalidArgumentError("need at least one trial and noise level");
  }
  CheckAlgorithms(config.algorithms, LinearAlgorithms(), "linear");
  const Eigen::MatrixXd sigma_base = LinearBaseCovariance(
      config.linear_measurement_dim,
      DeriveSeed(config.seed, kBaseCovarianceStream));
  const int levels = static_cast<int>(config.noise_levels.size());
  std::vector<TrialRecord> records(levels * config.trials);
  ParallelFor(static_cast<int>(records.size()), config.num_threads,
              [&](int task) {
                records[task] = RunLinearTrial(
                    config, sigma_base,
                    config.noise_levels[task / config.trials],
                    task % config.trials);
              });
  return records;
}

std::vector<TrialRecord> RunPgoAblation(const ExperimentConfig& config) {
  if (config.trials < 1 || config.noise_levels.empty()) {
    throw InvalidArgumentError("need at least one trial and noise level");
  }
  CheckAlgorithms(config.algorithms, PgoAlgorithms(), "pose-graph");
  PoseGraph2D topology;
  std::vector<Pose2> truth;
  if (config.dataset_path.empty()) {
    SyntheticNoiseSpec none;
    none.enabled = false;
    const SyntheticDataset data = GenerateManhattanLike(config.generator, none);
    topology = data.graph;
    truth = data.ground_truth;
  } else {
    topology = ReadG2oFile(config.dataset_path);
    truth = topology.vertices;
  }
  const int levels = static_cast<int>(config.noise_levels.size());
  std::vector<TrialRecord> records(levels * config.trials);
  ParallelFor(static_cast<int>(records.size()), config.num_threads,
              [&](int task) {
                records[task] = RunPgoTrial(
                    config, topology, truth,
                    config.noise_levels[task / config.trials],
                    task % config.trials);
              });
  return records;
}

ResultTable ToResultTable(const std::vector<TrialRecord>& records) {
  ResultTable table;
  for (const TrialRecord& r : records) {
    for (const AlgorithmOutcome& o : r.outcomes) {
      ResultRow row;
      row.experiment = r.experiment;
      row.trial = r.trial;
      row.seed = r.seed;
      row.algorithm = o.algorithm;
      row.noise_level = r.noise_level;
      row.rmse = o.rmse;
      row.w2_odometry = o.w2.size() > 0 ? o.w2[0] : kNaN;
      row.w2_loop = o.w2.size() > 1 ? o.w2[1] : kNaN;
      row.final_f = o.final_f;
      row.iters = o.iterations;
      row.wall_ms = o.wall_ms;
      row.status = o.status;
      table.push_back(std::move(row));
    }
  }
  return table;
}

JointProblem WithVariant(const JointProblem& problem,
                         CovarianceVariant variant, double prior_weight,
                         double prior_sigma) {
  std::vector<NoiseGroup> groups = problem.groups();
  for (NoiseGroup& g : groups) {
    g.variant = variant;
    g.prior.reset();
    if (IsMap(variant)) {
      g.prior = ModeMatchPrior(
          prior_sigma * Eigen::MatrixXd::Identity(g.dim, g.dim), prior_weight,
          problem.num_measurements(g.id));
    }
  }
  return problem.WithGroups(std::move(groups));
}

PoseGraphSolution SolvePoseGraph(const PoseGraph2D& graph,
                                 const PoseGraphSolveOptions& options) {
  NoiseGroup base;
  base.bounds = options.bounds;
  const JointProblem problem = WithVariant(
      MakePoseGraphProblem(graph, options.grouping, base), options.variant,
      options.prior_weight, options.prior_sigma);
  const ManifoldPoint x_init = PosesToPoint(problem, SpanningTreeInit(graph));
  JointConfig jc;
  jc.algorithm = options.algorithm;
  jc.max_outer_iterations = options.outer_iterations;
  jc.nls.step_mode = StepMode::kSingleIteration;
  PoseGraphSolution solution{graph, RunJoint(problem, x_init, jc)};
  solution.graph.vertices = PointToPoses(solution.result.x);
  for (int e = 0; e < graph.num_edges(); ++e) {
    solution.graph.edges[e].information =
        solution.result.information[problem.factor(e).group_id()];
  }
  return solution;
}

}  // namespace jointcov

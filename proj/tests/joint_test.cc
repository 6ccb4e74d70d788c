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


#include "jointcov/joint.h"

#include <cmath>
#include <random>

#include "Eigen/Cholesky"
#include "Eigen/LU"
#include "gtest/gtest.h"
#include "jointcov/error.h"
#include "jointcov/metrics.h"

namespace jointcov {
namespace {

constexpr double kSlack = 1e-10;

struct Linear {
  JointProblem problem;
  Eigen::VectorXd x_true;
  std::vector<Eigen::MatrixXd> h;
  std::vector<Eigen::VectorXd> z;
  std::vector<int> group_of;
};

Eigen::MatrixXd RandomSpd(int m, std::mt19937* gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m * m; ++i) a(i) = normal(*gen);
  return a * a.transpose() / m + 0.2 * Eigen::MatrixXd::Identity(m, m);
}

// z_i = H_i x_true + L eps with one covariance per group; group g gets
// variant variants[g] and, for MAP variants, a mode-matched prior at sigma0.
Linear MakeLinear(int n, int k, int m,
                  const std::vector<CovarianceVariant>& variants,
                  std::mt19937* gen, double noise = 1.,
                  const Eigen::MatrixXd& sigma0 = Eigen::MatrixXd()) {
  std::normal_distribution<double> normal;
  const int num_groups = static_cast<int>(variants.size());
  auto spec = std::make_shared<ManifoldSpec>();
  spec->AddEuclidean(0, n);
  Linear out{JointProblem(spec, {}, {}), Eigen::VectorXd::Ones(n), {}, {}, {}};
  std::vector<Eigen::MatrixXd> factors_l(num_groups);
  for (int g = 0; g < num_groups; ++g) {
    factors_l[g] = Eigen::LLT<Eigen::MatrixXd>(RandomSpd(m, gen)).matrixL();
  }
  std::vector<int> counts(num_groups, 0);
  std::vector<MeasurementFactor> factors;
  for (int i = 0; i < k; ++i) {
    const int g = i % num_groups;
    Eigen::MatrixXd hi(m, n);
    for (int j = 0; j < m * n; ++j) hi(j) = normal(*gen);
    Eigen::VectorXd eps(m);
    for (int j = 0; j < m; ++j) eps[j] = normal(*gen);
    const Eigen::VectorXd zi = hi * out.x_true + noise * factors_l[g] * eps;
    out.h.push_back(hi);
    out.z.push_back(zi);
    out.group_of.push_back(g);
    ++counts[g];
    factors.push_back(MeasurementFactor::LinearGaussian(i, {0}, hi, zi, g));
  }
  std::vector<NoiseGroup> groups;
  for (int g = 0; g < num_groups; ++g) {
    NoiseGroup group;
    group.id = g;
    group.dim = m;
    group.variant = variants[g];
    group.bounds = {1e-3, 1e3};
    group.information = Eigen::MatrixXd::Identity(m, m);
    if (IsMap(variants[g])) {
      const Eigen::MatrixXd s0 = sigma0.size() == 0
                                     ? Eigen::MatrixXd::Identity(m, m)
                                     : sigma0;
      group.prior = ModeMatchPrior(s0, 0.1, counts[g]);
    }
    groups.push_back(group);
  }
  out.problem = JointProblem(spec, groups, std::move(factors));
  return out;
}

// Dense re-derivation of the per-group M_g(x) from raw (H_i, z_i).
std::vector<Eigen::MatrixXd> OracleMoments(const Linear& lin,
                                           const Eigen::VectorXd& x) {
  const JointProblem& p = lin.problem;
  std::vector<Eigen::MatrixXd> s(p.num_groups());
  std::vector<int> k(p.num_groups(), 0);
  for (int g = 0; g < p.num_groups(); ++g) {
    s[g] = Eigen::MatrixXd::Zero(p.group(g).dim, p.group(g).dim);
  }
  for (size_t i = 0; i < lin.h.size(); ++i) {
    const Eigen::VectorXd r = lin.z[i] - lin.h[i] * x;
    s[lin.group_of[i]] += r * r.transpose();
    ++k[lin.group_of[i]];
  }
  for (int g = 0; g < p.num_groups(); ++g) {
    const NoiseGroup& group = p.group(g);
    if (group.prior) {
      const double m = group.dim;
      s[g] = (s[g] + group.prior->scale().inverse()) /
             (k[g] + group.prior->dof() - m - 1.);
    } else {
      s[g] /= k[g];
    }
  }
  return s;
}

double LogDet(const Eigen::MatrixXd& a) {
  return 2. * Eigen::MatrixXd(Eigen::LLT<Eigen::MatrixXd>(a).matrixL())
                  .diagonal()
                  .array()
                  .log()
                  .sum();
}

void ExpectTwoSidedDescent(const JointProblem& problem,
                           const ManifoldPoint& x_init,
                           const JointResult& result) {
  ASSERT_FALSE(result.trace.empty());
  double previous = result.trace.front().objective;
  for (size_t t = 1; t < result.trace.size(); ++t) {
    const JointIteration& it = result.trace[t];
    EXPECT_LE(it.objective_after_x_step, previous + kSlack) << "t=" << t;
    EXPECT_LE(it.objective, it.objective_after_x_step + kSlack) << "t=" << t;
    previous = it.objective;
  }
  EXPECT_NEAR(result.objective,
              JointObjective(problem, result.x, result.information), 1e-12);
  (void)x_init;
}

TEST(GroupWeightsTest, MlUsesCountMapAddsPriorDof) {
  std::mt19937 gen(1);
  const Linear lin =
      MakeLinear(4, 10, 3,
                 {CovarianceVariant::kMlUnconstrained,
                  CovarianceVariant::kMapUnconstrained},
                 &gen);
  const std::vector<double> w = GroupWeights(lin.problem);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0], 5.);
  // nu = w k + m + 1 = 0.5 + 4 so gamma = k + w k.
  EXPECT_NEAR(w[1], 5.5, 1e-12);
}

TEST(JointObjectiveTest, IdentityMomentAndInformationGiveDimension) {
  auto spec = std::make_shared<ManifoldSpec>();
  spec->AddEuclidean(0, 2);
  NoiseGroup g;
  g.dim = 2;
  g.variant = CovarianceVariant::kMlUnconstrained;
  // Residuals (1, 1) and (1, -1) give S = I.
  const JointProblem problem(
      spec, {g},
      {MeasurementFactor::LinearGaussian(0, {0}, Eigen::Matrix2d::Identity(),
                                         Eigen::Vector2d(1., 1.), 0),
       MeasurementFactor::LinearGaussian(1, {0}, Eigen::Matrix2d::Identity(),
                                         Eigen::Vector2d(1., -1.), 0)});
  const ManifoldPoint x(spec);
  EXPECT_TRUE(SecondMomentMatrices(problem, x)[0].isApprox(
      Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_NEAR(JointObjective(problem, x, {Eigen::Matrix2d::Identity()}), 2.,
              1e-14);
  EXPECT_THROW(JointObjective(problem, x, {-Eigen::Matrix2d::Identity()}),
               NotPositiveDefiniteError);
}

TEST(JointObjectiveTest, InverseMomentsGiveWeightedLogDets) {
  std::mt19937 gen(2);
  const Linear lin =
      MakeLinear(5, 30, 3,
                 {CovarianceVariant::kMlUnconstrained,
                  CovarianceVariant::kMapUnconstrained},
                 &gen);
  const Eigen::VectorXd x = 0.5 * Eigen::VectorXd::Ones(5);
  const ManifoldPoint point(lin.problem.spec_ptr(), x);
  const std::vector<Eigen::MatrixXd> m = OracleMoments(lin, x);
  const std::vector<Eigen::MatrixXd> moments =
      SecondMomentMatrices(lin.problem, point);
  double expected = 0.;
  const double gamma0 = 15., gamma1 = 15. + 1.5;
  const double total = gamma0 + gamma1;
  GroupInformation p;
  for (int g = 0; g < 2; ++g) {
    EXPECT_LE((moments[g] - m[g]).norm(), 1e-12 * m[g].norm());
    p.push_back(m[g].inverse());
    expected += (g == 0 ? gamma0 : gamma1) / total * (LogDet(m[g]) + 3.);
  }
  EXPECT_NEAR(JointObjective(lin.problem, point, p), expected, 1e-10);
  EXPECT_NEAR(ReducedObjective(lin.problem, point), expected, 1e-10);
}

TEST(ReducedObjectiveTest, EqualsJointObjectiveAtOptimalInformation) {
  std::mt19937 gen(3);
  const Linear lin = MakeLinear(
      6, 40, 3,
      {CovarianceVariant::kMlUnconstrained, CovarianceVariant::kMlDiagonal,
       CovarianceVariant::kMapEig, CovarianceVariant::kMlDiagEig},
      &gen, 0.05);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x[i] = 1. + 0.3 * normal(gen);
    const ManifoldPoint point(lin.problem.spec_ptr(), x);
    const std::vector<InnerSolution> inner = OptimalInformation(
        lin.problem, SecondMomentMatrices(lin.problem, point));
    GroupInformation p;
    for (const InnerSolution& s : inner) p.push_back(s.information);
    EXPECT_NEAR(ReducedObjective(lin.problem, point),
                JointObjective(lin.problem, point, p), 1e-10);
  }
}

TEST(ReducedObjectiveTest, GradientMatchesFiniteDifferences) {
  std::mt19937 gen(4);
  const Linear lin = MakeLinear(
      5, 40, 3,
      {CovarianceVariant::kMlUnconstrained, CovarianceVariant::kMapDiagonal,
       CovarianceVariant::kMapEig},
      &gen);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = normal(gen);
    const ManifoldPoint point(lin.problem.spec_ptr(), x);
    TangentVector grad;
    ReducedObjective(lin.problem, point, &grad);
    const double h = 1e-6;
    for (int i = 0; i < 5; ++i) {
      TangentVector e = TangentVector::Zero(5);
      e[i] = h;
      const double fd = (ReducedObjective(lin.problem, BoxPlus(point, e)) -
                         ReducedObjective(lin.problem, BoxPlus(point, -e))) /
                        (2. * h);
      EXPECT_NEAR(grad[i], fd, 1e-5 * std::max(1., std::abs(fd)));
    }
  }
}

TEST(BlockExactBcdTest, LinearModelDescendsAndConverges) {
  std::mt19937 gen(5);
  const Linear lin =
      MakeLinear(20, 50, 5, {CovarianceVariant::kMlUnconstrained}, &gen);
  const ManifoldPoint x0(lin.problem.spec_ptr());
  const JointResult result = RunBlockExactBcd(lin.problem, x0);
  ExpectTwoSidedDescent(lin.problem, x0, result);
  EXPECT_TRUE(result.converged);
  EXPECT_LE(result.iterations, 25);
  EXPECT_FALSE(result.ill_posed_ml_detected);
  // P is the closed-form inner solution at the returned state.
  const std::vector<Eigen::MatrixXd> m =
      SecondMomentMatrices(lin.problem, result.x);
  EXPECT_EQ(result.information[0],
            SolveInnerUnconstrained(m[0]).information);
}

TEST(BlockExactBcdTest, MixedVariantsDescend) {
  std::mt19937 gen(6);
  const Linear lin = MakeLinear(
      8, 60, 3,
      {CovarianceVariant::kMapEig, CovarianceVariant::kMlDiagEig,
       CovarianceVariant::kMapDiagonal},
      &gen, 0.1);
  const ManifoldPoint x0(lin.problem.spec_ptr());
  const JointResult result = RunBlockExactBcd(lin.problem, x0);
  ExpectTwoSidedDescent(lin.problem, x0, result);
  for (const JointIteration& it : result.trace) {
    ASSERT_EQ(it.sigma_min.size(), 3u);
    for (int g = 0; g < 2; ++g) {
      EXPECT_GE(it.sigma_min[g], 1e-3 - 1e-12);
      EXPECT_LE(it.sigma_max[g], 1e3 + 1e-9);
    }
  }
  EXPECT_TRUE(result.information[2].isDiagonal(0.));
}

TEST(BlockExactBcdTest, ZeroNoiseMapRecoversTruthAndPriorBlend) {
  std::mt19937 gen(7);
  const Eigen::MatrixXd sigma0 = RandomSpd(3, &gen);
  const Linear lin = MakeLinear(4, 20, 3, {CovarianceVariant::kMapUnconstrained},
                                &gen, 0., sigma0);
  JointConfig config;
  config.nls.gradient_tolerance = 1e-12;
  const JointResult result =
      RunBlockExactBcd(lin.problem, ManifoldPoint(lin.problem.spec_ptr()),
                       config);
  EXPECT_LE((result.x.values() - lin.x_true).norm(), 1e-8);
  const double w = 0.1;
  EXPECT_LE((result.information[0].inverse() - w / (w + 1.) * sigma0).norm(),
            1e-8 * sigma0.norm());
}

TEST(BlockExactBcdTest, SingularMlGroupIsReported) {
  // Fewer measurements than the residual dimension: S is singular.
  std::mt19937 gen(8);
  const Linear lin =
      MakeLinear(2, 3, 4, {CovarianceVariant::kMlUnconstrained}, &gen);
  try {
    RunBlockExactBcd(lin.problem, ManifoldPoint(lin.problem.spec_ptr()));
    FAIL() << "expected UnboundedProblemError";
  } catch (const UnboundedProblemError& e) {
    EXPECT_EQ(e.group_id(), 0);
  }
}

TEST(HybridBcdTest, DescendsInBothStepModes) {
  std::mt19937 gen(9);
  const Linear lin = MakeLinear(
      10, 40, 3,
      {CovarianceVariant::kMapUnconstrained, CovarianceVariant::kMlEig}, &gen);
  for (StepMode mode :
       {StepMode::kSingleIteration, StepMode::kRiemannianGradient}) {
    JointConfig config;
    config.algorithm = JointAlgorithm::kHybridBcd;
    config.nls.step_mode = mode;
    config.max_outer_iterations = 15;
    const ManifoldPoint x0(lin.problem.spec_ptr());
    const JointResult result = RunHybridBcd(lin.problem, x0, config);
    ExpectTwoSidedDescent(lin.problem, x0, result);
    EXPECT_LT(result.objective, result.trace.front().objective);
  }
}

TEST(HybridBcdTest, FixedGroupsReduceToIteratedSteps) {
  std::mt19937 gen(10);
  const Linear lin =
      MakeLinear(6, 20, 3, {CovarianceVariant::kFixed}, &gen);
  NoiseGroup group = lin.problem.group(0);
  group.information = RandomSpd(3, &gen);
  const JointProblem problem = lin.problem.WithGroups({group});
  JointConfig config;
  config.nls.step_mode = StepMode::kRiemannianGradient;
  config.max_outer_iterations = 4;
  config.objective_tolerance = 0.;
  const ManifoldPoint x0(problem.spec_ptr());
  const JointResult result = RunHybridBcd(problem, x0, config);
  ManifoldPoint x = x0;
  for (int t = 0; t < result.iterations; ++t) {
    x = StepOnce(problem, x, {group.information}, config.nls);
  }
  EXPECT_EQ(result.iterations, 4);
  EXPECT_EQ(result.x.values(), x.values());
  EXPECT_EQ(result.information[0], group.information);
}

TEST(EliminationTest, AgreesWithBlockExactBcd) {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Linear lin =
        MakeLinear(20, 50, 5, {CovarianceVariant::kMlUnconstrained}, &gen);
    const ManifoldPoint x0(lin.problem.spec_ptr());
    const JointResult bcd = RunBlockExactBcd(lin.problem, x0);
    const JointResult elim = RunElimination(lin.problem, x0);
    EXPECT_NEAR(bcd.objective, elim.objective, 1e-6);
    // The returned P is the inner solution at the returned x.
    EXPECT_EQ(elim.information[0],
              SolveInnerUnconstrained(
                  SecondMomentMatrices(lin.problem, elim.x)[0])
                  .information);
    for (size_t t = 1; t < elim.trace.size(); ++t) {
      EXPECT_LE(elim.trace[t].objective,
                elim.trace[t - 1].objective + kSlack);
    }
  }
}

TEST(EliminationTest, RemarkFourFormAlongTrace) {
  std::mt19937 gen(12);
  const Linear lin =
      MakeLinear(10, 30, 4, {CovarianceVariant::kMlUnconstrained}, &gen);
  const JointResult elim =
      RunElimination(lin.problem, ManifoldPoint(lin.problem.spec_ptr()));
  const Eigen::MatrixXd m = OracleMoments(lin, elim.x.values())[0];
  EXPECT_NEAR(elim.objective, LogDet(m) + 4., 1e-10);
}

TEST(RunJointTest, DispatchesOnAlgorithm) {
  std::mt19937 gen(13);
  const Linear lin =
      MakeLinear(5, 20, 2, {CovarianceVariant::kMapUnconstrained}, &gen);
  const ManifoldPoint x0(lin.problem.spec_ptr());
  JointConfig config;
  config.algorithm = JointAlgorithm::kBlockExactBcd;
  EXPECT_EQ(RunJoint(lin.problem, x0, config).x.values(),
            RunBlockExactBcd(lin.problem, x0, config).x.values());
  config.algorithm = JointAlgorithm::kElimination;
  EXPECT_EQ(RunJoint(lin.problem, x0, config).x.values(),
            RunElimination(lin.problem, x0, config).x.values());
}

TEST(CalibrateTest, ZeroResidualsClampToLowerBound) {
  std::mt19937 gen(14);
  const Linear lin =
      MakeLinear(3, 10, 3, {CovarianceVariant::kMlEig}, &gen, 0.);
  const std::vector<InnerSolution> cal =
      Calibrate(lin.problem, ManifoldPoint(lin.problem.spec_ptr(), lin.x_true));
  EXPECT_TRUE(cal[0].information.isApprox(
      1e3 * Eigen::MatrixXd::Identity(3, 3), 1e-12));
}

TEST(CalibrateTest, MapReturnsInverseMoment) {
  std::mt19937 gen(15);
  const Linear lin =
      MakeLinear(3, 10, 3, {CovarianceVariant::kMapUnconstrained}, &gen);
  const std::vector<InnerSolution> cal =
      Calibrate(lin.problem, ManifoldPoint(lin.problem.spec_ptr(), lin.x_true));
  EXPECT_TRUE(cal[0].information.isApprox(
      OracleMoments(lin, lin.x_true)[0].inverse(), 1e-10));
}

TEST(CalibrateTest, RecoversTrueCovarianceAsSamplesGrow) {
  const Eigen::Matrix3d sigma_true =
      (Eigen::Matrix3d() << 2., 0.3, 0., 0.3, 1., -0.2, 0., -0.2, 0.5)
          .finished();
  const Eigen::Matrix3d l = sigma_true.llt().matrixL();
  double previous = std::numeric_limits<double>::infinity();
  for (int k : {100, 1000, 10000}) {
    std::mt19937 gen(16);
    std::normal_distribution<double> normal;
    auto spec = std::make_shared<ManifoldSpec>();
    spec->AddEuclidean(0, 3);
    std::vector<MeasurementFactor> factors;
    for (int i = 0; i < k; ++i) {
      const Eigen::Vector3d eps(normal(gen), normal(gen), normal(gen));
      factors.push_back(MeasurementFactor::LinearGaussian(
          i, {0}, Eigen::Matrix3d::Identity(), l * eps, 0));
    }
    NoiseGroup group;
    group.dim = 3;
    const JointProblem problem(spec, {group}, std::move(factors));
    const std::vector<InnerSolution> cal =
        Calibrate(problem, ManifoldPoint(spec));
    const double w2 = Wasserstein2(cal[0].information.inverse(), sigma_true);
    EXPECT_LT(w2, previous) << "k=" << k;
    previous = w2;
  }
  EXPECT_LT(previous, 0.05);
}

}  // namespace
}  // namespace jointcov

// Copyright 2026 The DVI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <vector>

#include "dvi/predictors.h"
#include "dvi/simulation.h"
#include "dvi/stats.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace dvi {
namespace {

using ::testing::ElementsAre;

TEST(BlockCovarianceTest, Structure) {
  auto c = *BlockCovariance(5, 0.4, 2);
  Eigen::MatrixXd expected(5, 5);
  expected << 1, .4, 0, 0, 0,
              .4, 1, 0, 0, 0,
              0, 0, 1, .2, .2,
              0, 0, .2, 1, .2,
              0, 0, .2, .2, 1;
  EXPECT_EQ(c, expected);
  EXPECT_EQ(*BlockCovariance(3, 0.0, 3), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_FALSE(BlockCovariance(3, 1.0, 1).ok());
  EXPECT_FALSE(BlockCovariance(3, 0.3, 4).ok());
}

TEST(GenGaussianTest, EmpiricalCovariance) {
  auto cov = *BlockCovariance(4, 0.3, 2);
  auto x = *GenGaussian(50000, cov, 1);
  const Eigen::MatrixXd centered = x.values().rowwise() - x.values().colwise().mean();
  const Eigen::MatrixXd emp = centered.transpose() * centered / (x.n() - 1.0);
  // Sample variance has sd sqrt(2 / n); allow 5 of them on every entry.
  EXPECT_LT((emp - cov).cwiseAbs().maxCoeff(), 5.0 * std::sqrt(2.0 / x.n()));
  EXPECT_EQ(GenGaussian(10, cov, 1)->values(), GenGaussian(10, cov, 1)->values());
  EXPECT_NE(GenGaussian(10, cov, 1)->values(), GenGaussian(10, cov, 2)->values());
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  EXPECT_FALSE(GenGaussian(10, bad, 1).ok());
}

TEST(GenUniformTest, MarginalsAndRanks) {
  auto cov = *BlockCovariance(3, 0.3, 3);
  auto u = *GenUniformCorrelated(10000, cov, 2);
  auto z = *GenGaussian(10000, cov, 2);
  EXPECT_GE(u.values().minCoeff(), 0.0);
  EXPECT_LE(u.values().maxCoeff(), 1.0);
  std::vector<double> col(u.values().col(0).data(), u.values().col(0).data() + 10000);
  std::sort(col.begin(), col.end());
  double ks = 0.0;
  for (size_t i = 0; i < col.size(); ++i) {
    ks = std::max({ks, std::abs((i + 1) / 10000.0 - col[i]), std::abs(col[i] - i / 10000.0)});
  }
  EXPECT_LT(ks, 0.02);
  EXPECT_NEAR(*Spearman(Eigen::VectorXd(u.values().col(0)), Eigen::VectorXd(u.values().col(1))),
              *Spearman(Eigen::VectorXd(z.values().col(0)), Eigen::VectorXd(z.values().col(1))),
              1e-12);
}

TEST(FriedmanTest, Examples) {
  const double mid[5] = {0.5, 0.5, 0.5, 0.5, 0.5};
  EXPECT_NEAR(FriedmanFunction(mid), 10 * std::sin(M_PI / 4) + 7.5, 1e-12);
  EXPECT_NEAR(FriedmanFunction(mid), 14.5711, 1e-4);
  const double zero[5] = {0, 0.7, 0.5, 0, 0};
  EXPECT_EQ(FriedmanFunction(zero), 0.0);
  auto x = *GenUniformCorrelated(100, *BlockCovariance(6, 0, 5), 3);
  EXPECT_EQ(FriedmanResponse(x, 0, 1)->values(), FriedmanResponse(x, 0, 2)->values());
  EXPECT_FALSE(FriedmanResponse(*GenUniformCorrelated(10, Eigen::Matrix4d::Identity(), 1), 0, 1)
                   .ok());
}

TEST(FriedmanTest, MeanMatchesQuadrature) {
  // Midpoint rule for E[10 sin(pi u v)] over the unit square.
  const int m = 400;
  double integral = 0.0;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) integral += std::sin(M_PI * (a + 0.5) / m * (b + 0.5) / m);
  }
  const double expected = 10.0 * integral / (m * m) + 20.0 / 12.0 + 5.0 + 2.5;
  auto x = *GenUniformCorrelated(200000, *BlockCovariance(5, 0, 5), 4);
  auto y = *FriedmanResponse(x, 0.0, 1);
  EXPECT_NEAR(y.values().mean(), expected, 0.06);
}

TEST(LinearResponseTest, CoefficientsAndRecovery) {
  for (int p : {2, 5, 10, 100}) {
    const Eigen::VectorXd beta = LinearCoefficients(p, kCoefficientSeed);
    const int zeros = static_cast<int>((beta.array() == 0.0).count());
    EXPECT_EQ(zeros, (p + 1) / 2);
    EXPECT_TRUE((beta.tail((p + 1) / 2).array() == 0.0).all());
    for (int j = 0; j < p - (p + 1) / 2; ++j) {
      EXPECT_GE(std::abs(beta[j]), 0.5);
      EXPECT_LE(std::abs(beta[j]), 2.0);
    }
    EXPECT_EQ(beta, LinearCoefficients(p, kCoefficientSeed));
  }
  auto x = *GenGaussian(200, Eigen::MatrixXd::Identity(8, 8), 5);
  auto draw = *LinearResponse(x, 123, 0.0, 9);
  auto fit = *FitOls(x.values(), draw.y.values());
  EXPECT_LT((fit.coefficients - draw.beta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(BinarizeMedianTest, Examples) {
  EXPECT_EQ(BinarizeMedian(Eigen::Vector4d(1, 2, 3, 4)), Eigen::Vector4d(0, 0, 1, 1));
  EXPECT_EQ(BinarizeMedian(Eigen::Vector3d(3, 1, 2)), Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(BinarizeMedian(Eigen::Vector3d(2, 2, 2)), Eigen::Vector3d::Zero());
  auto x = *GenGaussian(10000, Eigen::MatrixXd::Identity(1, 1), 6);
  const double frac = BinarizeMedian(x.values().col(0)).mean();
  EXPECT_GE(frac, 0.4);
  EXPECT_LE(frac, 0.5);
}

TEST(GridTest, DefaultGridShape) {
  const auto grid = DefaultGrid();
  EXPECT_EQ(grid.size(), 192u);
  std::set<std::tuple<int, int, double, double, int, int, int>> keys;
  int linear_regression = 0;
  for (const auto& s : grid) {
    keys.insert({s.n, s.p, s.sigma_eps, s.rho, static_cast<int>(s.response),
                 static_cast<int>(s.task), static_cast<int>(s.master)});
    if (s.task == Task::kRegression && s.response == ResponseKind::kLinear) ++linear_regression;
    EXPECT_EQ(s.reps, 50);
  }
  EXPECT_EQ(keys.size(), 192u);
  EXPECT_EQ(linear_regression, 48);
}

TEST(GridTest, ScenarioDataSplit) {
  ScenarioSpec spec;
  spec.n = 100;
  spec.task = Task::kClassification;
  auto a = *GenerateScenarioData(spec, 7);
  auto b = *GenerateScenarioData(spec, 7);
  EXPECT_EQ(a.x_train.n(), 80);
  EXPECT_EQ(a.x_test.n(), 20);
  EXPECT_EQ(a.x_train.values(), b.x_train.values());
  EXPECT_EQ(a.y_test.values(), b.y_test.values());
  EXPECT_EQ(a.y_train.n_classes(), 2);
}

bool SameMetrics(const RepOutcome& a, const RepOutcome& b) {
  for (int m = 0; m < kNumBenchMethods; ++m) {
    const auto& x = a.methods[m];
    const auto& y = b.methods[m];
    if (x.ok != y.ok || x.ground_truth_cor != y.ground_truth_cor ||
        x.max_score_diff != y.max_score_diff || x.mean_score_diff != y.mean_score_diff) {
      return false;
    }
  }
  return true;
}

TEST(GridTest, DeterministicAcrossThreads) {
  ScenarioSpec lin;
  lin.n = 100;
  lin.reps = 3;
  ScenarioSpec cls = lin;
  cls.task = Task::kClassification;
  cls.response = ResponseKind::kFriedman;
  cls.master = MasterKind::kL1;
  BenchmarkOptions o1, o4;
  o4.threads = 4;
  auto r1 = RunGrid({lin, cls}, o1);
  auto r4 = RunGrid({lin, cls}, o4);
  for (int s = 0; s < 2; ++s) {
    ASSERT_EQ(r1[s].reps.size(), 3u);
    for (int r = 0; r < 3; ++r) {
      EXPECT_TRUE(SameMetrics(r1[s].reps[r], r4[s].reps[r])) << s << " " << r;
      for (const auto& m : r1[s].reps[r].methods) EXPECT_TRUE(m.ok) << m.error;
    }
  }
}

TEST(GridTest, NoiseFreeRecovery) {
  ScenarioSpec spec;
  spec.sigma_eps = 1e-6;
  spec.reps = 3;
  // MAE differences scale with |beta| sd, MSE drops with beta^2 sd^2.
  BenchmarkOptions mae;
  mae.default_metrics = true;
  auto linear = RunGrid({spec}, mae)[0];
  for (BenchMethod m : {BenchMethod::kDirectOpt, BenchMethod::kDirectApprox}) {
    for (double cor : linear.Values(m, BenchMetric::kGroundTruthCor)) {
      EXPECT_GE(cor, 0.99) << BenchMethodName(m);
    }
  }
  BenchmarkOptions squared;
  squared.convention = GroundTruthConvention::kSquared;
  auto quadratic = RunGrid({spec}, squared)[0];
  for (BenchMethod m : kBenchMethods) {
    for (double cor : quadratic.Values(m, BenchMetric::kGroundTruthCor)) {
      EXPECT_GE(cor, 0.99) << BenchMethodName(m);
    }
  }
}

TEST(GridTest, SingleOlsScenario) {
  ScenarioSpec spec;
  spec.reps = 10;
  auto result = RunGrid({spec}, {})[0];
  EXPECT_EQ(result.Failures(BenchMethod::kDirectOpt), 0);
  EXPECT_GT(result.Aggregate(BenchMethod::kDirectOpt, BenchMetric::kGroundTruthCor).mean, 0.97);
}

TEST(GridTest, AggregationMatchesCombineVariance) {
  ScenarioSpec a;
  a.n = 100;
  a.reps = 4;
  ScenarioSpec b = a;
  b.sigma_eps = 5;
  auto results = RunGrid({a, b}, {});
  std::vector<std::pair<double, double>> pairs;
  for (const auto& r : results) {
    const auto v = r.Values(BenchMethod::kBreiman1, BenchMetric::kGroundTruthCor);
    ASSERT_EQ(v.size(), 4u);
    const auto agg = r.Aggregate(BenchMethod::kBreiman1, BenchMetric::kGroundTruthCor);
    EXPECT_DOUBLE_EQ(agg.mean, Mean(v));
    EXPECT_DOUBLE_EQ(agg.combined_se, std::sqrt(SampleVariance(v)));
    pairs.emplace_back(Mean(v), SampleVariance(v));
  }
  auto combined = *AggregateScenarios(results, BenchMethod::kBreiman1,
                                      BenchMetric::kGroundTruthCor);
  auto oracle = *CombineVariance(pairs);
  EXPECT_EQ(combined.mean, oracle.mean);
  EXPECT_EQ(combined.combined_se, oracle.combined_se);
}

TEST(GridTest, DefaultMetricsRun) {
  ScenarioSpec spec;
  spec.n = 200;
  spec.reps = 2;
  spec.task = Task::kClassification;
  BenchmarkOptions o;
  o.default_metrics = true;
  auto result = RunGrid({spec}, o)[0];
  for (BenchMethod m : kBenchMethods) EXPECT_EQ(result.Failures(m), 0) << BenchMethodName(m);
}

TEST(FlickerTest, TopKAndHistograms) {
  EXPECT_THAT(TopK(Eigen::Vector4d(0.1, 0.4, 0.4, 0.1), 3), ElementsAre(1, 2, 0));
  std::vector<FlickerMethod> methods = {
      {"fixed", [](int) -> absl::StatusOr<Eigen::VectorXd> {
         return Eigen::VectorXd(Eigen::Vector3d(0.5, 0.3, 0.2));
       }},
      {"alternating", [](int run) -> absl::StatusOr<Eigen::VectorXd> {
         return run % 2 == 0 ? Eigen::VectorXd(Eigen::Vector3d(0.5, 0.3, 0.2))
                             : Eigen::VectorXd(Eigen::Vector3d(0.2, 0.3, 0.5));
       }}};
  auto r = *FlickerAnalysis(methods, 3, 10, 2);
  EXPECT_EQ(r[0].distinct(), 1);
  EXPECT_EQ(r[0].histogram.at({0, 1}), 10);
  EXPECT_EQ(r[1].distinct(), 2);
  EXPECT_EQ(r[1].histogram.at({2, 1}), 5);
  EXPECT_EQ((*FlickerAnalysis(methods, 3, 1, 2))[1].distinct(), 1);
  EXPECT_EQ(KindOf(FlickerAnalysis(methods, 3, 10, 4).status()), ErrorKind::kConfig);
}

}  // namespace
}  // namespace dvi

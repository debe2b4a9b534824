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
#ifndef DVI_SIMULATION_H_
#define DVI_SIMULATION_H_

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "Eigen/Cholesky"
#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dvi/data.h"
#include "dvi/direct.h"
#include "dvi/parallel.h"
#include "dvi/predictors.h"
#include "dvi/rng.h"
#include "dvi/stats.h"
#include "dvi/status.h"

namespace dvi {

inline constexpr uint64_t kDefaultBaseSeed = 123;
// Seed of the linear response coefficients, shared by every scenario.
inline constexpr uint64_t kCoefficientSeed = 123;

// ---------------------------------------------------------------------------
// Generators.

// Unit diagonal; rho within the first `informative` features, rho / 2 within
// the rest, 0 across the two blocks.
inline absl::StatusOr<Eigen::MatrixXd> BlockCovariance(int p, double rho,
                                                       int informative) {
  if (p < 1 || informative < 0 || informative > p) {
    return absl::InvalidArgumentError("block covariance: need 0 <= informative <= p");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    return absl::InvalidArgumentError("block covariance: rho must lie in [0, 1)");
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      if (a == b) continue;
      const bool a_inf = a < informative;
      const bool b_inf = b < informative;
      if (a_inf && b_inf) {
        c(a, b) = rho;
      } else if (!a_inf && !b_inf) {
        c(a, b) = rho / 2.0;
      }
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    return absl::InvalidArgumentError("block covariance is not positive definite");
  }
  return c;
}

// Rows of standard normals (row-major draw order) times the transposed
// Cholesky factor of `cov`.
inline absl::StatusOr<DataMatrix> GenGaussian(int n, const Eigen::MatrixXd& cov,
                                              uint64_t seed) {
  if (cov.rows() != cov.cols() || cov.rows() < 1 || n < 2) {
    return absl::InvalidArgumentError("gen_gaussian: bad shape");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    return absl::InvalidArgumentError("gen_gaussian: covariance is not positive definite");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd z(n, cov.cols());
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) z(i, j) = rng.Normal();
  }
  if (!l.isIdentity(0.0)) z = z * l.transpose();
  return DataMatrix::Create(std::move(z));
}

inline absl::StatusOr<DataMatrix> GenUniformCorrelated(int n, const Eigen::MatrixXd& cov,
                                                       uint64_t seed) {
  DVI_ASSIGN_OR_RETURN(DataMatrix g, GenGaussian(n, cov, seed));
  Eigen::MatrixXd u = g.values().unaryExpr([](double z) { return NormalCdf(z); });
  return DataMatrix::Create(std::move(u), g.features());
}

inline double FriedmanFunction(const double* x) {
  constexpr double kPi = 3.14159265358979323846;
  return 10.0 * std::sin(kPi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
         10.0 * x[3] + 5.0 * x[4];
}

inline absl::StatusOr<TargetVector> FriedmanResponse(const DataMatrix& x,
                                                     double sigma_eps, uint64_t seed) {
  if (x.p() < 5) return absl::InvalidArgumentError("friedman response needs p >= 5");
  Rng rng(seed);
  Eigen::VectorXd y(x.n());
  double row[5];
  for (int i = 0; i < x.n(); ++i) {
    for (int j = 0; j < 5; ++j) row[j] = x.values()(i, j);
    y[i] = FriedmanFunction(row) + sigma_eps * rng.Normal();
  }
  return TargetVector::Regression(std::move(y));
}

// Magnitudes in [0.5, 2] with random signs on the first p - ceil(p/2)
// features; the last ceil(p/2) coefficients are 0.
inline Eigen::VectorXd LinearCoefficients(int p, uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const int active = p - (p + 1) / 2;
  for (int j = 0; j < active; ++j) {
    const double magnitude = 0.5 + 1.5 * rng.Uniform();
    beta[j] = rng.Uniform() < 0.5 ? -magnitude : magnitude;
  }
  return beta;
}

struct LinearDraw {
  TargetVector y;
  Eigen::VectorXd beta;
};

inline absl::StatusOr<LinearDraw> LinearResponse(const DataMatrix& x, uint64_t seed,
                                                 double sigma_eps,
                                                 uint64_t noise_seed) {
  if (x.p() < 2) return absl::InvalidArgumentError("linear response needs p >= 2");
  Eigen::VectorXd beta = LinearCoefficients(x.p(), seed);
  Eigen::VectorXd y = x.values() * beta;
  Rng rng(noise_seed);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma_eps * rng.Normal();
  DVI_ASSIGN_OR_RETURN(TargetVector target, TargetVector::Regression(std::move(y)));
  return LinearDraw{std::move(target), std::move(beta)};
}

inline double Median(const Eigen::VectorXd& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  const size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

// 1 where y > median(y), else 0.
inline Eigen::VectorXd BinarizeMedian(const Eigen::VectorXd& y) {
  const double m = Median(y);
  return y.unaryExpr([m](double v) { return v > m ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Scenario grid.

enum class ResponseKind { kLinear, kFriedman };
enum class MasterKind { kUnregularized, kL1 };

inline const char* ResponseName(ResponseKind r) {
  return r == ResponseKind::kLinear ? "linear" : "friedman";
}
inline const char* TaskName(Task t) {
  return t == Task::kRegression ? "regression" : "classification";
}
inline const char* MasterName(MasterKind m) {
  return m == MasterKind::kUnregularized ? "unregularized" : "l1";
}

struct ScenarioSpec {
  int n = 1000;
  int p = 10;
  double sigma_eps = 0.1;
  double rho = 0.0;
  ResponseKind response = ResponseKind::kLinear;
  Task task = Task::kRegression;
  MasterKind master = MasterKind::kUnregularized;
  int reps = 50;
  uint64_t base_seed = kDefaultBaseSeed;
};

// n x p x sigma x rho x response x task x master.
inline std::vector<ScenarioSpec> DefaultGrid(int reps = 50,
                                             uint64_t base_seed = kDefaultBaseSeed) {
  std::vector<ScenarioSpec> grid;
  for (Task task : {Task::kRegression, Task::kClassification}) {
    for (ResponseKind response : {ResponseKind::kLinear, ResponseKind::kFriedman}) {
      for (MasterKind master : {MasterKind::kUnregularized, MasterKind::kL1}) {
        for (int n : {100, 1000, 10000}) {
          for (int p : {10, 100}) {
            for (double sigma : {0.1, 5.0}) {
              for (double rho : {0.0, 0.3}) {
                grid.push_back({n, p, sigma, rho, response, task, master, reps, base_seed});
              }
            }
          }
        }
      }
    }
  }
  return grid;
}

enum class BenchMethod { kDirectOpt = 0, kDirectApprox, kBreiman1, kBreiman10 };
inline constexpr int kNumBenchMethods = 4;
inline constexpr std::array<BenchMethod, kNumBenchMethods> kBenchMethods = {
    BenchMethod::kDirectOpt, BenchMethod::kDirectApprox, BenchMethod::kBreiman1,
    BenchMethod::kBreiman10};

inline const char* BenchMethodName(BenchMethod m) {
  switch (m) {
    case BenchMethod::kDirectOpt:
      return "direct-opt";
    case BenchMethod::kDirectApprox:
      return "direct-approx";
    case BenchMethod::kBreiman1:
      return "breiman-1";
    case BenchMethod::kBreiman10:
      return "breiman-10";
  }
  return "direct-opt";
}

struct BenchmarkOptions {
  int threads = 1;
  double test_fraction = 0.2;
  GroundTruthConvention convention = GroundTruthConvention::kAbsBetaTimesSd;
  // false: MSE of prediction differences / mse-drop or neg-brier-drop.
  // true: MAE of differences / mse-drop or accuracy-drop.
  bool default_metrics = false;
  bool spearman_cor = false;
  int lambda_points = 20;
  double lambda_ratio = 1e-3;
};

struct RepMetrics {
  bool ok = false;
  std::string error;
  double ground_truth_cor = 0.0;
  double max_score_diff = 0.0;
  double mean_score_diff = 0.0;
  double runtime_ms = 0.0;
};

struct RepOutcome {
  std::array<RepMetrics, kNumBenchMethods> methods;
  bool rank_deficient = false;
  bool separation_suspected = false;
  bool not_converged = false;
  int nonzero = 0;
};

enum class BenchMetric { kGroundTruthCor, kMaxScoreDiff, kMeanScoreDiff, kRuntimeMs };
inline constexpr std::array<BenchMetric, 4> kBenchMetrics = {
    BenchMetric::kGroundTruthCor, BenchMetric::kMaxScoreDiff,
    BenchMetric::kMeanScoreDiff, BenchMetric::kRuntimeMs};

inline const char* BenchMetricName(BenchMetric m) {
  switch (m) {
    case BenchMetric::kGroundTruthCor:
      return "ground_truth_cor";
    case BenchMetric::kMaxScoreDiff:
      return "max_score_diff";
    case BenchMetric::kMeanScoreDiff:
      return "mean_score_diff";
    case BenchMetric::kRuntimeMs:
      return "runtime_ms";
  }
  return "ground_truth_cor";
}

inline double MetricValue(const RepMetrics& r, BenchMetric m) {
  switch (m) {
    case BenchMetric::kGroundTruthCor:
      return r.ground_truth_cor;
    case BenchMetric::kMaxScoreDiff:
      return r.max_score_diff;
    case BenchMetric::kMeanScoreDiff:
      return r.mean_score_diff;
    case BenchMetric::kRuntimeMs:
      return r.runtime_ms;
  }
  return 0.0;
}

struct ScenarioResult {
  int index = 0;
  ScenarioSpec spec;
  GroundTruthConvention convention = GroundTruthConvention::kAbsBetaTimesSd;
  std::vector<RepOutcome> reps;

  int Failures(BenchMethod m) const {
    int count = 0;
    for (const auto& r : reps) count += r.methods[static_cast<int>(m)].ok ? 0 : 1;
    return count;
  }

  std::vector<double> Values(BenchMethod m, BenchMetric metric) const {
    std::vector<double> v;
    for (const auto& r : reps) {
      const auto& rm = r.methods[static_cast<int>(m)];
      if (rm.ok) v.push_back(MetricValue(rm, metric));
    }
    return v;
  }

  // Mean over successful reps; combined_se is the sd across reps.
  AggregateStat Aggregate(BenchMethod m, BenchMetric metric) const {
    const std::vector<double> v = Values(m, metric);
    AggregateStat a;
    if (v.empty()) {
      a.mean = std::nan("");
      return a;
    }
    a.mean = Mean(v);
    a.within_var_mean = SampleVariance(v);
    a.combined_se = std::sqrt(a.within_var_mean);
    return a;
  }
};

// RNG stream of one scenario x repetition cell.
inline uint64_t CellSeed(uint64_t base_seed, int scenario, int rep) {
  return StreamSeed(base_seed, static_cast<uint64_t>(scenario), static_cast<uint64_t>(rep));
}

namespace sim_internal {

inline absl::StatusOr<double> ScoreCorrelation(const Eigen::VectorXd& a,
                                               const Eigen::VectorXd& b, bool spearman) {
  return spearman ? Spearman(a, b) : Pearson(a, b);
}

inline void FillAccuracy(const Eigen::VectorXd& est, const Eigen::VectorXd& truth,
                         bool spearman, RepMetrics* out) {
  auto cor = ScoreCorrelation(est, truth, spearman);
  if (!cor.ok()) {
    out->ok = false;
    out->error = std::string(cor.status().message());
    return;
  }
  const Eigen::VectorXd diff = (est - truth).cwiseAbs();
  out->ok = true;
  out->ground_truth_cor = *cor;
  out->max_score_diff = diff.maxCoeff();
  out->mean_score_diff = diff.mean();
}

template <typename Fn>
double TimeMs(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

}  // namespace sim_internal

struct ScenarioData {
  DataMatrix x_train;
  DataMatrix x_test;
  TargetVector y_train;
  TargetVector y_test;
};

// Generates one repetition's data and its 80/20 holdout split.
inline absl::StatusOr<ScenarioData> GenerateScenarioData(const ScenarioSpec& spec,
                                                         uint64_t cell_seed,
                                                         double test_fraction = 0.2) {
  const int informative = spec.response == ResponseKind::kFriedman
                              ? std::min(5, spec.p)
                              : spec.p - (spec.p + 1) / 2;
  DVI_ASSIGN_OR_RETURN(Eigen::MatrixXd cov,
                       BlockCovariance(spec.p, spec.rho, informative));
  const uint64_t x_seed = StreamSeed(cell_seed, 1, 0);
  const uint64_t noise_seed = StreamSeed(cell_seed, 2, 0);
  const uint64_t split_seed = StreamSeed(cell_seed, 3, 0);
  std::optional<DataMatrix> x;
  Eigen::VectorXd y;
  if (spec.response == ResponseKind::kLinear) {
    DVI_ASSIGN_OR_RETURN(DataMatrix g, GenGaussian(spec.n, cov, x_seed));
    DVI_ASSIGN_OR_RETURN(LinearDraw draw,
                         LinearResponse(g, kCoefficientSeed, spec.sigma_eps, noise_seed));
    y = draw.y.values();
    x = std::move(g);
  } else {
    DVI_ASSIGN_OR_RETURN(DataMatrix u, GenUniformCorrelated(spec.n, cov, x_seed));
    DVI_ASSIGN_OR_RETURN(TargetVector t, FriedmanResponse(u, spec.sigma_eps, noise_seed));
    y = t.values();
    x = std::move(u);
  }
  const auto split = HoldoutSplit(spec.n, test_fraction, split_seed);
  DVI_ASSIGN_OR_RETURN(DataMatrix x_train, x->Rows(split.first));
  DVI_ASSIGN_OR_RETURN(DataMatrix x_test, x->Rows(split.second));
  absl::StatusOr<TargetVector> target =
      spec.task == Task::kRegression ? TargetVector::Regression(y)
                                     : TargetVector::Classification(BinarizeMedian(y));
  if (!target.ok()) return target.status();
  TargetVector y_train = target->Rows(split.first);
  TargetVector y_test = target->Rows(split.second);
  if (spec.task == Task::kClassification) {
    // Both classes must be present in the training part.
    auto check = TargetVector::Classification(y_train.values());
    if (!check.ok()) return check.status();
  }
  return ScenarioData{std::move(x_train), std::move(x_test), std::move(y_train),
                      std::move(y_test)};
}

inline RepOutcome RunScenarioRep(const ScenarioSpec& spec, int scenario, int rep,
                                 const BenchmarkOptions& options) {
  RepOutcome out;
  auto fail_all = [&](const absl::Status& s) {
    for (auto& m : out.methods) {
      m.ok = false;
      m.error = std::string(s.message());
    }
    return out;
  };
  const uint64_t cell_seed = CellSeed(spec.base_seed, scenario, rep);
  auto data = GenerateScenarioData(spec, cell_seed, options.test_fraction);
  if (!data.ok()) return fail_all(data.status());

  MasterSpec master;
  master.task = spec.task;
  master.l1 = spec.master == MasterKind::kL1;
  master.lambda_points = options.lambda_points;
  master.lambda_ratio = options.lambda_ratio;
  auto model = FitMaster(data->x_train.values(), data->y_train, master);
  if (!model.ok()) return fail_all(model.status());
  out.rank_deficient = model->diagnostics.rank_deficient;
  out.separation_suspected = model->diagnostics.separation_suspected;
  out.not_converged = !model->diagnostics.converged;
  out.nonzero = model->NumNonzero();
  auto truth = GroundTruthImportance(*model, data->x_test.values(), options.convention);
  if (!truth.ok()) return fail_all(truth.status());
  const LinearPredictor predictor(*std::move(model));

  const Metric direct_metric = options.default_metrics ? Metric::kMae : Metric::kMse;
  Metric breiman_metric = Metric::kMseDrop;
  if (spec.task == Task::kClassification) {
    breiman_metric = options.default_metrics ? Metric::kAccuracyDrop : Metric::kNegBrierDrop;
  }
  for (BenchMethod m : kBenchMethods) {
    RepMetrics& rm = out.methods[static_cast<int>(m)];
    absl::StatusOr<ImportanceReport> report = absl::UnknownError("not run");
    rm.runtime_ms = sim_internal::TimeMs([&] {
      switch (m) {
        case BenchMethod::kDirectOpt:
        case BenchMethod::kDirectApprox: {
          DirectOptions d;
          d.metric = direct_metric;
          d.scheme = m == BenchMethod::kDirectOpt ? Scheme::kOptimal : Scheme::kApprox;
          report = DirectScores(predictor, data->x_test, d);
          break;
        }
        case BenchMethod::kBreiman1:
        case BenchMethod::kBreiman10:
          report = BreimanScores(predictor, data->x_test, data->y_test,
                                 m == BenchMethod::kBreiman1 ? 1 : 10,
                                 StreamSeed(cell_seed, 4, static_cast<uint64_t>(m)),
                                 breiman_metric);
          break;
      }
    });
    if (!report.ok()) {
      rm.ok = false;
      rm.error = std::string(report.status().message());
      continue;
    }
    sim_internal::FillAccuracy(report->normalized(), *truth, options.spearman_cor, &rm);
  }
  return out;
}

// Runs every scenario x repetition cell in parallel; results depend only on
// the specs (timings aside).
inline std::vector<ScenarioResult> RunGrid(const std::vector<ScenarioSpec>& grid,
                                           const BenchmarkOptions& options,
                                           const std::vector<int>& indices = {}) {
  std::vector<ScenarioResult> results(grid.size());
  std::vector<std::pair<int, int>> cells;
  for (size_t s = 0; s < grid.size(); ++s) {
    results[s].index = indices.empty() ? static_cast<int>(s) : indices[s];
    results[s].spec = grid[s];
    results[s].convention = options.convention;
    results[s].reps.resize(std::max(0, grid[s].reps));
    for (int r = 0; r < grid[s].reps; ++r) cells.emplace_back(static_cast<int>(s), r);
  }
  // Large cells first so the tail of the schedule is short.
  std::stable_sort(cells.begin(), cells.end(), [&](const auto& a, const auto& b) {
    const auto& sa = grid[a.first];
    const auto& sb = grid[b.first];
    return static_cast<long>(sa.n) * sa.p > static_cast<long>(sb.n) * sb.p;
  });
  (void)ParallelFor(static_cast<int>(cells.size()), options.threads, [&](int c) {
    const auto [s, r] = cells[c];
    results[s].reps[r] = RunScenarioRep(grid[s], results[s].index, r, options);
    return absl::OkStatus();
  });
  return results;
}

// Combines per-scenario (mean, variance) pairs of one method and metric.
inline absl::StatusOr<AggregateStat> AggregateScenarios(
    const std::vector<ScenarioResult>& results, BenchMethod m, BenchMetric metric) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& r : results) {
    const AggregateStat a = r.Aggregate(m, metric);
    if (std::isnan(a.mean)) continue;
    pairs.emplace_back(a.mean, a.within_var_mean);
  }
  if (pairs.size() == 1) {
    AggregateStat a;
    a.mean = pairs[0].first;
    a.within_var_mean = pairs[0].second;
    a.combined_se = std::sqrt(a.within_var_mean);
    return a;
  }
  return CombineVariance(pairs);
}

// ---------------------------------------------------------------------------
// Ranking stability.

// Indices of the k largest scores, ties broken by lower index.
inline std::vector<int> TopK(const Eigen::VectorXd& scores, int k) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  order.resize(std::min<size_t>(k, order.size()));
  return order;
}

struct FlickerMethod {
  std::string name;
  // Normalized scores for run r.
  std::function<absl::StatusOr<Eigen::VectorXd>(int run)> scores;
};

struct FlickerResult {
  std::string method;
  std::map<std::vector<int>, int> histogram;
  int distinct() const { return static_cast<int>(histogram.size()); }
};

inline absl::StatusOr<std::vector<FlickerResult>> FlickerAnalysis(
    const std::vector<FlickerMethod>& methods, int p, int runs, int k) {
  if (runs < 1) return absl::InvalidArgumentError("flicker analysis needs runs >= 1");
  if (k < 1 || k > p) {
    return WithKind(absl::InvalidArgumentError(absl::StrCat("top-k ", k, " exceeds p=", p)),
                    ErrorKind::kConfig);
  }
  std::vector<FlickerResult> out;
  for (const auto& m : methods) {
    FlickerResult r;
    r.method = m.name;
    for (int run = 0; run < runs; ++run) {
      DVI_ASSIGN_OR_RETURN(Eigen::VectorXd s, m.scores(run));
      ++r.histogram[TopK(s, k)];
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dvi

#endif  // DVI_SIMULATION_H_

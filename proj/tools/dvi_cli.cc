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
// Command-line front end: importance, systemic, benchmark, stability,
// calibrate, fit and predict-stdin.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_split.h"
#include "dvi/dvi.h"

namespace dvi {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPredictor = 3;
constexpr int kExitDegenerate = 4;
constexpr int kExitPartial = 5;

constexpr uint64_t kDefaultSeed = 123;

int ExitCode(const absl::Status& s) {
  switch (KindOf(s)) {
    case ErrorKind::kNone:
      return kExitOk;
    case ErrorKind::kPredictor:
      return kExitPredictor;
    case ErrorKind::kDegenerate:
      return kExitDegenerate;
    case ErrorKind::kConfig:
      break;
  }
  return kExitConfig;
}

int Fail(const absl::Status& s) {
  std::cerr << "error: " << s.message() << "\n";
  return ExitCode(s);
}

absl::Status ConfigError(std::string_view message) {
  return WithKind(absl::InvalidArgumentError(std::string(message)), ErrorKind::kConfig);
}

absl::Status WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) return ConfigError(absl::StrCat("cannot write '", path, "'"));
  return absl::OkStatus();
}

template <typename Fn>
absl::Status WriteWith(const std::string& path, Fn&& fn) {
  std::ostringstream buf;
  fn(buf);
  return WriteText(path, buf.str());
}

// ---------------------------------------------------------------------------
// Shared flags.

struct DataFlags {
  std::string data;
  std::string target;
  std::vector<std::string> ignore;
  std::string task = "auto";
};

struct ModelFlags {
  std::string model = "ols";
  std::string external;
  int outputs = 1;
  double timeout = 60.0;
  std::optional<double> lambda;
  int min_nonzero = 1;
  bool no_class_balance = false;
  std::string exclude;
  std::string save_model;
};

constexpr const char* kBuiltinModels[] = {"ols", "lasso", "logistic", "l1-logistic"};

bool IsBuiltin(const std::string& m) {
  return std::find(std::begin(kBuiltinModels), std::end(kBuiltinModels), m) !=
         std::end(kBuiltinModels);
}

void AddDataFlags(CLI::App* app, DataFlags* f) {
  app->add_option("--data", f->data, "CSV file with a header row")->required();
  app->add_option("--target", f->target, "Target column name")->required();
  app->add_option("--ignore", f->ignore, "Columns to drop")->delimiter(',');
  app->add_option("--task", f->task, "regression, classification or auto")
      ->check(CLI::IsMember({"auto", "regression", "classification"}))
      ->capture_default_str();
}

void AddModelFlags(CLI::App* app, ModelFlags* f, bool with_external) {
  app->add_option("--model", f->model,
                  "Builtin model to fit (ols, lasso, logistic, l1-logistic) or a "
                  "saved model JSON file")
      ->capture_default_str();
  if (with_external) {
    app->add_option("--external", f->external,
                    "Command of an external predictor speaking protocol v1");
    app->add_option("--external-outputs", f->outputs, "Outputs per row of the external model")
        ->capture_default_str();
    app->add_option("--external-timeout", f->timeout, "Seconds per prediction call")
        ->capture_default_str();
  }
  app->add_option("--lambda", f->lambda, "Fixed l1 penalty instead of the lambda grid");
  app->add_option("--min-nonzero", f->min_nonzero,
                  "Sparse masters keep at least this many coefficients")
      ->capture_default_str();
  app->add_flag("--no-class-balance", f->no_class_balance,
                "Unweighted logistic likelihood");
  app->add_option("--exclude", f->exclude, "Fit the builtin model without this feature");
  app->add_option("--save-model", f->save_model, "Write the fitted model as JSON");
}

Task ResolveTask(const DataFlags& d, const ModelFlags& m) {
  if (d.task == "regression") return Task::kRegression;
  if (d.task == "classification") return Task::kClassification;
  if (m.model == "logistic" || m.model == "l1-logistic") return Task::kClassification;
  if (m.external.empty() && !IsBuiltin(m.model)) {
    auto model = LoadModel(m.model);
    if (model.ok() && model->link == Link::kLogit) return Task::kClassification;
  }
  return Task::kRegression;
}

absl::StatusOr<Dataset> LoadData(const DataFlags& d, Task task) {
  EncodePolicy policy;
  policy.task = task;
  policy.ignore = d.ignore;
  auto data = LoadCsv(d.data, d.target, policy);
  if (!data.ok()) return WithKind(data.status(), ErrorKind::kConfig);
  return data;
}

absl::StatusOr<LinearModel> FitBuiltin(const ModelFlags& f, const DataMatrix& x,
                                       const TargetVector& y) {
  const bool logistic = f.model == "logistic" || f.model == "l1-logistic";
  const bool l1 = f.model == "lasso" || f.model == "l1-logistic";
  const Task task = logistic ? Task::kClassification : Task::kRegression;
  if (y.task() != task) {
    return ConfigError(absl::StrCat("model ", f.model, " does not match the ",
                                    TaskName(y.task()), " target"));
  }
  auto fit = [&](const Eigen::MatrixXd& m) -> absl::StatusOr<LinearModel> {
    if (l1 && f.lambda.has_value()) {
      if (!logistic) return FitLasso(m, y.values(), *f.lambda);
      return FitLogistic(m, y, Penalty::L1(*f.lambda), !f.no_class_balance);
    }
    MasterSpec spec;
    spec.task = task;
    spec.l1 = l1;
    spec.min_nonzero = f.min_nonzero;
    spec.class_balance = !f.no_class_balance;
    return FitMaster(m, y, spec);
  };
  absl::StatusOr<LinearModel> model;
  if (!f.exclude.empty()) {
    const auto j = x.FindFeature(f.exclude);
    if (!j.has_value()) return ConfigError(absl::StrCat("unknown feature '", f.exclude, "'"));
    model = FitExcluding(x.values(), *j, fit);
  } else {
    model = fit(x.values());
  }
  if (!model.ok()) return WithKind(model.status(), ErrorKind::kConfig);
  return model;
}

struct LoadedModel {
  std::unique_ptr<Predictor> predictor;
  std::optional<LinearModel> linear;
};

absl::StatusOr<LoadedModel> MakeModel(const ModelFlags& f, const Dataset& data) {
  LoadedModel out;
  if (!f.external.empty()) {
    std::vector<std::string> command =
        absl::StrSplit(f.external, absl::ByAnyChar(" \t"), absl::SkipEmpty());
    out.predictor = std::make_unique<ExternalPredictor>(std::move(command), data.x.p(),
                                                        f.outputs, f.timeout);
    return out;
  }
  if (IsBuiltin(f.model)) {
    DVI_ASSIGN_OR_RETURN(LinearModel m, FitBuiltin(f, data.x, data.y));
    out.linear = std::move(m);
  } else {
    auto m = LoadModel(f.model);
    if (!m.ok()) return WithKind(m.status(), ErrorKind::kConfig);
    if (m->p() != data.x.p()) {
      return ConfigError(absl::StrCat("model '", f.model, "' has ", m->p(),
                                      " coefficients, data has ", data.x.p(), " features"));
    }
    out.linear = *std::move(m);
  }
  if (!f.save_model.empty()) {
    DVI_RETURN_IF_ERROR(
        WriteText(f.save_model, ModelToJson(*out.linear, data.x.names()).dump(2) + "\n"));
  }
  out.predictor = std::make_unique<LinearPredictor>(*out.linear);
  return out;
}

absl::StatusOr<Metric> DifferenceMetric(const std::string& name) {
  const auto m = ParseMetric(name);
  if (!m.has_value() || !IsPredictionDifferenceMetric(*m)) {
    return ConfigError(absl::StrCat("metric '", name, "' is not one of mae, mse, rmse"));
  }
  return *m;
}

Scheme ParseScheme(const std::string& s) {
  return s == "approx" ? Scheme::kApprox : Scheme::kOptimal;
}

Metric DefaultBreimanMetric(const TargetVector& y) {
  return y.task() == Task::kClassification ? Metric::kNegBrierDrop : Metric::kMseDrop;
}

void PrintReport(const ImportanceReport& r) {
  std::printf("%-28s %12s", "feature", "normalized");
  if (r.systemic().has_value()) std::printf(" %12s %12s %12s", "systemic", "direct", "indirect");
  std::printf("\n");
  for (int k = 0; k < r.p(); ++k) {
    std::printf("%-28s %12.6f", r.feature_names()[k].c_str(), r.normalized()[k]);
    if (r.systemic().has_value()) {
      const auto& d = *r.systemic();
      std::printf(" %12.6f %12.6f %12.6f", d.systemic[k], d.direct[k], d.indirect[k]);
    }
    std::printf("\n");
  }
}

// Echo of every option value of one subcommand, loadable again with --config.
std::string EffectiveConfig(const CLI::App* app) {
  return absl::StrCat("[", app->get_name(), "]\n", app->config_to_str(true, false));
}

// ---------------------------------------------------------------------------
// importance

struct ImportanceFlags {
  DataFlags data;
  ModelFlags model;
  std::string metric = "mae";
  std::string scheme = "opt";
  int threads = DefaultThreads();
  std::optional<double> prescreen;
  int compare_breiman = 0;
  std::string breiman_metric = "auto";
  uint64_t seed = kDefaultSeed;
  std::string out = "dvi_importance";
};

int RunImportance(const ImportanceFlags& f, const CLI::App* app) {
  const Task task = ResolveTask(f.data, f.model);
  auto data = LoadData(f.data, task);
  if (!data.ok()) return Fail(data.status());
  auto model = MakeModel(f.model, *data);
  if (!model.ok()) return Fail(model.status());
  auto metric = DifferenceMetric(f.metric);
  if (!metric.ok()) return Fail(metric.status());

  DirectOptions options;
  options.metric = *metric;
  options.scheme = ParseScheme(f.scheme);
  options.threads = f.threads;
  options.prescreen_epsilon = f.prescreen;
  const auto start = std::chrono::steady_clock::now();
  auto report = DirectScores(*model->predictor, data->x, options);
  if (!report.ok()) return Fail(report.status());
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start).count();

  Json j = ReportToJson(*report);
  j["run_config"] = EffectiveConfig(app);
  absl::Status s = WriteText(f.out + ".json", j.dump(2) + "\n");
  if (s.ok()) s = WriteWith(f.out + ".csv", [&](std::ostream& o) { WriteReportCsv(o, *report); });
  if (!s.ok()) return Fail(s);
  PrintReport(*report);
  std::fprintf(stderr, "scored %d features in %.3f ms\n", report->p(), ms);

  if (f.compare_breiman > 0) {
    Metric bm = DefaultBreimanMetric(data->y);
    if (f.breiman_metric != "auto") {
      const auto parsed = ParseMetric(f.breiman_metric);
      if (!parsed.has_value() || IsPredictionDifferenceMetric(*parsed)) {
        return Fail(ConfigError(absl::StrCat("unknown baseline metric '", f.breiman_metric, "'")));
      }
      bm = *parsed;
    }
    auto breiman = BreimanScores(*model->predictor, data->x, data->y, f.compare_breiman,
                                 f.seed, bm, f.threads);
    if (!breiman.ok()) return Fail(breiman.status());
    Json bj = ReportToJson(*breiman);
    bj["run_config"] = EffectiveConfig(app);
    s = WriteText(f.out + "_breiman.json", bj.dump(2) + "\n");
    if (s.ok()) {
      s = WriteWith(f.out + "_breiman.csv", [&](std::ostream& o) { WriteReportCsv(o, *breiman); });
    }
    if (!s.ok()) return Fail(s);
    if (f.compare_breiman >= 2) {
      auto dom = RunDominanceCheck(*model->predictor, data->x.values(), *metric,
                                   f.compare_breiman, f.seed, options.scheme, f.threads);
      if (!dom.ok()) return Fail(dom.status());
      s = WriteText(f.out + "_dominance.json",
                    DominanceToJson(*dom, data->x.names()).dump(2) + "\n");
      if (!s.ok()) return Fail(s);
      std::printf("dominance check (B=%d): lhs=%.6g rhs_consistent=%.6g -> %s\n",
                  dom->B, dom->lhs, dom->rhs_consistent,
                  dom->verdict_consistent ? "deterministic preferred" : "not preferred");
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// systemic

struct SystemicFlags {
  DataFlags data;
  ModelFlags model;
  std::string metric = "mae";
  std::string scheme = "opt";
  int threads = DefaultThreads();
  double alpha = kDefaultAlpha;
  uint64_t seed = kDefaultCalibrationSeed;
  std::string protected_feature;
  int folds = 0;
  uint64_t fold_seed = 0;
  bool test_correlations = false;
  std::string out = "dvi_systemic";
};

int RunSystemic(const SystemicFlags& f, const CLI::App* app) {
  if (!(f.alpha > 0.0 && f.alpha < 1.0)) {
    return Fail(ConfigError("--alpha must lie in (0, 1)"));
  }
  const Task task = ResolveTask(f.data, f.model);
  auto data = LoadData(f.data, task);
  if (!data.ok()) return Fail(data.status());
  if (!f.protected_feature.empty() && !data->x.FindFeature(f.protected_feature)) {
    return Fail(ConfigError(absl::StrCat("unknown protected feature '", f.protected_feature,
                                         "'")));
  }
  auto metric = DifferenceMetric(f.metric);
  if (!metric.ok()) return Fail(metric.status());
  const Scheme scheme = ParseScheme(f.scheme);

  auto graph = BuildGraph(data->x, f.alpha, f.seed);
  if (!graph.ok()) return Fail(graph.status());

  Json j;
  absl::StatusOr<ImportanceReport> report = absl::UnknownError("not run");
  std::vector<double> taus;
  if (f.folds > 0) {
    if (!f.model.external.empty() || !IsBuiltin(f.model.model)) {
      return Fail(ConfigError("--folds needs a builtin --model that can be refit"));
    }
    SystemicCvOptions o;
    o.folds = f.folds;
    o.fold_seed = f.fold_seed;
    o.alpha = f.alpha;
    o.calibration_seed = f.seed;
    o.metric = *metric;
    o.scheme = scheme;
    o.threads = f.threads;
    o.test_correlations = f.test_correlations;
    auto fit = [&](const DataMatrix& x, const TargetVector& y)
        -> absl::StatusOr<std::unique_ptr<Predictor>> {
      DVI_ASSIGN_OR_RETURN(LinearModel m, FitBuiltin(f.model, x, y));
      return std::unique_ptr<Predictor>(std::make_unique<LinearPredictor>(std::move(m)));
    };
    auto cv = CrossValidatedSystemic(*data, fit, o);
    if (!cv.ok()) return Fail(cv.status());
    taus = cv->taus;
    report = std::move(cv->report);
  } else {
    auto model = MakeModel(f.model, *data);
    if (!model.ok()) return Fail(model.status());
    report = SystemicScores(*model->predictor, data->x, *metric, scheme, *graph, f.threads);
  }
  if (!report.ok()) return Fail(report.status());

  j = ReportToJson(*report);
  j["header"] = ToleranceQuantileLabel(f.alpha);
  j["graph"] = GraphToJson(*graph);
  if (!taus.empty()) {
    j["folds"] = f.folds;
    j["fold_taus"] = taus;
  }
  std::optional<AuditResult> audit;
  if (!f.protected_feature.empty()) {
    auto a = AuditFromReport(*report, *graph, f.protected_feature);
    if (!a.ok()) return Fail(a.status());
    audit = *a;
    j["audit"] = AuditToJson(*a);
  }
  j["run_config"] = EffectiveConfig(app);

  absl::Status s = WriteText(f.out + ".json", j.dump(2) + "\n");
  if (s.ok()) s = WriteWith(f.out + ".csv", [&](std::ostream& o) { WriteReportCsv(o, *report); });
  if (s.ok()) {
    s = WriteWith(f.out + "_correlation.csv", [&](std::ostream& o) {
      WriteCorrelationCsv(o, graph->matrix, graph->names);
    });
  }
  if (s.ok()) {
    s = WriteWith(f.out + "_edges.csv", [&](std::ostream& o) { WriteEdgeCsv(o, *graph); });
  }
  if (!s.ok()) return Fail(s);

  std::printf("%s\n", ToleranceQuantileLabel(f.alpha).c_str());
  std::printf("tau = %s (%zu edges)\n", FormatDouble(graph->tau).c_str(), graph->edges.size());
  for (const auto& w : graph->warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  PrintReport(*report);
  if (audit.has_value()) {
    std::printf("audit %s: systemic=%.6f direct=%.6f indirect=%.6f proxy share=%.6f\n",
                audit->feature.c_str(), audit->systemic, audit->direct, audit->indirect,
                audit->proxy_influenced_share);
    for (const auto& [name, rho] : audit->proxies) {
      std::printf("  proxy %s rho=%.4f\n", name.c_str(), rho);
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateFlags {
  DataFlags data;
  double alpha = kDefaultAlpha;
  uint64_t seed = kDefaultCalibrationSeed;
};

int RunCalibrate(const CalibrateFlags& f) {
  const Task task = f.data.task == "classification" ? Task::kClassification : Task::kRegression;
  auto data = LoadData(f.data, task);
  if (!data.ok()) return Fail(data.status());
  auto tau = CalibrateThreshold(data->x.values(), f.alpha, f.seed);
  if (!tau.ok()) return Fail(tau.status());
  std::printf("%s\ntau = %s\n", ToleranceQuantileLabel(f.alpha).c_str(),
              FormatDouble(*tau).c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit / predict-stdin

struct FitFlags {
  DataFlags data;
  ModelFlags model;
  std::string out = "model.json";
};

int RunFit(FitFlags f) {
  if (!IsBuiltin(f.model.model)) {
    return Fail(ConfigError(absl::StrCat("'", f.model.model, "' is not a builtin model")));
  }
  f.model.save_model = f.out;
  auto data = LoadData(f.data, ResolveTask(f.data, f.model));
  if (!data.ok()) return Fail(data.status());
  auto model = MakeModel(f.model, *data);
  if (!model.ok()) return Fail(model.status());
  std::printf("wrote %s (%d nonzero coefficients)\n", f.out.c_str(),
              model->linear->NumNonzero());
  return kExitOk;
}

int RunPredictStdin(const std::string& path) {
  auto model = LoadModel(path);
  if (!model.ok()) return Fail(model.status());
  const LinearPredictor predictor(*std::move(model));
  const absl::Status s = ServePrediction(predictor, std::cin, std::cout);
  if (!s.ok()) return Fail(s);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkFlags {
  std::vector<int> n, p;
  std::vector<double> sigma, rho;
  std::vector<std::string> response, task, master;
  int reps = 50;
  uint64_t base_seed = kDefaultBaseSeed;
  bool default_metrics = false;
  bool spearman_cor = false;
  bool list = false;
  std::string convention = "abs-beta-times-sd";
  int threads = DefaultThreads();
  std::string out = "benchmark_out";
};

template <typename T>
bool Keep(const std::vector<T>& filter, const T& v) {
  return filter.empty() || std::find(filter.begin(), filter.end(), v) != filter.end();
}

int RunBenchmark(const BenchmarkFlags& f, const CLI::App* app) {
  if (f.reps < 1) return Fail(ConfigError("--reps must be >= 1"));
  std::vector<ScenarioSpec> grid;
  std::vector<int> indices;
  const auto full = DefaultGrid(f.reps, f.base_seed);
  for (size_t i = 0; i < full.size(); ++i) {
    const ScenarioSpec& s = full[i];
    if (Keep(f.n, s.n) && Keep(f.p, s.p) && Keep(f.sigma, s.sigma_eps) && Keep(f.rho, s.rho) &&
        Keep(f.response, std::string(ResponseName(s.response))) &&
        Keep(f.task, std::string(TaskName(s.task))) &&
        Keep(f.master, std::string(MasterName(s.master)))) {
      grid.push_back(s);
      indices.push_back(static_cast<int>(i));
    }
  }
  if (grid.empty()) return Fail(ConfigError("the filters select no scenario"));
  if (f.list) {
    std::cout << kScenarioHeader << "\n";
    for (size_t i = 0; i < grid.size(); ++i) {
      ScenarioResult r;
      r.index = indices[i];
      r.spec = grid[i];
      WriteScenarioColumns(std::cout, r);
      std::cout << "\n";
    }
    return kExitOk;
  }

  BenchmarkOptions o;
  o.threads = f.threads;
  o.default_metrics = f.default_metrics;
  o.spearman_cor = f.spearman_cor;
  for (auto c : {GroundTruthConvention::kAbsBetaTimesSd, GroundTruthConvention::kAbsBeta,
                 GroundTruthConvention::kSquared}) {
    if (f.convention == GroundTruthConventionName(c)) o.convention = c;
  }

  std::error_code ec;
  std::filesystem::create_directories(f.out, ec);
  if (ec) return Fail(ConfigError(absl::StrCat("cannot create '", f.out, "'")));
  std::fprintf(stderr, "running %zu scenarios x %d reps on %d threads\n", grid.size(), f.reps,
               f.threads);
  const auto results = RunGrid(grid, o, indices);

  int failed = 0;
  for (const auto& r : results) {
    for (size_t rep = 0; rep < r.reps.size(); ++rep) {
      for (BenchMethod m : kBenchMethods) {
        const auto& rm = r.reps[rep].methods[static_cast<int>(m)];
        if (rm.ok) continue;
        ++failed;
        std::fprintf(stderr, "scenario %d rep %zu %s failed: %s\n", r.index, rep,
                     BenchMethodName(m), rm.error.c_str());
      }
    }
  }
  const std::string dir = f.out + "/";
  absl::Status s =
      WriteWith(dir + "results.csv", [&](std::ostream& out) { WriteResultsCsv(out, results, false); });
  if (s.ok()) {
    s = WriteWith(dir + "timings.csv", [&](std::ostream& out) { WriteResultsCsv(out, results, true); });
  }
  if (s.ok()) s = WriteText(dir + "summary.json", SummaryJson(results, false).dump(2) + "\n");
  if (s.ok()) s = WriteText(dir + "config.ini", EffectiveConfig(app));
  if (!s.ok()) return Fail(s);

  const Json summary = SummaryJson(results, false);
  for (const auto& table : summary["tables"]) {
    std::printf("%s / %s (%d scenarios)\n", table["task"].get<std::string>().c_str(),
                table["response"].get<std::string>().c_str(), table["scenarios"].get<int>());
    for (const auto& row : table["rows"]) {
      const Json& cor = row["ground_truth_cor"];
      std::printf("  %-14s %-14s cor %s\n", row["master"].get<std::string>().c_str(),
                  row["method"].get<std::string>().c_str(),
                  cor.is_null() ? "n/a"
                                : absl::StrCat(FormatDouble(cor["mean"].get<double>()), " +/- ",
                                               FormatDouble(2 * cor["se"].get<double>()))
                                      .c_str());
    }
  }
  if (failed > 0) {
    std::fprintf(stderr, "%d method runs failed; partial results written\n", failed);
    return kExitPartial;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stability

struct StabilityFlags {
  DataFlags data;
  ModelFlags model;
  std::vector<std::string> methods = {"direct-opt", "direct-approx", "breiman-1",
                                      "breiman-10"};
  std::string metric = "mae";
  int runs = 10;
  int k = 5;
  uint64_t seed = kDefaultSeed;
  bool fixed_seed = false;
  int threads = DefaultThreads();
  std::string out = "stability.csv";
};

int RunStability(const StabilityFlags& f) {
  if (f.runs < 1) return Fail(ConfigError("--runs must be >= 1"));
  const Task task = ResolveTask(f.data, f.model);
  auto data = LoadData(f.data, task);
  if (!data.ok()) return Fail(data.status());
  auto model = MakeModel(f.model, *data);
  if (!model.ok()) return Fail(model.status());
  auto metric = DifferenceMetric(f.metric);
  if (!metric.ok()) return Fail(metric.status());
  const Predictor& predictor = *model->predictor;
  const Dataset& d = *data;

  std::vector<FlickerMethod> methods;
  for (const auto& name : f.methods) {
    FlickerMethod m;
    m.name = name;
    if (name == "direct-opt" || name == "direct-approx") {
      DirectOptions o;
      o.metric = *metric;
      o.scheme = name == "direct-opt" ? Scheme::kOptimal : Scheme::kApprox;
      o.threads = f.threads;
      m.scores = [&predictor, &d, o](int) -> absl::StatusOr<Eigen::VectorXd> {
        DVI_ASSIGN_OR_RETURN(ImportanceReport r, DirectScores(predictor, d.x, o));
        return r.normalized();
      };
    } else if (name == "breiman-1" || name == "breiman-10") {
      const int B = name == "breiman-1" ? 1 : 10;
      const uint64_t seed = f.seed;
      const bool fixed = f.fixed_seed;
      const int threads = f.threads;
      m.scores = [&predictor, &d, B, seed, fixed, threads](int run)
          -> absl::StatusOr<Eigen::VectorXd> {
        const uint64_t s = fixed ? seed : StreamSeed(seed, 0x666c6b, static_cast<uint64_t>(run));
        DVI_ASSIGN_OR_RETURN(ImportanceReport r,
                             BreimanScores(predictor, d.x, d.y, B, s,
                                           DefaultBreimanMetric(d.y), threads));
        return r.normalized();
      };
    } else {
      return Fail(ConfigError(absl::StrCat("unknown method '", name, "'")));
    }
    methods.push_back(std::move(m));
  }
  auto results = FlickerAnalysis(methods, data->x.p(), f.runs, f.k);
  if (!results.ok()) return Fail(results.status());
  const absl::Status s = WriteWith(
      f.out, [&](std::ostream& o) { WriteFlickerCsv(o, *results, data->x.names()); });
  if (!s.ok()) return Fail(s);
  for (const auto& r : *results) {
    std::printf("%-14s %d distinct top-%d tuples over %d runs\n", r.method.c_str(),
                r.distinct(), f.k, f.runs);
  }
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Direct and systemic permutation variable importance"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dvi 0.1.0");

  // Options after the subcommand that it does not know (such as --config)
  // fall through to the main app.
  app.fallthrough();
  app.set_config("--config", "",
                 "INI file of option defaults, one [subcommand] section each");

  ImportanceFlags imp;
  CLI::App* importance = app.add_subcommand("importance", "Direct importance report");
  AddDataFlags(importance, &imp.data);
  AddModelFlags(importance, &imp.model, true);
  importance->add_option("--metric", imp.metric, "mae, mse or rmse")->capture_default_str();
  importance->add_option("--scheme", imp.scheme, "opt (rank shift) or approx (index shift)")
      ->check(CLI::IsMember({"opt", "approx"}))
      ->capture_default_str();
  importance->add_option("--threads", imp.threads)->capture_default_str();
  importance->add_option("--prescreen", imp.prescreen,
                         "Zero out features whose predictions move by at most this");
  importance->add_option("--compare-breiman", imp.compare_breiman,
                         "Also run the random-permutation baseline with B repetitions")
      ->capture_default_str();
  importance->add_option("--breiman-metric", imp.breiman_metric,
                         "mse-drop, neg-brier-drop, accuracy-drop or auto")
      ->capture_default_str();
  importance->add_option("--seed", imp.seed, "Baseline permutation seed")->capture_default_str();
  importance->add_option("--out", imp.out, "Output prefix")->capture_default_str();

  SystemicFlags sys;
  CLI::App* systemic = app.add_subcommand("systemic", "Systemic importance and audits");
  AddDataFlags(systemic, &sys.data);
  AddModelFlags(systemic, &sys.model, true);
  systemic->add_option("--metric", sys.metric, "mae, mse or rmse")->capture_default_str();
  systemic->add_option("--scheme", sys.scheme)
      ->check(CLI::IsMember({"opt", "approx"}))
      ->capture_default_str();
  systemic->add_option("--threads", sys.threads)->capture_default_str();
  systemic->add_option("--alpha", sys.alpha, "Level of the correlation threshold")
      ->capture_default_str();
  systemic->add_option("--seed", sys.seed, "Threshold calibration seed")->capture_default_str();
  systemic->add_option("--protected", sys.protected_feature, "Feature to audit for proxies");
  systemic->add_option("--folds", sys.folds, "Cross-validate over this many folds (0 = off)")
      ->capture_default_str();
  systemic->add_option("--fold-seed", sys.fold_seed)->capture_default_str();
  systemic->add_flag("--test-correlations", sys.test_correlations,
                     "Estimate correlations on the held-out fold");
  systemic->add_option("--out", sys.out, "Output prefix")->capture_default_str();

  CalibrateFlags cal;
  CLI::App* calibrate = app.add_subcommand("calibrate", "Correlation threshold only");
  AddDataFlags(calibrate, &cal.data);
  calibrate->add_option("--alpha", cal.alpha)->capture_default_str();
  calibrate->add_option("--seed", cal.seed)->capture_default_str();

  BenchmarkFlags bench;
  CLI::App* benchmark = app.add_subcommand("benchmark", "Synthetic scenario grid");
  benchmark->add_option("--n", bench.n, "Keep these sample sizes")->delimiter(',');
  benchmark->add_option("--p", bench.p, "Keep these feature counts")->delimiter(',');
  benchmark->add_option("--sigma", bench.sigma, "Keep these noise levels")->delimiter(',');
  benchmark->add_option("--rho", bench.rho, "Keep these correlations")->delimiter(',');
  benchmark->add_option("--response", bench.response, "linear, friedman")->delimiter(',');
  benchmark->add_option("--task", bench.task, "regression, classification")->delimiter(',');
  benchmark->add_option("--master", bench.master, "unregularized, l1")->delimiter(',');
  benchmark->add_option("--reps", bench.reps)->capture_default_str();
  benchmark->add_option("--base-seed", bench.base_seed)->capture_default_str();
  benchmark->add_flag("--default-metrics", bench.default_metrics,
                      "MAE for direct scores; mse-drop or accuracy-drop for the baseline");
  benchmark->add_flag("--spearman-cor", bench.spearman_cor,
                      "Rank correlation against the ground truth");
  benchmark->add_flag("--list", bench.list, "Print the selected scenarios and exit");
  benchmark->add_option("--convention", bench.convention,
                        "abs-beta-times-sd, abs-beta or squared")
      ->check(CLI::IsMember({"abs-beta-times-sd", "abs-beta", "squared"}))
      ->capture_default_str();
  benchmark->add_option("--threads", bench.threads)->capture_default_str();
  benchmark->add_option("--out", bench.out, "Output directory")->capture_default_str();

  StabilityFlags stab;
  CLI::App* stability = app.add_subcommand("stability", "Top-k ranking flicker");
  AddDataFlags(stability, &stab.data);
  AddModelFlags(stability, &stab.model, true);
  stability->add_option("--methods", stab.methods)->delimiter(',')->capture_default_str();
  stability->add_option("--metric", stab.metric)->capture_default_str();
  stability->add_option("--runs", stab.runs)->capture_default_str();
  stability->add_option("--k", stab.k)->capture_default_str();
  stability->add_option("--seed", stab.seed)->capture_default_str();
  stability->add_flag("--fixed-seed", stab.fixed_seed, "Reuse one baseline seed for every run");
  stability->add_option("--threads", stab.threads)->capture_default_str();
  stability->add_option("--out", stab.out)->capture_default_str();

  FitFlags fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a builtin model and save it as JSON");
  AddDataFlags(fit_cmd, &fit.data);
  AddModelFlags(fit_cmd, &fit.model, false);
  fit_cmd->add_option("--out", fit.out)->capture_default_str();

  std::string model_path;
  CLI::App* predict = app.add_subcommand(
      "predict-stdin", "Answer one protocol v1 request on stdin with a saved model");
  predict->add_option("--model", model_path, "Saved model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (*importance) return RunImportance(imp, importance);
  if (*systemic) return RunSystemic(sys, systemic);
  if (*calibrate) return RunCalibrate(cal);
  if (*benchmark) return RunBenchmark(bench, benchmark);
  if (*stability) return RunStability(stab);
  if (*fit_cmd) return RunFit(fit);
  if (*predict) return RunPredictStdin(model_path);
  return kExitConfig;
}

}  // namespace
}  // namespace dvi

int main(int argc, char** argv) { return dvi::Main(argc, argv); }

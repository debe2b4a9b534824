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
#ifndef DVI_SYSTEMIC_H_
#define DVI_SYSTEMIC_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dvi/csv.h"
#include "dvi/data.h"
#include "dvi/direct.h"
#include "dvi/format.h"
#include "dvi/parallel.h"
#include "dvi/permutation.h"
#include "dvi/predictors.h"
#include "dvi/rng.h"
#include "dvi/stats.h"
#include "dvi/status.h"

namespace dvi {

inline constexpr double kDefaultAlpha = 0.01;
inline constexpr uint64_t kDefaultCalibrationSeed = 123;

// Pairwise Spearman correlations with midranks. A constant column has no rank
// correlation; its off-diagonal entries are set to 0 and a warning is added.
inline absl::StatusOr<Eigen::MatrixXd> SpearmanMatrix(
    const Eigen::MatrixXd& x, std::vector<std::string>* warnings = nullptr,
    const std::vector<std::string>& names = {}) {
  if (x.rows() < 3) {
    return absl::InvalidArgumentError("spearman matrix needs at least 3 rows");
  }
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd z(n, p);
  std::vector<bool> constant(p, false);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd r = Midranks(std::span<const double>(x.col(j).data(), n));
    r.array() -= r.mean();
    const double norm = r.norm();
    if (norm == 0.0) {
      constant[j] = true;
      z.col(j).setZero();
      if (warnings != nullptr) {
        const std::string name =
            j < static_cast<Eigen::Index>(names.size()) ? names[j] : absl::StrCat("column ", j);
        warnings->push_back(absl::StrCat(
            name, " is constant; its rank correlations are set to 0"));
      }
    } else {
      z.col(j) = r / norm;
    }
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) {
      double rho = 0.0;
      if (!constant[a] && !constant[b]) {
        rho = std::clamp(z.col(a).dot(z.col(b)), -1.0, 1.0);
      }
      m(a, b) = rho;
      m(b, a) = rho;
    }
  }
  return m;
}

struct CorrelationEdge {
  int a = 0;
  int b = 0;
  double rho = 0.0;
};

struct CorrelationGraph {
  std::vector<std::string> names;
  Eigen::MatrixXd matrix;
  double tau = 0.0;
  double alpha = kDefaultAlpha;
  uint64_t seed = kDefaultCalibrationSeed;
  std::vector<CorrelationEdge> edges;  // a < b, |rho| > tau
  std::vector<std::string> warnings;

  int p() const { return static_cast<int>(matrix.rows()); }
  bool Linked(int k, int j) const {
    return k != j && std::abs(matrix(k, j)) > tau;
  }
};

// Pooled |rho| of all column pairs after permuting every column independently.
inline absl::StatusOr<std::vector<double>> NullCorrelations(const Eigen::MatrixXd& x,
                                                            uint64_t seed) {
  if (x.cols() < 2) {
    return WithKind(absl::InvalidArgumentError(
                        "threshold calibration needs at least 2 features"),
                    ErrorKind::kConfig);
  }
  Eigen::MatrixXd shuffled(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    shuffled.col(j) = ApplyRandom(x.col(j), StreamSeed(seed, 0x6e756c6c, j));
  }
  DVI_ASSIGN_OR_RETURN(const Eigen::MatrixXd m, SpearmanMatrix(shuffled));
  std::vector<double> pooled;
  pooled.reserve(x.cols() * (x.cols() - 1) / 2);
  for (Eigen::Index a = 0; a < x.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < x.cols(); ++b) pooled.push_back(std::abs(m(a, b)));
  }
  return pooled;
}

// The (1 - alpha) empirical quantile of the pooled null correlations.
inline absl::StatusOr<double> CalibrateThreshold(const Eigen::MatrixXd& x_train,
                                                 double alpha = kDefaultAlpha,
                                                 uint64_t seed = kDefaultCalibrationSeed) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    return WithKind(absl::InvalidArgumentError("alpha must lie in (0, 1)"),
                    ErrorKind::kConfig);
  }
  DVI_ASSIGN_OR_RETURN(const std::vector<double> pooled,
                       NullCorrelations(x_train, seed));
  return EmpiricalQuantile(pooled, 1.0 - alpha);
}

// Graph with an explicit threshold on a given correlation matrix.
inline absl::StatusOr<CorrelationGraph> GraphFromMatrix(Eigen::MatrixXd matrix,
                                                        double tau,
                                                        std::vector<std::string> names) {
  if (matrix.rows() != matrix.cols() ||
      static_cast<Eigen::Index>(names.size()) != matrix.rows()) {
    return absl::InvalidArgumentError("correlation matrix and names disagree");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) {
    return absl::InvalidArgumentError("tau must lie in [0, 1]");
  }
  CorrelationGraph g;
  g.names = std::move(names);
  g.matrix = std::move(matrix);
  g.tau = tau;
  for (int a = 0; a < g.p(); ++a) {
    for (int b = a + 1; b < g.p(); ++b) {
      if (g.Linked(a, b)) g.edges.push_back({a, b, g.matrix(a, b)});
    }
  }
  return g;
}

// Correlations and calibrated threshold, both from the training matrix.
inline absl::StatusOr<CorrelationGraph> BuildGraph(const DataMatrix& x_train,
                                                   double alpha = kDefaultAlpha,
                                                   uint64_t seed = kDefaultCalibrationSeed) {
  DVI_ASSIGN_OR_RETURN(const double tau, CalibrateThreshold(x_train.values(), alpha, seed));
  std::vector<std::string> warnings;
  DVI_ASSIGN_OR_RETURN(Eigen::MatrixXd m,
                       SpearmanMatrix(x_train.values(), &warnings, x_train.names()));
  DVI_ASSIGN_OR_RETURN(CorrelationGraph g,
                       GraphFromMatrix(std::move(m), tau, x_train.names()));
  g.alpha = alpha;
  g.seed = seed;
  g.warnings = std::move(warnings);
  return g;
}

// Raw systemic disruption: permute feature j, push rho_kj * delta into every
// linked feature k, and score the prediction change.
inline absl::StatusOr<Eigen::VectorXd> SystemicRawScores(
    const Predictor& model, const Eigen::MatrixXd& x, Metric metric, Scheme scheme,
    const CorrelationGraph& graph, int threads = 1) {
  if (!IsPredictionDifferenceMetric(metric)) {
    return WithKind(absl::InvalidArgumentError(absl::StrCat(
                        "metric ", MetricName(metric),
                        " is not a prediction-difference metric")),
                    ErrorKind::kConfig);
  }
  if (graph.p() != x.cols()) {
    return WithKind(absl::InvalidArgumentError(absl::StrCat(
                        "correlation graph has ", graph.p(), " features, data has ",
                        x.cols())),
                    ErrorKind::kConfig);
  }
  DVI_ASSIGN_OR_RETURN(const Eigen::MatrixXd base, PredictChecked(model, x));
  const int p = static_cast<int>(x.cols());
  threads = direct_internal::EffectiveThreads(model, threads);
  std::vector<Eigen::MatrixXd> scratch(WorkerCount(p, threads));
  Eigen::VectorXd raw(p);
  DVI_RETURN_IF_ERROR(ParallelForWorkers(p, threads, [&](int j, int w) -> absl::Status {
    Eigen::MatrixXd& work = scratch[w];
    if (work.size() == 0) work = x;
    const Eigen::VectorXd moved = ApplyScheme(x.col(j), scheme);
    const Eigen::VectorXd delta = moved - x.col(j);
    work.col(j) = moved;
    std::vector<int> touched = {j};
    for (int k = 0; k < p; ++k) {
      if (!graph.Linked(k, j)) continue;
      work.col(k) = x.col(k) + graph.matrix(k, j) * delta;
      touched.push_back(k);
    }
    auto pred = PredictChecked(model, work);
    for (int k : touched) work.col(k) = x.col(k);
    if (!pred.ok()) return pred.status();
    raw[j] = direct_internal::PredictionDifference(base, *pred, metric);
    return absl::OkStatus();
  }));
  return raw;
}

// Report whose normalized scores are the systemic ones, with s, d and i.
inline absl::StatusOr<ImportanceReport> SystemicScores(
    const Predictor& model, const DataMatrix& x, Metric metric, Scheme scheme,
    const CorrelationGraph& graph, int threads = 1) {
  DVI_ASSIGN_OR_RETURN(Eigen::VectorXd raw,
                       SystemicRawScores(model, x.values(), metric, scheme, graph, threads));
  DVI_ASSIGN_OR_RETURN(Eigen::VectorXd direct_raw,
                       DirectRawScores(model, x.values(), metric, scheme, threads));
  DVI_ASSIGN_OR_RETURN(Eigen::VectorXd s, NormalizeScores(raw));
  DVI_ASSIGN_OR_RETURN(Eigen::VectorXd d, NormalizeScores(direct_raw));
  SystemicDecomposition dec{s, d, s - d};
  Provenance prov;
  prov.seeds = {graph.seed};
  prov.repetitions = 1;
  return ImportanceReport::Create(SchemeMethod(scheme), metric, x.names(),
                                  std::move(raw), std::move(s), std::move(dec),
                                  std::move(prov));
}

// ---------------------------------------------------------------------------
// Audits.

struct AuditResult {
  std::string feature;
  double systemic = 0.0;
  double direct = 0.0;
  double indirect = 0.0;
  std::vector<std::pair<std::string, double>> proxies;
  // Share of the reference scores held by the feature and its proxies.
  double proxy_influenced_share = 0.0;
};

// `reference` defaults to the direct scores of the report.
inline absl::StatusOr<AuditResult> AuditFromReport(
    const ImportanceReport& report, const CorrelationGraph& graph,
    const std::string& feature,
    const std::optional<Eigen::VectorXd>& reference = std::nullopt) {
  if (!report.systemic().has_value()) {
    return absl::InvalidArgumentError("report has no systemic decomposition");
  }
  const auto& names = report.feature_names();
  const auto it = std::find(names.begin(), names.end(), feature);
  if (it == names.end()) {
    return WithKind(absl::NotFoundError(absl::StrCat("unknown feature '", feature, "'")),
                    ErrorKind::kConfig);
  }
  if (graph.p() != report.p()) {
    return absl::InvalidArgumentError("graph and report sizes differ");
  }
  const int j = static_cast<int>(it - names.begin());
  const auto& dec = *report.systemic();
  const Eigen::VectorXd& ref = reference.has_value() ? *reference : dec.direct;
  if (ref.size() != report.p()) {
    return absl::InvalidArgumentError("reference scores have the wrong length");
  }
  AuditResult out;
  out.feature = feature;
  out.systemic = dec.systemic[j];
  out.direct = dec.direct[j];
  out.indirect = dec.indirect[j];
  double share = ref[j];
  double total = 0.0;
  for (int k = 0; k < report.p(); ++k) {
    total += ref[k];
    if (!graph.Linked(k, j)) continue;
    out.proxies.emplace_back(names[k], graph.matrix(k, j));
    share += ref[k];
  }
  out.proxy_influenced_share = total > 0.0 ? share / total : 0.0;
  return out;
}

inline absl::StatusOr<AuditResult> AuditFeature(
    const Predictor& model, const DataMatrix& x, const CorrelationGraph& graph,
    const std::string& feature, Metric metric = Metric::kMse,
    Scheme scheme = Scheme::kOptimal,
    const std::optional<Eigen::VectorXd>& ground_truth = std::nullopt,
    int threads = 1) {
  if (!x.FindFeature(feature).has_value()) {
    return WithKind(absl::NotFoundError(absl::StrCat("unknown feature '", feature, "'")),
                    ErrorKind::kConfig);
  }
  DVI_ASSIGN_OR_RETURN(ImportanceReport report,
                       SystemicScores(model, x, metric, scheme, graph, threads));
  return AuditFromReport(report, graph, feature, ground_truth);
}

// p x p matrix with a header row and a leading name column.
inline void WriteCorrelationCsv(std::ostream& out, const Eigen::MatrixXd& m,
                                const std::vector<std::string>& names) {
  out << "feature";
  for (const auto& n : names) out << ',' << CsvField(n);
  out << '\n';
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    out << CsvField(names[a]);
    for (Eigen::Index b = 0; b < m.cols(); ++b) out << ',' << FormatDouble(m(a, b));
    out << '\n';
  }
}

inline void WriteEdgeCsv(std::ostream& out, const CorrelationGraph& g) {
  out << "feature_a,feature_b,rho\n";
  for (const auto& e : g.edges) {
    out << CsvField(g.names[e.a]) << ',' << CsvField(g.names[e.b]) << ','
        << FormatDouble(e.rho) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Cross-validated systemic importance.

struct SystemicCvOptions {
  int folds = 10;
  uint64_t fold_seed = 0;
  double alpha = kDefaultAlpha;
  uint64_t calibration_seed = kDefaultCalibrationSeed;
  Metric metric = Metric::kMse;
  Scheme scheme = Scheme::kOptimal;
  int threads = 1;
  // Compute rho on the held-out fold instead of the training folds. tau is
  // always calibrated on the training folds.
  bool test_correlations = false;
};

struct SystemicCvResult {
  ImportanceReport report;             // fold averages of s, d, i
  std::vector<double> taus;            // one per fold
  std::vector<ImportanceReport> folds;
  std::vector<CorrelationGraph> graphs;
};

// fit(x_train, y_train) -> absl::StatusOr<std::unique_ptr<Predictor>>.
template <typename Fit>
absl::StatusOr<SystemicCvResult> CrossValidatedSystemic(const Dataset& data, Fit fit,
                                                        const SystemicCvOptions& options) {
  DVI_ASSIGN_OR_RETURN(const FoldPlan plan,
                       KFold(data.x.n(), options.folds, options.fold_seed));
  const int p = data.x.p();
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(p);
  std::vector<double> taus;
  std::vector<ImportanceReport> reports;
  std::vector<CorrelationGraph> graphs;
  for (int f = 0; f < plan.k; ++f) {
    DVI_ASSIGN_OR_RETURN(const DataMatrix x_train, data.x.Rows(plan.TrainRows(f)));
    DVI_ASSIGN_OR_RETURN(const DataMatrix x_test, data.x.Rows(plan.TestRows(f)));
    const TargetVector y_train = data.y.Rows(plan.TrainRows(f));
    DVI_ASSIGN_OR_RETURN(std::unique_ptr<Predictor> model, fit(x_train, y_train));
    DVI_ASSIGN_OR_RETURN(CorrelationGraph graph,
                         BuildGraph(x_train, options.alpha, options.calibration_seed));
    if (options.test_correlations) {
      DVI_ASSIGN_OR_RETURN(Eigen::MatrixXd m,
                           SpearmanMatrix(x_test.values(), &graph.warnings, x_test.names()));
      DVI_ASSIGN_OR_RETURN(CorrelationGraph test_graph,
                           GraphFromMatrix(std::move(m), graph.tau, graph.names));
      test_graph.alpha = graph.alpha;
      test_graph.seed = graph.seed;
      test_graph.warnings = std::move(graph.warnings);
      graph = std::move(test_graph);
    }
    DVI_ASSIGN_OR_RETURN(ImportanceReport report,
                         SystemicScores(*model, x_test, options.metric, options.scheme,
                                        graph, options.threads));
    raw += report.raw();
    s += report.systemic()->systemic;
    d += report.systemic()->direct;
    taus.push_back(graph.tau);
    reports.push_back(std::move(report));
    graphs.push_back(std::move(graph));
  }
  raw /= plan.k;
  s /= plan.k;
  d /= plan.k;
  SystemicDecomposition dec{s, d, s - d};
  Provenance prov;
  prov.seeds = {options.fold_seed, options.calibration_seed};
  prov.repetitions = plan.k;
  DVI_ASSIGN_OR_RETURN(ImportanceReport avg,
                       ImportanceReport::Create(SchemeMethod(options.scheme), options.metric,
                                                data.x.names(), std::move(raw), s,
                                                std::move(dec), std::move(prov)));
  return SystemicCvResult{std::move(avg), std::move(taus), std::move(reports),
                          std::move(graphs)};
}

}  // namespace dvi

#endif  // DVI_SYSTEMIC_H_

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
#ifndef DVI_REPORT_IO_H_
#define DVI_REPORT_IO_H_

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/match.h"
#include "absl/strings/str_join.h"
#include "dvi/data.h"
#include "dvi/direct.h"
#include "dvi/format.h"
#include "dvi/simulation.h"
#include "dvi/status.h"
#include "dvi/systemic.h"
#include "nlohmann/json.hpp"

namespace dvi {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

namespace io_internal {

inline Json VectorJson(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline absl::StatusOr<Eigen::VectorXd> JsonVector(const Json& j, size_t expected) {
  if (!j.is_array() || j.size() != expected) {
    return absl::InvalidArgumentError("array has the wrong length");
  }
  Eigen::VectorXd v(expected);
  for (size_t i = 0; i < expected; ++i) {
    if (!j[i].is_number()) return absl::InvalidArgumentError("array entry is not a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

template <typename T>
std::optional<T> FindEnum(const std::string& name, std::initializer_list<T> values,
                          const char* (*to_name)(T)) {
  for (T v : values) {
    if (absl::EqualsIgnoreCase(name, to_name(v))) return v;
  }
  return std::nullopt;
}

}  // namespace io_internal

inline std::optional<Method> ParseMethod(const std::string& s) {
  return io_internal::FindEnum(
      s, {Method::kDirectOpt, Method::kDirectApprox, Method::kBreiman}, &MethodName);
}

inline std::optional<Metric> ParseMetric(const std::string& s) {
  return io_internal::FindEnum(s,
                               {Metric::kMae, Metric::kMse, Metric::kRmse,
                                Metric::kNegBrierDrop, Metric::kMseDrop,
                                Metric::kAccuracyDrop},
                               &MetricName);
}

// ---------------------------------------------------------------------------
// Importance reports.

// Column-oriented: one array per score kind, aligned with "features".
inline Json ReportToJson(const ImportanceReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "importance";
  j["method"] = MethodName(r.method());
  j["metric"] = MetricName(r.metric());
  j["features"] = r.feature_names();
  j["raw"] = io_internal::VectorJson(r.raw());
  j["normalized"] = io_internal::VectorJson(r.normalized());
  if (r.systemic().has_value()) {
    j["systemic"] = io_internal::VectorJson(r.systemic()->systemic);
    j["direct"] = io_internal::VectorJson(r.systemic()->direct);
    j["indirect"] = io_internal::VectorJson(r.systemic()->indirect);
  }
  if (r.unclipped().size() > 0) j["unclipped"] = io_internal::VectorJson(r.unclipped());
  if (!r.inactive().empty()) {
    Json inactive = Json::array();
    for (bool b : r.inactive()) inactive.push_back(b);
    j["inactive"] = std::move(inactive);
  }
  const Provenance& prov = r.provenance();
  Json p;
  p["seeds"] = prov.seeds;
  p["repetitions"] = prov.repetitions;
  if (!prov.timestamp.empty()) p["timestamp"] = prov.timestamp;
  if (prov.runtime_ms > 0.0) p["runtime_ms"] = prov.runtime_ms;
  j["provenance"] = std::move(p);
  return j;
}

inline absl::StatusOr<ImportanceReport> ReportFromJson(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() > kSchemaVersion) {
      return absl::InvalidArgumentError("report uses a newer schema version");
    }
    const auto method = ParseMethod(j.at("method").get<std::string>());
    const auto metric = ParseMetric(j.at("metric").get<std::string>());
    if (!method || !metric) return absl::InvalidArgumentError("unknown method or metric");
    auto names = j.at("features").get<std::vector<std::string>>();
    const size_t p = names.size();
    DVI_ASSIGN_OR_RETURN(Eigen::VectorXd raw, io_internal::JsonVector(j.at("raw"), p));
    DVI_ASSIGN_OR_RETURN(Eigen::VectorXd norm,
                         io_internal::JsonVector(j.at("normalized"), p));
    std::optional<SystemicDecomposition> dec;
    if (j.contains("systemic")) {
      SystemicDecomposition d;
      DVI_ASSIGN_OR_RETURN(d.systemic, io_internal::JsonVector(j.at("systemic"), p));
      DVI_ASSIGN_OR_RETURN(d.direct, io_internal::JsonVector(j.at("direct"), p));
      DVI_ASSIGN_OR_RETURN(d.indirect, io_internal::JsonVector(j.at("indirect"), p));
      dec = std::move(d);
    }
    Provenance prov;
    const Json& pj = j.at("provenance");
    prov.seeds = pj.at("seeds").get<std::vector<uint64_t>>();
    prov.repetitions = pj.at("repetitions").get<int>();
    prov.timestamp = pj.value("timestamp", std::string());
    prov.runtime_ms = pj.value("runtime_ms", 0.0);
    DVI_ASSIGN_OR_RETURN(ImportanceReport r,
                         ImportanceReport::Create(*method, *metric, std::move(names),
                                                  std::move(raw), std::move(norm),
                                                  std::move(dec), std::move(prov)));
    if (j.contains("unclipped")) {
      DVI_ASSIGN_OR_RETURN(Eigen::VectorXd u, io_internal::JsonVector(j.at("unclipped"), p));
      r.set_unclipped(std::move(u));
    }
    if (j.contains("inactive")) r.set_inactive(j.at("inactive").get<std::vector<bool>>());
    return r;
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("malformed report: ", e.what()));
  }
}

// One row per feature.
inline void WriteReportCsv(std::ostream& out, const ImportanceReport& r) {
  const bool sys = r.systemic().has_value();
  const bool unclipped = r.unclipped().size() > 0;
  const bool inactive = !r.inactive().empty();
  out << "feature,method,metric,raw,normalized";
  if (sys) out << ",systemic,direct,indirect";
  if (unclipped) out << ",unclipped";
  if (inactive) out << ",inactive";
  out << '\n';
  for (int k = 0; k < r.p(); ++k) {
    out << CsvField(r.feature_names()[k]) << ',' << MethodName(r.method()) << ','
        << MetricName(r.metric()) << ',' << FormatDouble(r.raw()[k]) << ','
        << FormatDouble(r.normalized()[k]);
    if (sys) {
      out << ',' << FormatDouble(r.systemic()->systemic[k]) << ','
          << FormatDouble(r.systemic()->direct[k]) << ','
          << FormatDouble(r.systemic()->indirect[k]);
    }
    if (unclipped) out << ',' << FormatDouble(r.unclipped()[k]);
    if (inactive) out << ',' << (r.inactive()[k] ? 1 : 0);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Systemic extras.

inline std::string ToleranceQuantileLabel(double alpha) {
  return absl::StrCat("tolerance quantile: ", FormatDouble(1.0 - alpha));
}

inline Json GraphToJson(const CorrelationGraph& g) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "correlation_graph";
  j["header"] = ToleranceQuantileLabel(g.alpha);
  j["correlation"] = "spearman";
  j["alpha"] = g.alpha;
  j["calibration_seed"] = g.seed;
  j["tau"] = g.tau;
  Json edges = Json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"a", g.names[e.a]}, {"b", g.names[e.b]}, {"rho", e.rho}});
  }
  j["edges"] = std::move(edges);
  if (!g.warnings.empty()) j["warnings"] = g.warnings;
  return j;
}

inline Json AuditToJson(const AuditResult& a) {
  Json j;
  j["feature"] = a.feature;
  j["systemic"] = a.systemic;
  j["direct"] = a.direct;
  j["indirect"] = a.indirect;
  Json proxies = Json::array();
  for (const auto& [name, rho] : a.proxies) proxies.push_back({{"feature", name}, {"rho", rho}});
  j["proxies"] = std::move(proxies);
  j["proxy_influenced_share"] = a.proxy_influenced_share;
  return j;
}

inline Json DominanceToJson(const DominanceCheck& d, const std::vector<std::string>& names) {
  Json j;
  j["B"] = d.B;
  j["features"] = names;
  j["deterministic"] = io_internal::VectorJson(d.deterministic);
  j["mc_mean"] = io_internal::VectorJson(d.mc_mean);
  j["mc_variance"] = io_internal::VectorJson(d.mc_variance);
  j["lhs"] = d.lhs;
  j["rhs_literal"] = d.rhs_literal;
  j["rhs_consistent"] = d.rhs_consistent;
  j["verdict_literal"] = d.verdict_literal;
  j["verdict_consistent"] = d.verdict_consistent;
  return j;
}

// ---------------------------------------------------------------------------
// Benchmark tables.

inline void WriteScenarioColumns(std::ostream& out, const ScenarioResult& r) {
  const ScenarioSpec& s = r.spec;
  out << r.index << ',' << s.n << ',' << s.p << ',' << FormatDouble(s.sigma_eps) << ','
      << FormatDouble(s.rho) << ',' << ResponseName(s.response) << ','
      << TaskName(s.task) << ',' << MasterName(s.master) << ',' << s.reps << ','
      << s.base_seed;
}

inline constexpr const char* kScenarioHeader =
    "scenario,n,p,sigma_eps,rho,response,task,master,reps,base_seed";

// Tidy rows: scenario x method x metric. Timing goes to a separate table so
// the accuracy table is reproducible byte for byte.
inline void WriteResultsCsv(std::ostream& out, const std::vector<ScenarioResult>& results,
                            bool timings) {
  out << kScenarioHeader << ",method,metric,mean,se,lower,upper,ok_reps,failed_reps\n";
  for (const auto& r : results) {
    for (BenchMethod m : kBenchMethods) {
      for (BenchMetric metric : kBenchMetrics) {
        if ((metric == BenchMetric::kRuntimeMs) != timings) continue;
        const AggregateStat a = r.Aggregate(m, metric);
        const int failed = r.Failures(m);
        WriteScenarioColumns(out, r);
        out << ',' << BenchMethodName(m) << ',' << BenchMetricName(metric) << ','
            << FormatDouble(a.mean) << ',' << FormatDouble(a.combined_se) << ','
            << FormatDouble(a.lower()) << ',' << FormatDouble(a.upper()) << ','
            << r.spec.reps - failed << ',' << failed << '\n';
      }
    }
  }
}

// Grouped like the result tables: one table per (task, response), one row per
// (master, method), each metric combined across the group's scenarios.
inline Json SummaryJson(const std::vector<ScenarioResult>& results, bool with_timing) {
  std::map<std::pair<int, int>, std::vector<const ScenarioResult*>> groups;
  for (const auto& r : results) {
    groups[{static_cast<int>(r.spec.task), static_cast<int>(r.spec.response)}].push_back(&r);
  }
  Json tables = Json::array();
  for (const auto& [key, members] : groups) {
    Json table;
    table["task"] = TaskName(static_cast<Task>(key.first));
    table["response"] = ResponseName(static_cast<ResponseKind>(key.second));
    table["scenarios"] = members.size();
    Json rows = Json::array();
    for (MasterKind master : {MasterKind::kUnregularized, MasterKind::kL1}) {
      std::vector<ScenarioResult> subset;
      for (const auto* r : members) {
        if (r->spec.master == master) subset.push_back(*r);
      }
      if (subset.empty()) continue;
      for (BenchMethod m : kBenchMethods) {
        Json row;
        row["master"] = MasterName(master);
        row["method"] = BenchMethodName(m);
        row["scenarios"] = subset.size();
        for (BenchMetric metric : kBenchMetrics) {
          if (metric == BenchMetric::kRuntimeMs && !with_timing) continue;
          auto a = AggregateScenarios(subset, m, metric);
          if (!a.ok()) {
            row[BenchMetricName(metric)] = nullptr;
            continue;
          }
          row[BenchMetricName(metric)] = {{"mean", a->mean},
                                          {"se", a->combined_se},
                                          {"lower", a->lower()},
                                          {"upper", a->upper()}};
        }
        rows.push_back(std::move(row));
      }
    }
    table["rows"] = std::move(rows);
    tables.push_back(std::move(table));
  }
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "benchmark_summary";
  j["tables"] = std::move(tables);
  return j;
}

// ---------------------------------------------------------------------------
// Flicker histograms.

inline std::string TupleText(const std::vector<int>& t) {
  return absl::StrCat("[", absl::StrJoin(t, " "), "]");
}

inline void WriteFlickerCsv(std::ostream& out, const std::vector<FlickerResult>& results,
                            const std::vector<std::string>& names) {
  out << "method,top_k_indices,top_k_features,count,distinct\n";
  for (const auto& r : results) {
    for (const auto& [tuple, count] : r.histogram) {
      std::vector<std::string> labels;
      for (int i : tuple) labels.push_back(i < static_cast<int>(names.size()) ? names[i] : "?");
      out << r.method << ',' << TupleText(tuple) << ','
          << CsvField(absl::StrJoin(labels, " ")) << ',' << count << ',' << r.distinct()
          << '\n';
    }
  }
}

}  // namespace dvi

#endif  // DVI_REPORT_IO_H_

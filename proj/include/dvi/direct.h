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
#ifndef DVI_DIRECT_H_
#define DVI_DIRECT_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dvi/data.h"
#include "dvi/parallel.h"
#include "dvi/permutation.h"
#include "dvi/predictors.h"
#include "dvi/rng.h"
#include "dvi/stats.h"
#include "dvi/status.h"

namespace dvi {

enum class Scheme { kOptimal, kApprox };

inline Method SchemeMethod(Scheme s) {
  return s == Scheme::kOptimal ? Method::kDirectOpt : Method::kDirectApprox;
}

inline Eigen::VectorXd ApplyScheme(const Eigen::VectorXd& column, Scheme s) {
  return s == Scheme::kOptimal ? ApplyRankShift(column) : ApplyIndexShift(column);
}

struct DirectOptions {
  Metric metric = Metric::kMae;
  Scheme scheme = Scheme::kOptimal;
  int threads = 1;
  // Disabled when unset.
  std::optional<double> prescreen_epsilon;
};

namespace direct_internal {

inline int EffectiveThreads(const Predictor& model, int threads) {
  return model.concurrent() ? threads : 1;
}

// Mean of d(base - moved) over all n*q entries; sqrt for RMSE.
inline double PredictionDifference(const Eigen::MatrixXd& base,
                                   const Eigen::MatrixXd& moved, Metric metric,
                                   double* max_abs = nullptr) {
  double total = 0.0;
  double largest = 0.0;
  for (Eigen::Index c = 0; c < base.cols(); ++c) {
    for (Eigen::Index i = 0; i < base.rows(); ++i) {
      const double diff = base(i, c) - moved(i, c);
      const double a = std::abs(diff);
      largest = std::max(largest, a);
      total += metric == Metric::kMae ? a : diff * diff;
    }
  }
  if (max_abs != nullptr) *max_abs = largest;
  const double mean = total / static_cast<double>(base.size());
  return metric == Metric::kRmse ? std::sqrt(mean) : mean;
}

// For every task t, replaces column feature_of(t) with column_of(t, original),
// predicts, and hands the predictions to consume(t, predictions). Each worker
// owns a scratch copy of x and restores the column afterwards.
template <typename FeatureOf, typename ColumnOf, typename Consume>
absl::Status ForEachPermutedPrediction(const Predictor& model,
                                       const Eigen::MatrixXd& x, int tasks,
                                       int threads, FeatureOf feature_of,
                                       ColumnOf column_of, Consume consume) {
  threads = EffectiveThreads(model, threads);
  std::vector<Eigen::MatrixXd> scratch(WorkerCount(tasks, threads));
  return ParallelForWorkers(tasks, threads, [&](int t, int w) -> absl::Status {
    Eigen::MatrixXd& work = scratch[w];
    if (work.size() == 0) work = x;
    const int k = feature_of(t);
    const Eigen::VectorXd original = x.col(k);
    work.col(k) = column_of(t, original);
    auto pred = PredictChecked(model, work);
    work.col(k) = original;
    if (!pred.ok()) return pred.status();
    return consume(t, *pred);
  });
}

struct FeatureEffect {
  double score = 0.0;
  double max_abs_change = 0.0;
};

inline absl::StatusOr<std::vector<FeatureEffect>> DeterministicEffects(
    const Predictor& model, const Eigen::MatrixXd& x, Metric metric,
    Scheme scheme, int threads) {
  if (!IsPredictionDifferenceMetric(metric)) {
    return WithKind(absl::InvalidArgumentError(absl::StrCat(
                        "metric ", MetricName(metric),
                        " is not a prediction-difference metric")),
                    ErrorKind::kConfig);
  }
  if (x.rows() < 2 || x.cols() < 1) {
    return absl::InvalidArgumentError("evaluation matrix is empty");
  }
  DVI_ASSIGN_OR_RETURN(const Eigen::MatrixXd base, PredictChecked(model, x));
  const int p = static_cast<int>(x.cols());
  std::vector<FeatureEffect> effects(p);
  DVI_RETURN_IF_ERROR(ForEachPermutedPrediction(
      model, x, p, threads, [](int t) { return t; },
      [&](int, const Eigen::VectorXd& col) { return ApplyScheme(col, scheme); },
      [&](int t, const Eigen::MatrixXd& pred) {
        effects[t].score =
            PredictionDifference(base, pred, metric, &effects[t].max_abs_change);
        return absl::OkStatus();
      }));
  return effects;
}

}  // namespace direct_internal

// Unnormalized direct scores (one deterministic permutation per feature).
inline absl::StatusOr<Eigen::VectorXd> DirectRawScores(const Predictor& model,
                                                       const Eigen::MatrixXd& x,
                                                       Metric metric,
                                                       Scheme scheme,
                                                       int threads = 1) {
  DVI_ASSIGN_OR_RETURN(auto effects, direct_internal::DeterministicEffects(
                                         model, x, metric, scheme, threads));
  Eigen::VectorXd raw(effects.size());
  for (size_t k = 0; k < effects.size(); ++k) raw[k] = effects[k].score;
  return raw;
}

// raw / sum(raw); degenerate when every score is zero.
inline absl::StatusOr<Eigen::VectorXd> NormalizeScores(const Eigen::VectorXd& raw) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < raw.size(); ++k) total += raw[k];
  if (!(total > 0.0) || !std::isfinite(total)) {
    return DegenerateError("every feature has zero direct importance");
  }
  return Eigen::VectorXd(raw / total);
}

// inactive[k] is true when permuting feature k moves no prediction by more
// than epsilon.
inline absl::StatusOr<std::vector<bool>> Prescreen(const Predictor& model,
                                                   const Eigen::MatrixXd& x,
                                                   double epsilon,
                                                   Scheme scheme = Scheme::kOptimal,
                                                   int threads = 1) {
  if (!(epsilon >= 0.0)) {
    return WithKind(absl::InvalidArgumentError("prescreen epsilon must be >= 0"),
                    ErrorKind::kConfig);
  }
  DVI_ASSIGN_OR_RETURN(auto effects, direct_internal::DeterministicEffects(
                                         model, x, Metric::kMae, scheme, threads));
  std::vector<bool> inactive(effects.size());
  for (size_t k = 0; k < effects.size(); ++k) {
    inactive[k] = effects[k].max_abs_change <= epsilon;
  }
  return inactive;
}

inline absl::StatusOr<ImportanceReport> DirectScores(const Predictor& model,
                                                     const DataMatrix& x,
                                                     const DirectOptions& options = {}) {
  if (options.prescreen_epsilon.has_value() && !(*options.prescreen_epsilon >= 0.0)) {
    return WithKind(absl::InvalidArgumentError("prescreen epsilon must be >= 0"),
                    ErrorKind::kConfig);
  }
  DVI_ASSIGN_OR_RETURN(auto effects,
                       direct_internal::DeterministicEffects(
                           model, x.values(), options.metric, options.scheme,
                           options.threads));
  Eigen::VectorXd raw(effects.size());
  std::vector<bool> inactive;
  for (size_t k = 0; k < effects.size(); ++k) raw[k] = effects[k].score;
  if (options.prescreen_epsilon.has_value()) {
    inactive.resize(effects.size());
    for (size_t k = 0; k < effects.size(); ++k) {
      inactive[k] = effects[k].max_abs_change <= *options.prescreen_epsilon;
      if (inactive[k]) raw[k] = 0.0;
    }
  }
  DVI_ASSIGN_OR_RETURN(Eigen::VectorXd normalized, NormalizeScores(raw));
  Provenance prov;
  prov.repetitions = 1;
  DVI_ASSIGN_OR_RETURN(
      ImportanceReport report,
      ImportanceReport::Create(SchemeMethod(options.scheme), options.metric,
                               x.names(), raw, std::move(normalized),
                               std::nullopt, std::move(prov)));
  if (!inactive.empty()) report.set_inactive(std::move(inactive));
  return report;
}

// ---------------------------------------------------------------------------
// Random-permutation baseline.

// Seed of the permutation used for (feature, repetition).
inline uint64_t PermutationSeed(uint64_t seed, int feature, int rep) {
  return StreamSeed(seed, static_cast<uint64_t>(feature),
                    static_cast<uint64_t>(rep));
}

inline absl::StatusOr<double> PerformanceLoss(const Eigen::MatrixXd& pred,
                                              const TargetVector& y,
                                              Metric metric) {
  if (y.task() == Task::kRegression) {
    if (metric != Metric::kMseDrop) {
      return WithKind(absl::InvalidArgumentError(absl::StrCat(
                          MetricName(metric), " needs a classification target")),
                      ErrorKind::kConfig);
    }
    if (pred.cols() != 1) {
      return WithKind(absl::InvalidArgumentError(
                          "regression target needs a single-output model"),
                      ErrorKind::kConfig);
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double e = y.values()[i] - pred(i, 0);
      total += e * e;
    }
    return total / static_cast<double>(pred.rows());
  }
  if (pred.cols() != y.n_classes()) {
    return WithKind(absl::InvalidArgumentError(absl::StrCat(
                        "model returns ", pred.cols(), " columns for ",
                        y.n_classes(), " classes")),
                    ErrorKind::kConfig);
  }
  std::vector<int> labels(y.n());
  for (int i = 0; i < y.n(); ++i) labels[i] = y.label(i);
  switch (metric) {
    case Metric::kMseDrop:
    case Metric::kNegBrierDrop:
      return BrierScore(pred, labels);
    case Metric::kAccuracyDrop:
      return 1.0 - Accuracy(pred, labels);
    default:
      return WithKind(absl::InvalidArgumentError(absl::StrCat(
                          MetricName(metric), " is not a performance metric")),
                      ErrorKind::kConfig);
  }
}

// drops(k, b) = loss after the b-th random permutation of feature k minus the
// unpermuted loss.
inline absl::StatusOr<Eigen::MatrixXd> BreimanDrops(const Predictor& model,
                                                    const Eigen::MatrixXd& x,
                                                    const TargetVector& y, int B,
                                                    uint64_t seed, Metric metric,
                                                    int threads = 1) {
  if (B < 1) {
    return WithKind(absl::InvalidArgumentError("repetitions must be >= 1"),
                    ErrorKind::kConfig);
  }
  if (y.n() != x.rows()) {
    return WithKind(absl::InvalidArgumentError("target length differs from rows"),
                    ErrorKind::kConfig);
  }
  DVI_ASSIGN_OR_RETURN(const Eigen::MatrixXd base, PredictChecked(model, x));
  DVI_ASSIGN_OR_RETURN(const double base_loss, PerformanceLoss(base, y, metric));
  const int p = static_cast<int>(x.cols());
  Eigen::MatrixXd drops(p, B);
  DVI_RETURN_IF_ERROR(direct_internal::ForEachPermutedPrediction(
      model, x, p * B, threads, [B](int t) { return t / B; },
      [&](int t, const Eigen::VectorXd& col) {
        return ApplyRandom(col, PermutationSeed(seed, t / B, t % B));
      },
      [&](int t, const Eigen::MatrixXd& pred) -> absl::Status {
        DVI_ASSIGN_OR_RETURN(const double loss, PerformanceLoss(pred, y, metric));
        drops(t / B, t % B) = loss - base_loss;
        return absl::OkStatus();
      }));
  return drops;
}

inline absl::StatusOr<ImportanceReport> BreimanScores(
    const Predictor& model, const DataMatrix& x, const TargetVector& y, int B,
    uint64_t seed, Metric metric = Metric::kMseDrop, int threads = 1) {
  DVI_ASSIGN_OR_RETURN(Eigen::MatrixXd drops,
                       BreimanDrops(model, x.values(), y, B, seed, metric, threads));
  Eigen::VectorXd mean(drops.rows());
  for (Eigen::Index k = 0; k < drops.rows(); ++k) {
    double total = 0.0;
    for (Eigen::Index b = 0; b < drops.cols(); ++b) total += drops(k, b);
    mean[k] = total / static_cast<double>(B);
  }
  DVI_ASSIGN_OR_RETURN(Eigen::VectorXd normalized, ClipAndNormalize(mean));
  Provenance prov;
  prov.seeds = {seed};
  prov.repetitions = B;
  DVI_ASSIGN_OR_RETURN(
      ImportanceReport report,
      ImportanceReport::Create(Method::kBreiman, metric, x.names(),
                               mean.cwiseMax(0.0), std::move(normalized),
                               std::nullopt, std::move(prov)));
  report.set_unclipped(std::move(mean));
  return report;
}

// ---------------------------------------------------------------------------
// Deterministic vs Monte Carlo decision check.

struct DominanceCheck {
  int B = 0;
  Eigen::VectorXd deterministic;  // raw direct scores
  Eigen::VectorXd mc_mean;        // mean of g over B random permutations
  Eigen::VectorXd mc_variance;    // per-feature sample variance (B - 1)
  double lhs = 0.0;               // squared distance of the two estimates
  double rhs_literal = 0.0;       // squared norm of the variance vector / B
  double rhs_consistent = 0.0;    // summed variance / B
  bool verdict_literal = false;
  bool verdict_consistent = false;
};

inline absl::StatusOr<DominanceCheck> RunDominanceCheck(
    const Predictor& model, const Eigen::MatrixXd& x, Metric metric, int B,
    uint64_t seed, Scheme scheme = Scheme::kOptimal, int threads = 1) {
  if (B < 2) {
    return WithKind(
        absl::InvalidArgumentError("dominance check needs at least 2 repetitions"),
        ErrorKind::kConfig);
  }
  DVI_ASSIGN_OR_RETURN(Eigen::VectorXd det,
                       DirectRawScores(model, x, metric, scheme, threads));
  DVI_ASSIGN_OR_RETURN(const Eigen::MatrixXd base, PredictChecked(model, x));
  const int p = static_cast<int>(x.cols());
  Eigen::MatrixXd g(p, B);
  DVI_RETURN_IF_ERROR(direct_internal::ForEachPermutedPrediction(
      model, x, p * B, threads, [B](int t) { return t / B; },
      [&](int t, const Eigen::VectorXd& col) {
        return ApplyRandom(col, PermutationSeed(seed, t / B, t % B));
      },
      [&](int t, const Eigen::MatrixXd& pred) {
        g(t / B, t % B) = direct_internal::PredictionDifference(base, pred, metric);
        return absl::OkStatus();
      }));

  DominanceCheck out;
  out.B = B;
  out.deterministic = det;
  out.mc_mean.resize(p);
  out.mc_variance.resize(p);
  double var_sum = 0.0;
  double var_sq_sum = 0.0;
  for (int k = 0; k < p; ++k) {
    std::vector<double> row(B);
    for (int b = 0; b < B; ++b) row[b] = g(k, b);
    out.mc_mean[k] = Mean(row);
    out.mc_variance[k] = SampleVariance(row);
    const double d = det[k] - out.mc_mean[k];
    out.lhs += d * d;
    var_sum += out.mc_variance[k];
    var_sq_sum += out.mc_variance[k] * out.mc_variance[k];
  }
  out.rhs_literal = var_sq_sum / B;
  out.rhs_consistent = var_sum / B;
  out.verdict_literal = out.lhs < out.rhs_literal;
  out.verdict_consistent = out.lhs < out.rhs_consistent;
  return out;
}

}  // namespace dvi

#endif  // DVI_DIRECT_H_

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

// Core containers shared by every module: the feature matrix, the target,
// importance reports, and fold plans.

#ifndef DVI_DATA_H_
#define DVI_DATA_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dvi/rng.h"
#include "dvi/status.h"

namespace dvi {

// Absolute tolerance for every "sums to one" / "sums to zero" check.
inline constexpr double kNormalizationTolerance = 1e-9;

enum class FeatureKind { kNumeric, kBinary, kOrdinal };

inline const char* FeatureKindName(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kNumeric:
      return "numeric";
    case FeatureKind::kBinary:
      return "binary";
    case FeatureKind::kOrdinal:
      return "ordinal";
  }
  return "numeric";
}

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Category labels in code order, for ordinal-encoded text columns.
  std::vector<std::string> categories;
};

// An n x p matrix of finite reals with named features. Immutable once built.
class DataMatrix {
 public:
  static absl::StatusOr<DataMatrix> Create(Eigen::MatrixXd values,
                                           std::vector<FeatureMeta> features) {
    if (values.cols() < 1) {
      return absl::InvalidArgumentError("data matrix needs at least 1 feature");
    }
    if (values.rows() < 2) {
      return absl::InvalidArgumentError("data matrix needs at least 2 rows");
    }
    if (static_cast<Eigen::Index>(features.size()) != values.cols()) {
      return absl::InvalidArgumentError(
          absl::StrCat("got ", features.size(), " feature names for ",
                       values.cols(), " columns"));
    }
    std::set<std::string> seen;
    for (const auto& f : features) {
      if (!seen.insert(f.name).second) {
        return absl::InvalidArgumentError(
            absl::StrCat("duplicate feature name '", f.name, "'"));
      }
    }
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      for (Eigen::Index i = 0; i < values.rows(); ++i) {
        if (!std::isfinite(values(i, j))) {
          return absl::OutOfRangeError(
              absl::StrCat("non-finite value at row ", i, ", feature '",
                           features[j].name, "'"));
        }
      }
    }
    return DataMatrix(std::move(values), std::move(features));
  }

  // Unnamed features are called x1..xp.
  static absl::StatusOr<DataMatrix> Create(Eigen::MatrixXd values) {
    std::vector<FeatureMeta> features(values.cols());
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      features[j].name = absl::StrCat("x", j + 1);
    }
    return Create(std::move(values), std::move(features));
  }

  const Eigen::MatrixXd& values() const { return values_; }
  int n() const { return static_cast<int>(values_.rows()); }
  int p() const { return static_cast<int>(values_.cols()); }
  const std::vector<FeatureMeta>& features() const { return features_; }
  const FeatureMeta& feature(int j) const { return features_[j]; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(features_.size());
    for (const auto& f : features_) out.push_back(f.name);
    return out;
  }

  std::optional<int> FindFeature(const std::string& name) const {
    for (int j = 0; j < p(); ++j) {
      if (features_[j].name == name) return j;
    }
    return std::nullopt;
  }

  absl::StatusOr<DataMatrix> Rows(const std::vector<int>& rows) const {
    Eigen::MatrixXd sub(rows.size(), values_.cols());
    for (size_t r = 0; r < rows.size(); ++r) sub.row(r) = values_.row(rows[r]);
    return Create(std::move(sub), features_);
  }

  absl::StatusOr<DataMatrix> DropFeature(int j) const {
    Eigen::MatrixXd sub(values_.rows(), values_.cols() - 1);
    std::vector<FeatureMeta> meta;
    for (int k = 0, c = 0; k < p(); ++k) {
      if (k == j) continue;
      sub.col(c++) = values_.col(k);
      meta.push_back(features_[k]);
    }
    return Create(std::move(sub), std::move(meta));
  }

 private:
  DataMatrix(Eigen::MatrixXd values, std::vector<FeatureMeta> features)
      : values_(std::move(values)), features_(std::move(features)) {}

  Eigen::MatrixXd values_;
  std::vector<FeatureMeta> features_;
};

enum class Task { kRegression, kClassification };

class TargetVector {
 public:
  static absl::StatusOr<TargetVector> Regression(Eigen::VectorXd values) {
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        return absl::OutOfRangeError(
            absl::StrCat("non-finite target at row ", i));
      }
    }
    return TargetVector(std::move(values), Task::kRegression, 0);
  }

  // Labels must be integers covering 0..C-1 with every class present.
  static absl::StatusOr<TargetVector> Classification(Eigen::VectorXd labels) {
    int max_label = -1;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
      const double v = labels[i];
      if (!std::isfinite(v) || v < 0 || v != std::floor(v)) {
        return absl::InvalidArgumentError(
            absl::StrCat("class label at row ", i, " is not a nonnegative integer"));
      }
      max_label = std::max(max_label, static_cast<int>(v));
    }
    std::vector<bool> present(max_label + 1, false);
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
      present[static_cast<int>(labels[i])] = true;
    }
    for (int c = 0; c <= max_label; ++c) {
      if (!present[c]) {
        return absl::InvalidArgumentError(
            absl::StrCat("class labels must cover 0..", max_label,
                         " but class ", c, " is absent"));
      }
    }
    if (max_label < 1) {
      return absl::InvalidArgumentError("classification needs at least 2 classes");
    }
    return TargetVector(std::move(labels), Task::kClassification, max_label + 1);
  }

  const Eigen::VectorXd& values() const { return values_; }
  int n() const { return static_cast<int>(values_.size()); }
  Task task() const { return task_; }
  int n_classes() const { return n_classes_; }
  int label(int i) const { return static_cast<int>(values_[i]); }

  TargetVector Rows(const std::vector<int>& rows) const {
    Eigen::VectorXd sub(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) sub[r] = values_[rows[r]];
    return TargetVector(std::move(sub), task_, n_classes_);
  }

 private:
  TargetVector(Eigen::VectorXd values, Task task, int n_classes)
      : values_(std::move(values)), task_(task), n_classes_(n_classes) {}

  Eigen::VectorXd values_;
  Task task_;
  int n_classes_;
};

// max(raw, 0) / sum(max(raw, 0)).
inline absl::StatusOr<Eigen::VectorXd> ClipAndNormalize(
    const Eigen::VectorXd& raw) {
  if (raw.size() < 1) return absl::InvalidArgumentError("empty score vector");
  Eigen::VectorXd clipped = raw.cwiseMax(0.0);
  double total = 0.0;
  for (Eigen::Index j = 0; j < clipped.size(); ++j) total += clipped[j];
  if (!(total > 0.0) || !std::isfinite(total)) {
    return DegenerateError("all scores are nonpositive");
  }
  return Eigen::VectorXd(clipped / total);
}

enum class Method { kDirectOpt, kDirectApprox, kBreiman };

inline const char* MethodName(Method m) {
  switch (m) {
    case Method::kDirectOpt:
      return "direct-opt";
    case Method::kDirectApprox:
      return "direct-approx";
    case Method::kBreiman:
      return "breiman";
  }
  return "direct-opt";
}

enum class Metric { kMae, kMse, kRmse, kNegBrierDrop, kMseDrop, kAccuracyDrop };

inline const char* MetricName(Metric m) {
  switch (m) {
    case Metric::kMae:
      return "MAE";
    case Metric::kMse:
      return "MSE";
    case Metric::kRmse:
      return "RMSE";
    case Metric::kNegBrierDrop:
      return "neg-brier-drop";
    case Metric::kMseDrop:
      return "mse-drop";
    case Metric::kAccuracyDrop:
      return "accuracy-drop";
  }
  return "MSE";
}

inline bool IsPredictionDifferenceMetric(Metric m) {
  return m == Metric::kMae || m == Metric::kMse || m == Metric::kRmse;
}

struct SystemicDecomposition {
  Eigen::VectorXd systemic;  // s
  Eigen::VectorXd direct;    // d
  Eigen::VectorXd indirect;  // i = s - d
};

struct Provenance {
  std::vector<uint64_t> seeds;
  int repetitions = 0;  // B for Breiman, 1 for deterministic schemes
  std::string timestamp;
  double runtime_ms = 0.0;
};

// Per-feature importance scores. Invariants are checked by Create().
class ImportanceReport {
 public:
  static absl::StatusOr<ImportanceReport> Create(
      Method method, Metric metric, std::vector<std::string> feature_names,
      Eigen::VectorXd raw, Eigen::VectorXd normalized,
      std::optional<SystemicDecomposition> systemic = std::nullopt,
      Provenance provenance = {}) {
    const Eigen::Index p = raw.size();
    if (p < 1 || normalized.size() != p ||
        static_cast<Eigen::Index>(feature_names.size()) != p) {
      return absl::InvalidArgumentError("report vectors have mismatched lengths");
    }
    if (raw.minCoeff() < 0.0) {
      return absl::InvalidArgumentError("raw scores must be nonnegative");
    }
    DVI_RETURN_IF_ERROR(CheckSimplex(normalized, "normalized"));
    if (systemic.has_value()) {
      const auto& s = *systemic;
      if (s.systemic.size() != p || s.direct.size() != p ||
          s.indirect.size() != p) {
        return absl::InvalidArgumentError("systemic vectors have wrong length");
      }
      DVI_RETURN_IF_ERROR(CheckSimplex(s.systemic, "systemic"));
      DVI_RETURN_IF_ERROR(CheckSimplex(s.direct, "direct"));
      double indirect_sum = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (std::abs(s.systemic[j] - s.direct[j] - s.indirect[j]) >
            kNormalizationTolerance) {
          return absl::InternalError("systemic != direct + indirect");
        }
        indirect_sum += s.indirect[j];
      }
      if (std::abs(indirect_sum) > kNormalizationTolerance) {
        return absl::InternalError("indirect scores do not sum to zero");
      }
    }
    return ImportanceReport(method, metric, std::move(feature_names),
                            std::move(raw), std::move(normalized),
                            std::move(systemic), std::move(provenance));
  }

  Method method() const { return method_; }
  Metric metric() const { return metric_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const Eigen::VectorXd& raw() const { return raw_; }
  const Eigen::VectorXd& normalized() const { return normalized_; }
  const std::optional<SystemicDecomposition>& systemic() const {
    return systemic_;
  }
  const Provenance& provenance() const { return provenance_; }
  Provenance& mutable_provenance() { return provenance_; }
  int p() const { return static_cast<int>(raw_.size()); }

  // Breiman reports keep the signed performance drops before clipping.
  const Eigen::VectorXd& unclipped() const { return unclipped_; }
  void set_unclipped(Eigen::VectorXd v) { unclipped_ = std::move(v); }

  // Features found inactive by prescreening, if it ran.
  const std::vector<bool>& inactive() const { return inactive_; }
  void set_inactive(std::vector<bool> mask) { inactive_ = std::move(mask); }

 private:
  ImportanceReport(Method method, Metric metric, std::vector<std::string> names,
                   Eigen::VectorXd raw, Eigen::VectorXd normalized,
                   std::optional<SystemicDecomposition> systemic,
                   Provenance provenance)
      : method_(method),
        metric_(metric),
        names_(std::move(names)),
        raw_(std::move(raw)),
        normalized_(std::move(normalized)),
        systemic_(std::move(systemic)),
        provenance_(std::move(provenance)) {}

  static absl::Status CheckSimplex(const Eigen::VectorXd& v, const char* what) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (!(v[j] >= 0.0)) {
        return absl::InternalError(absl::StrCat(what, " score ", j, " is negative"));
      }
      total += v[j];
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      return absl::InternalError(
          absl::StrCat(what, " scores sum to ", total, ", not 1"));
    }
    return absl::OkStatus();
  }

  Method method_;
  Metric metric_;
  std::vector<std::string> names_;
  Eigen::VectorXd raw_;
  Eigen::VectorXd normalized_;
  std::optional<SystemicDecomposition> systemic_;
  Provenance provenance_;
  Eigen::VectorXd unclipped_;
  std::vector<bool> inactive_;
};

// A balanced, seeded partition of {0..n-1} into k folds.
struct FoldPlan {
  int k = 0;
  uint64_t seed = 0;
  std::vector<int> assignments;

  std::vector<int> TestRows(int fold) const {
    std::vector<int> rows;
    for (int i = 0; i < static_cast<int>(assignments.size()); ++i) {
      if (assignments[i] == fold) rows.push_back(i);
    }
    return rows;
  }

  std::vector<int> TrainRows(int fold) const {
    std::vector<int> rows;
    for (int i = 0; i < static_cast<int>(assignments.size()); ++i) {
      if (assignments[i] != fold) rows.push_back(i);
    }
    return rows;
  }

  std::vector<int> FoldSizes() const {
    std::vector<int> sizes(k, 0);
    for (int a : assignments) ++sizes[a];
    return sizes;
  }
};

inline absl::StatusOr<FoldPlan> KFold(int n, int k, uint64_t seed) {
  if (k < 2 || k > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("fold count ", k, " must lie in [2, n=", n, "]"));
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, 0x6b666f6c64ULL);
  rng.Shuffle(std::span<int>(order));
  FoldPlan plan{k, seed, std::vector<int>(n)};
  for (int pos = 0; pos < n; ++pos) plan.assignments[order[pos]] = pos % k;
  return plan;
}

// Seeded holdout split: returns (train rows, test rows), both ascending.
inline std::pair<std::vector<int>, std::vector<int>> HoldoutSplit(
    int n, double test_fraction, uint64_t seed) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, 0x686f6c64ULL);
  rng.Shuffle(std::span<int>(order));
  int n_test = static_cast<int>(std::lround(test_fraction * n));
  n_test = std::clamp(n_test, 2, n - 2);
  std::vector<int> test(order.begin(), order.begin() + n_test);
  std::vector<int> train(order.begin() + n_test, order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(test)};
}

}  // namespace dvi

#endif  // DVI_DATA_H_

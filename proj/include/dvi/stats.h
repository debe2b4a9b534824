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

// Numerical primitives: normal CDF, type-1 empirical quantile, correlation,
// Brier score, and the within/between variance aggregator.

#ifndef DVI_STATS_H_
#define DVI_STATS_H_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace dvi {

inline double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Q(S; level) = inf{x : F_S(x) >= level}. Always returns an element of S.
inline absl::StatusOr<double> EmpiricalQuantile(std::span<const double> values,
                                                double level) {
  if (values.empty()) return absl::InvalidArgumentError("quantile of empty list");
  if (!(level > 0.0 && level < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("quantile level ", level, " outside (0, 1)"));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t m = sorted.size();
  // Smallest k with k/m >= level, robust to rounding in level * m.
  size_t k = static_cast<size_t>(std::ceil(level * static_cast<double>(m)));
  k = std::clamp<size_t>(k, 1, m);
  while (k > 1 && static_cast<double>(k - 1) / m >= level) --k;
  while (k < m && static_cast<double>(k) / m < level) ++k;
  return sorted[k - 1];
}

inline double Mean(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

// Sample (n-1) variance; 0 for a single value.
inline double SampleVariance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline absl::StatusOr<double> Pearson(std::span<const double> a,
                                      std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    return absl::InvalidArgumentError("pearson needs two equal-length lists, n >= 2");
  }
  const double ma = Mean(a);
  const double mb = Mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    return absl::InvalidArgumentError("correlation undefined for constant input");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline absl::StatusOr<double> Pearson(const Eigen::VectorXd& a,
                                      const Eigen::VectorXd& b) {
  return Pearson(std::span<const double>(a.data(), a.size()),
                 std::span<const double>(b.data(), b.size()));
}

// Ranks 1..n with tied values sharing the mean of their positions.
inline Eigen::VectorXd Midranks(std::span<const double> v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  Eigen::VectorXd ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i + 1;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j + 1);
    for (size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

inline absl::StatusOr<double> Spearman(std::span<const double> a,
                                       std::span<const double> b) {
  const Eigen::VectorXd ra = Midranks(a);
  const Eigen::VectorXd rb = Midranks(b);
  return Pearson(ra, rb);
}

inline absl::StatusOr<double> Spearman(const Eigen::VectorXd& a,
                                       const Eigen::VectorXd& b) {
  return Spearman(std::span<const double>(a.data(), a.size()),
                  std::span<const double>(b.data(), b.size()));
}

// Mean over n * C entries of (probability - one-hot label)^2.
inline double BrierScore(const Eigen::MatrixXd& probabilities,
                         std::span<const int> labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    for (Eigen::Index c = 0; c < probabilities.cols(); ++c) {
      const double target = labels[i] == c ? 1.0 : 0.0;
      const double e = probabilities(i, c) - target;
      total += e * e;
    }
  }
  return total / static_cast<double>(probabilities.size());
}

inline double Accuracy(const Eigen::MatrixXd& probabilities,
                       std::span<const int> labels) {
  int hits = 0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    Eigen::Index best = 0;
    probabilities.row(i).maxCoeff(&best);
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probabilities.rows());
}

struct AggregateStat {
  double mean = 0.0;
  double within_var_mean = 0.0;
  double between_var = 0.0;
  double combined_se = 0.0;

  double lower() const { return mean - 2.0 * combined_se; }
  double upper() const { return mean + 2.0 * combined_se; }
};

// Combined SE = sqrt(mean within-scenario variance + sample variance of the
// scenario means). Input pairs are (mean, variance).
inline absl::StatusOr<AggregateStat> CombineVariance(
    std::span<const std::pair<double, double>> per_scenario) {
  if (per_scenario.size() < 2) {
    return absl::InvalidArgumentError("need at least 2 scenarios to combine");
  }
  std::vector<double> means, vars;
  for (const auto& [m, v] : per_scenario) {
    means.push_back(m);
    vars.push_back(v);
  }
  AggregateStat out;
  out.mean = Mean(means);
  out.within_var_mean = Mean(vars);
  out.between_var = SampleVariance(means);
  out.combined_se = std::sqrt(out.within_var_mean + out.between_var);
  return out;
}

}  // namespace dvi

#endif  // DVI_STATS_H_

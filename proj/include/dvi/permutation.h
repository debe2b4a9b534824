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

// Permutation schemes for breaking the association between a feature and the
// model output while preserving the feature's marginal distribution.
//
// The optimal scheme shifts every rank by floor(n/2) modulo n. Among all
// permutations of {0..n-1} this maximizes the minimum circular displacement
// min_j d(j, pi(j)), and it makes every displacement equal to floor(n/2). The
// index shift applies the same cycle to row positions and skips the sort.

#ifndef DVI_PERMUTATION_H_
#define DVI_PERMUTATION_H_

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dvi/rng.h"

namespace dvi {

enum class PermutationKind { kOptimalRankShift, kIndexShift, kRandom };

// A bijection on {0..n-1}. For row permutations, mapping[i] is the source row
// whose value lands in row i.
class Permutation {
 public:
  static absl::StatusOr<Permutation> Create(std::vector<int> mapping,
                                            PermutationKind kind,
                                            std::optional<uint64_t> seed = {}) {
    std::vector<bool> seen(mapping.size(), false);
    for (int m : mapping) {
      if (m < 0 || m >= static_cast<int>(mapping.size()) || seen[m]) {
        return absl::InvalidArgumentError("mapping is not a bijection");
      }
      seen[m] = true;
    }
    return Permutation(std::move(mapping), kind, seed);
  }

  const std::vector<int>& mapping() const { return mapping_; }
  int operator[](int i) const { return mapping_[i]; }
  int n() const { return static_cast<int>(mapping_.size()); }
  PermutationKind kind() const { return kind_; }
  std::optional<uint64_t> seed() const { return seed_; }

  Eigen::VectorXd Apply(const Eigen::VectorXd& column) const {
    Eigen::VectorXd out(column.size());
    for (int i = 0; i < n(); ++i) out[i] = column[mapping_[i]];
    return out;
  }

 private:
  Permutation(std::vector<int> mapping, PermutationKind kind,
              std::optional<uint64_t> seed)
      : mapping_(std::move(mapping)), kind_(kind), seed_(seed) {}

  std::vector<int> mapping_;
  PermutationKind kind_;
  std::optional<uint64_t> seed_;
};

inline int HalfShift(int n) { return n / 2; }

// j -> (j + floor(n/2)) mod n.
inline absl::StatusOr<Permutation> CyclicShift(int n) {
  if (n < 2) return absl::InvalidArgumentError("cyclic shift needs n >= 2");
  std::vector<int> mapping(n);
  for (int j = 0; j < n; ++j) mapping[j] = (j + HalfShift(n)) % n;
  return Permutation::Create(std::move(mapping), PermutationKind::kOptimalRankShift);
}

// min(|a-b|, n-|a-b|): distance around the n-cycle.
inline absl::StatusOr<int> CircularDisplacement(int a, int b, int n) {
  if (n < 1 || a < 0 || b < 0 || a >= n || b >= n) {
    return absl::OutOfRangeError(
        absl::StrCat("indices (", a, ", ", b, ") outside [0, ", n, ")"));
  }
  const int diff = std::abs(a - b);
  return std::min(diff, n - diff);
}

inline int MinDisplacement(std::span<const int> mapping) {
  const int n = static_cast<int>(mapping.size());
  int best = n;
  for (int j = 0; j < n; ++j) {
    const int diff = std::abs(j - mapping[j]);
    best = std::min(best, std::min(diff, n - diff));
  }
  return best;
}

inline int MinDisplacement(const Permutation& perm) {
  return MinDisplacement(std::span<const int>(perm.mapping()));
}

// Indices of `values` in ascending order, ties kept in index order. LSD radix
// sort on order-preserving 64-bit keys; -0.0 ties with 0.0. NaN is not
// supported.
inline std::vector<int> StableArgsort(std::span<const double> values) {
  const size_t n = values.size();
  std::vector<uint64_t> keys(n);
  for (size_t i = 0; i < n; ++i) {
    const double v = values[i] + 0.0;  // folds -0.0 into +0.0
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    keys[i] = (bits >> 63) != 0 ? ~bits : bits | (uint64_t{1} << 63);
  }
  constexpr int kPasses = 8;
  std::array<std::array<uint32_t, 256>, kPasses> counts{};
  for (uint64_t key : keys) {
    for (int pass = 0; pass < kPasses; ++pass) ++counts[pass][(key >> (8 * pass)) & 0xff];
  }
  std::vector<int> order(n), next(n);
  std::iota(order.begin(), order.end(), 0);
  for (int pass = 0; pass < kPasses; ++pass) {
    auto& c = counts[pass];
    // A digit shared by every key leaves the order unchanged.
    if (std::find(c.begin(), c.end(), n) != c.end()) continue;
    uint32_t offset = 0;
    for (auto& slot : c) {
      const uint32_t count = slot;
      slot = offset;
      offset += count;
    }
    const int shift = 8 * pass;
    for (int idx : order) next[c[(keys[idx] >> shift) & 0xff]++] = idx;
    order.swap(next);
  }
  return order;
}

// Row-space gather map for the optimal rank shift of `column`. Ranks are
// ascending with ties broken by original index.
inline Permutation RankShiftPermutation(std::span<const double> column) {
  const int n = static_cast<int>(column.size());
  const std::vector<int> order = StableArgsort(column);
  const int k = HalfShift(n);
  std::vector<int> mapping(n);
  for (int r = 0; r < n; ++r) mapping[order[r]] = order[(r + k) % n];
  return *Permutation::Create(std::move(mapping), PermutationKind::kOptimalRankShift);
}

inline Permutation IndexShiftPermutation(int n) {
  std::vector<int> mapping(n);
  const int k = HalfShift(n);
  for (int i = 0; i < n; ++i) mapping[i] = (i + k) % n;
  return *Permutation::Create(std::move(mapping), PermutationKind::kIndexShift);
}

inline Permutation RandomPermutation(int n, uint64_t seed) {
  std::vector<int> mapping(n);
  std::iota(mapping.begin(), mapping.end(), 0);
  Rng rng(seed);
  rng.Shuffle(std::span<int>(mapping));
  return *Permutation::Create(std::move(mapping), PermutationKind::kRandom, seed);
}

inline Eigen::VectorXd ApplyRankShift(const Eigen::VectorXd& column) {
  const int n = static_cast<int>(column.size());
  const std::vector<int> order =
      StableArgsort(std::span<const double>(column.data(), column.size()));
  const int k = HalfShift(n);
  Eigen::VectorXd out(n);
  for (int r = 0; r < n; ++r) out[order[r]] = column[order[(r + k) % n]];
  return out;
}

inline Eigen::VectorXd ApplyIndexShift(const Eigen::VectorXd& column) {
  const Eigen::Index n = column.size();
  const Eigen::Index k = n / 2;
  Eigen::VectorXd out(n);
  out.head(n - k) = column.tail(n - k);
  out.tail(k) = column.head(k);
  return out;
}

inline Eigen::VectorXd ApplyRandom(const Eigen::VectorXd& column, uint64_t seed) {
  return RandomPermutation(static_cast<int>(column.size()), seed).Apply(column);
}

}  // namespace dvi

#endif  // DVI_PERMUTATION_H_

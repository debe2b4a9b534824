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

// CSV ingestion: header row mandatory, comma separated, '.' decimal point.
// Text columns are ordinal-encoded with categories in lexicographic order.
// Missing values are rejected.

#ifndef DVI_CSV_H_
#define DVI_CSV_H_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dvi/data.h"
#include "dvi/status.h"

namespace dvi {

struct EncodePolicy {
  Task task = Task::kRegression;
  // Columns to drop before building the feature matrix.
  std::vector<std::string> ignore;
};

struct Dataset {
  DataMatrix x;
  TargetVector y;
};

namespace csv_internal {

inline std::vector<std::string> SplitRecord(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

inline std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline bool IsMissingToken(const std::string& s) {
  static const char* kTokens[] = {"",    "NA",  "N/A", "NaN", "nan", "null",
                                  "inf", "Inf", "-inf", "-Inf", "+inf", "Infinity",
                                  "-Infinity"};
  for (const char* t : kTokens) {
    if (s == t) return true;
  }
  return false;
}

inline std::optional<double> ParseNumber(const std::string& s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace csv_internal

// A column is numeric if every cell parses as a number; otherwise its
// distinct values are sorted and replaced by their position.
inline absl::StatusOr<Dataset> LoadCsv(const std::string& path,
                                       const std::string& target,
                                       const EncodePolicy& policy = {}) {
  using csv_internal::IsMissingToken;
  using csv_internal::ParseNumber;
  using csv_internal::SplitRecord;
  using csv_internal::Trim;

  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open '", path, "'"));

  std::string line;
  if (!std::getline(in, line)) {
    return absl::FailedPreconditionError(absl::StrCat("'", path, "' is empty"));
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB &&
      static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  std::vector<std::string> header = SplitRecord(line);
  for (auto& h : header) h = Trim(h);
  const size_t width = header.size();

  const auto target_it = std::find(header.begin(), header.end(), target);
  if (target_it == header.end()) {
    return absl::InvalidArgumentError(
        absl::StrCat("target column '", target, "' not found in '", path, "'"));
  }
  const size_t target_col = target_it - header.begin();

  std::vector<std::vector<std::string>> cells(width);
  int row = 0;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    std::vector<std::string> fields = SplitRecord(line);
    if (fields.size() != width) {
      return absl::InvalidArgumentError(
          absl::StrCat("'", path, "' line ", row + 2, " has ", fields.size(),
                       " fields, expected ", width));
    }
    for (size_t c = 0; c < width; ++c) {
      std::string v = Trim(fields[c]);
      if (IsMissingToken(v)) {
        return absl::OutOfRangeError(
            absl::StrCat("missing or non-finite value in column '", header[c],
                         "' at line ", row + 2, " of '", path, "'"));
      }
      cells[c].push_back(std::move(v));
    }
    ++row;
  }
  if (row == 0) {
    return absl::FailedPreconditionError(
        absl::StrCat("'", path, "' has a header but no data rows"));
  }

  struct Encoded {
    Eigen::VectorXd values;
    std::vector<std::string> categories;
    bool numeric = true;
  };
  auto encode = [&](size_t c) -> absl::StatusOr<Encoded> {
    Encoded e;
    e.values.resize(row);
    for (int i = 0; i < row && e.numeric; ++i) {
      const auto v = ParseNumber(cells[c][i]);
      if (!v.has_value()) {
        e.numeric = false;
      } else if (!std::isfinite(*v)) {
        return absl::OutOfRangeError(
            absl::StrCat("non-finite value in column '", header[c],
                         "' at line ", i + 2));
      } else {
        e.values[i] = *v;
      }
    }
    if (e.numeric) return e;
    std::vector<std::string> cats = cells[c];
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    std::map<std::string, int> code;
    for (size_t k = 0; k < cats.size(); ++k) code[cats[k]] = static_cast<int>(k);
    for (int i = 0; i < row; ++i) e.values[i] = code[cells[c][i]];
    e.categories = std::move(cats);
    return e;
  };

  std::vector<FeatureMeta> meta;
  std::vector<Eigen::VectorXd> columns;
  for (size_t c = 0; c < width; ++c) {
    if (c == target_col) continue;
    if (std::find(policy.ignore.begin(), policy.ignore.end(), header[c]) !=
        policy.ignore.end()) {
      continue;
    }
    DVI_ASSIGN_OR_RETURN(Encoded e, encode(c));
    FeatureMeta m;
    m.name = header[c];
    if (!e.numeric) {
      m.kind = e.categories.size() == 2 ? FeatureKind::kBinary
                                        : FeatureKind::kOrdinal;
      m.categories = std::move(e.categories);
    } else {
      const bool binary = (e.values.array() == 0.0 || e.values.array() == 1.0).all();
      m.kind = binary ? FeatureKind::kBinary : FeatureKind::kNumeric;
    }
    meta.push_back(std::move(m));
    columns.push_back(std::move(e.values));
  }
  if (columns.empty()) {
    return absl::FailedPreconditionError(
        absl::StrCat("'", path, "' has no feature columns"));
  }
  Eigen::MatrixXd x(row, static_cast<Eigen::Index>(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j) x.col(j) = columns[j];

  DVI_ASSIGN_OR_RETURN(Encoded t, encode(target_col));
  absl::StatusOr<TargetVector> y =
      policy.task == Task::kRegression
          ? (t.numeric ? TargetVector::Regression(std::move(t.values))
                       : absl::InvalidArgumentError(absl::StrCat(
                             "regression target '", target, "' is not numeric")))
          : TargetVector::Classification(std::move(t.values));
  if (!y.ok()) return y.status();
  DVI_ASSIGN_OR_RETURN(DataMatrix dm, DataMatrix::Create(std::move(x), std::move(meta)));
  return Dataset{std::move(dm), *std::move(y)};
}

}  // namespace dvi

#endif  // DVI_CSV_H_

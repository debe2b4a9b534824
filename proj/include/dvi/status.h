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

#ifndef DVI_STATUS_H_
#define DVI_STATUS_H_

#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/cord.h"
#include "absl/strings/str_cat.h"

namespace dvi {

// Coarse error classes. The status code says what went wrong; the kind says
// which layer is responsible, and drives the CLI exit code.
enum class ErrorKind {
  kNone,
  kConfig,      // bad input data, flags, or preconditions
  kPredictor,   // the model failed to produce usable predictions
  kDegenerate,  // a normalization denominator vanished
};

inline constexpr char kErrorKindUrl[] = "type.dvi/error_kind";

inline absl::Status WithKind(absl::Status status, ErrorKind kind) {
  const char* tag = "config";
  if (kind == ErrorKind::kPredictor) tag = "predictor";
  if (kind == ErrorKind::kDegenerate) tag = "degenerate";
  status.SetPayload(kErrorKindUrl, absl::Cord(tag));
  return status;
}

inline ErrorKind KindOf(const absl::Status& status) {
  if (status.ok()) return ErrorKind::kNone;
  const auto payload = status.GetPayload(kErrorKindUrl);
  if (!payload.has_value()) return ErrorKind::kConfig;
  const std::string tag(*payload);
  if (tag == "predictor") return ErrorKind::kPredictor;
  if (tag == "degenerate") return ErrorKind::kDegenerate;
  return ErrorKind::kConfig;
}

inline absl::Status DegenerateError(std::string_view what) {
  return WithKind(absl::FailedPreconditionError(
                      absl::StrCat("degenerate importance: ", std::string(what))),
                  ErrorKind::kDegenerate);
}

inline absl::Status PredictorError(absl::Status status) {
  return WithKind(std::move(status), ErrorKind::kPredictor);
}

}  // namespace dvi

#define DVI_RETURN_IF_ERROR(expr)            \
  do {                                       \
    absl::Status dvi_status_ = (expr);       \
    if (!dvi_status_.ok()) return dvi_status_; \
  } while (0)

#define DVI_CONCAT_INNER_(a, b) a##b
#define DVI_CONCAT_(a, b) DVI_CONCAT_INNER_(a, b)

#define DVI_ASSIGN_OR_RETURN(lhs, expr) \
  DVI_ASSIGN_OR_RETURN_IMPL_(DVI_CONCAT_(dvi_statusor_, __LINE__), lhs, expr)

#define DVI_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, expr) \
  auto statusor = (expr);                               \
  if (!statusor.ok()) return statusor.status();         \
  lhs = std::move(statusor).value()

#endif  // DVI_STATUS_H_

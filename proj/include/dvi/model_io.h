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
#ifndef DVI_MODEL_IO_H_
#define DVI_MODEL_IO_H_

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dvi/predictors.h"
#include "dvi/report_io.h"
#include "nlohmann/json.hpp"

namespace dvi {

inline Json ModelToJson(const LinearModel& m, const std::vector<std::string>& names = {}) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "linear_model";
  j["link"] = m.link == Link::kIdentity ? "identity" : "logit";
  j["intercept"] = m.intercept;
  Json coef = Json::array();
  for (int k = 0; k < m.p(); ++k) coef.push_back(m.coefficients[k]);
  j["coefficients"] = std::move(coef);
  if (!names.empty()) j["features"] = names;
  j["penalty"] = {{"kind", m.penalty.kind == Penalty::Kind::kL1 ? "l1" : "none"},
                  {"lambda", m.penalty.lambda}};
  j["diagnostics"] = {{"converged", m.diagnostics.converged},
                      {"iterations", m.diagnostics.iterations},
                      {"rank_deficient", m.diagnostics.rank_deficient},
                      {"separation_suspected", m.diagnostics.separation_suspected}};
  return j;
}

inline absl::StatusOr<LinearModel> ModelFromJson(const Json& j) {
  try {
    if (j.at("kind").get<std::string>() != "linear_model") {
      return absl::InvalidArgumentError("not a linear model file");
    }
    LinearModel m;
    const std::string link = j.at("link").get<std::string>();
    if (link != "identity" && link != "logit") {
      return absl::InvalidArgumentError(absl::StrCat("unknown link '", link, "'"));
    }
    m.link = link == "identity" ? Link::kIdentity : Link::kLogit;
    m.intercept = j.at("intercept").get<double>();
    const auto coef = j.at("coefficients").get<std::vector<double>>();
    if (coef.empty()) return absl::InvalidArgumentError("model has no coefficients");
    m.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size());
    if (!m.coefficients.allFinite() || !std::isfinite(m.intercept)) {
      return absl::InvalidArgumentError("model parameters must be finite");
    }
    if (j.contains("penalty") && j["penalty"].value("kind", "none") == "l1") {
      m.penalty = Penalty::L1(j["penalty"].value("lambda", 0.0));
    }
    return m;
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("malformed model file: ", e.what()));
  }
}

inline absl::StatusOr<LinearModel> LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open model file ", path));
  std::stringstream buf;
  buf << in.rdbuf();
  const Json j = Json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, " is not valid JSON"));
  }
  return ModelFromJson(j);
}

}  // namespace dvi

#endif  // DVI_MODEL_IO_H_

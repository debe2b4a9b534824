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

// Master models with known coefficients, and the Predictor interface through
// which every importance method sees a model.

#ifndef DVI_PREDICTORS_H_
#define DVI_PREDICTORS_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dvi/data.h"
#include "dvi/status.h"

namespace dvi {

// ---------------------------------------------------------------------------
// Predictor interface.

class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual int num_features() const = 0;
  // q: 1 for regression, C for class probabilities.
  virtual int output_arity() const = 0;
  virtual bool outputs_probabilities() const { return output_arity() > 1; }
  // False when calls must be serialized (e.g. a child process per handle).
  virtual bool concurrent() const { return true; }

  virtual absl::StatusOr<Eigen::MatrixXd> Predict(
      const Eigen::MatrixXd& x) const = 0;
};

// Predict() plus shape, finiteness and probability-row checks. All failures
// are tagged as predictor errors.
inline absl::StatusOr<Eigen::MatrixXd> PredictChecked(const Predictor& model,
                                                      const Eigen::MatrixXd& x) {
  if (x.cols() != model.num_features()) {
    return WithKind(absl::InvalidArgumentError(absl::StrCat(
                        "model expects ", model.num_features(),
                        " features, data has ", x.cols())),
                    ErrorKind::kConfig);
  }
  auto out = model.Predict(x);
  if (!out.ok()) return PredictorError(out.status());
  if (out->rows() != x.rows() || out->cols() != model.output_arity()) {
    return PredictorError(absl::DataLossError(absl::StrCat(
        "predictions have shape ", out->rows(), "x", out->cols(), ", expected ",
        x.rows(), "x", model.output_arity())));
  }
  if (!out->allFinite()) {
    return PredictorError(absl::DataLossError("non-finite prediction"));
  }
  if (model.outputs_probabilities()) {
    for (Eigen::Index i = 0; i < out->rows(); ++i) {
      const double total = out->row(i).sum();
      if (std::abs(total - 1.0) > 1e-6 || out->row(i).minCoeff() < 0.0 ||
          out->row(i).maxCoeff() > 1.0) {
        return PredictorError(absl::DataLossError(absl::StrCat(
            "probability row ", i, " is not a distribution (sum ", total, ")")));
      }
    }
  }
  return out;
}

// Wraps an arbitrary function; used for custom in-process models.
class FunctionPredictor : public Predictor {
 public:
  using Fn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

  FunctionPredictor(int num_features, int output_arity, Fn fn,
                    bool probabilities = false)
      : p_(num_features), q_(output_arity), fn_(std::move(fn)),
        probabilities_(probabilities) {}

  int num_features() const override { return p_; }
  int output_arity() const override { return q_; }
  bool outputs_probabilities() const override { return probabilities_; }
  absl::StatusOr<Eigen::MatrixXd> Predict(const Eigen::MatrixXd& x) const override {
    return fn_(x);
  }

 private:
  int p_;
  int q_;
  Fn fn_;
  bool probabilities_;
};

// ---------------------------------------------------------------------------
// Generalized linear models.

enum class Link { kIdentity, kLogit };

struct Penalty {
  enum class Kind { kNone, kL1 };
  Kind kind = Kind::kNone;
  double lambda = 0.0;

  static Penalty None() { return {}; }
  static Penalty L1(double lambda) { return {Kind::kL1, lambda}; }
};

struct FitDiagnostics {
  bool converged = true;
  int iterations = 0;
  bool rank_deficient = false;     // OLS solved with ridge jitter
  bool separation_suspected = false;  // logistic refit with a tiny ridge
  std::vector<double> objective_trace;
};

struct LinearModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  Link link = Link::kIdentity;
  Penalty penalty;
  FitDiagnostics diagnostics;

  int p() const { return static_cast<int>(coefficients.size()); }
  int NumNonzero() const {
    return static_cast<int>((coefficients.array() != 0.0).count());
  }

  Eigen::VectorXd LinearPredictor(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd eta = x * coefficients;
    eta.array() += intercept;
    return eta;
  }

  // Identity link: n x 1. Logit link: n x 2 with columns [1 - s, s].
  Eigen::MatrixXd Predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd eta = LinearPredictor(x);
    if (link == Link::kIdentity) return eta;
    Eigen::MatrixXd out(x.rows(), 2);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double s = Sigmoid(eta[i]);
      out(i, 0) = 1.0 - s;
      out(i, 1) = s;
    }
    return out;
  }

  static double Sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }
};

class LinearPredictor : public Predictor {
 public:
  explicit LinearPredictor(LinearModel model) : model_(std::move(model)) {}

  int num_features() const override { return model_.p(); }
  int output_arity() const override {
    return model_.link == Link::kIdentity ? 1 : 2;
  }
  absl::StatusOr<Eigen::MatrixXd> Predict(const Eigen::MatrixXd& x) const override {
    return model_.Predict(x);
  }
  const LinearModel& model() const { return model_; }

 private:
  LinearModel model_;
};

namespace fit_internal {

struct Standardized {
  Eigen::MatrixXd z;       // centered, unit population variance columns
  Eigen::VectorXd center;  // column means
  Eigen::VectorXd scale;   // population sd; 0 marks a constant column
};

inline Standardized Standardize(const Eigen::MatrixXd& x) {
  Standardized s;
  const double n = static_cast<double>(x.rows());
  s.center = x.colwise().mean().transpose();
  s.z = x.rowwise() - s.center.transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt(s.z.col(j).squaredNorm() / n);
    s.scale[j] = sd > 1e-12 * (1.0 + std::abs(s.center[j])) ? sd : 0.0;
    if (s.scale[j] > 0.0) {
      s.z.col(j) /= s.scale[j];
    } else {
      s.z.col(j).setZero();
    }
  }
  return s;
}

inline double SoftThreshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Maps coefficients on the standardized scale back to the original scale.
inline void Unstandardize(const Standardized& s, const Eigen::VectorXd& beta_std,
                          double intercept_std, LinearModel* model) {
  model->coefficients = Eigen::VectorXd::Zero(beta_std.size());
  double intercept = intercept_std;
  for (Eigen::Index j = 0; j < beta_std.size(); ++j) {
    if (s.scale[j] > 0.0 && beta_std[j] != 0.0) {
      model->coefficients[j] = beta_std[j] / s.scale[j];
      intercept -= model->coefficients[j] * s.center[j];
    }
  }
  model->intercept = intercept;
}

}  // namespace fit_internal

inline constexpr double kOlsRidgeJitter = 1e-10;

// Least squares with intercept via column-pivoting QR on centered data.
// A rank-deficient design is solved with a ridge of kOlsRidgeJitter (relative
// to the mean diagonal of X'X) and flagged.
inline absl::StatusOr<LinearModel> FitOls(const Eigen::MatrixXd& x,
                                          const Eigen::VectorXd& y) {
  if (x.rows() != y.size() || x.rows() < 2) {
    return absl::InvalidArgumentError("fit_ols: x and y have incompatible sizes");
  }
  const Eigen::VectorXd center = x.colwise().mean().transpose();
  const Eigen::MatrixXd xc = x.rowwise() - center.transpose();
  const double y_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - y_mean;

  LinearModel model;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
  if (qr.rank() == xc.cols()) {
    model.coefficients = qr.solve(yc);
  } else {
    Eigen::MatrixXd gram = xc.transpose() * xc;
    const double jitter =
        kOlsRidgeJitter * std::max(1.0, gram.diagonal().mean());
    gram.diagonal().array() += jitter;
    model.coefficients = gram.ldlt().solve(xc.transpose() * yc);
    model.diagnostics.rank_deficient = true;
  }
  model.intercept = y_mean - center.dot(model.coefficients);
  model.link = Link::kIdentity;
  return model;
}

struct LassoOptions {
  int max_sweeps = 10000;
  double tolerance = 1e-8;  // max coefficient change per sweep (standardized)
};

// max_j |z_j'(y - mean(y))| / n on standardized columns: the smallest lambda
// that zeroes every coefficient.
inline double LassoLambdaMax(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto s = fit_internal::Standardize(x);
  const Eigen::VectorXd yc = y.array() - y.mean();
  return (s.z.transpose() * yc).cwiseAbs().maxCoeff() / static_cast<double>(x.rows());
}

// Coordinate descent for (1/2n)||y - b - Z beta||^2 + lambda ||beta||_1 on
// standardized features. Coefficients are reported on the original scale.
// On non-convergence the last iterate is written to `last_iterate`.
inline absl::StatusOr<LinearModel> FitLasso(const Eigen::MatrixXd& x,
                                            const Eigen::VectorXd& y,
                                            double lambda,
                                            const LassoOptions& options = {},
                                            LinearModel* last_iterate = nullptr) {
  if (x.rows() != y.size() || x.rows() < 2) {
    return absl::InvalidArgumentError("fit_lasso: x and y have incompatible sizes");
  }
  if (!(lambda >= 0.0)) return absl::InvalidArgumentError("lambda must be >= 0");
  using fit_internal::SoftThreshold;
  const auto s = fit_internal::Standardize(x);
  const double n = static_cast<double>(x.rows());
  const double y_mean = y.mean();
  Eigen::VectorXd r = y.array() - y_mean;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());

  LinearModel model;
  model.link = Link::kIdentity;
  model.penalty = Penalty::L1(lambda);
  auto objective = [&]() {
    return 0.5 * r.squaredNorm() / n + lambda * beta.lpNorm<1>();
  };
  model.diagnostics.objective_trace.push_back(objective());

  bool converged = false;
  int sweep = 0;
  while (sweep < options.max_sweeps && !converged) {
    ++sweep;
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (s.scale[j] == 0.0) continue;
      const double old = beta[j];
      const double rho = s.z.col(j).dot(r) / n + old;
      const double updated = SoftThreshold(rho, lambda);
      if (updated != old) {
        r -= (updated - old) * s.z.col(j);
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    model.diagnostics.objective_trace.push_back(objective());
    converged = max_change < options.tolerance;
  }
  model.diagnostics.iterations = sweep;
  model.diagnostics.converged = converged;
  fit_internal::Unstandardize(s, beta, y_mean, &model);
  if (!converged) {
    if (last_iterate != nullptr) *last_iterate = model;
    return absl::ResourceExhaustedError(absl::StrCat(
        "lasso did not converge in ", options.max_sweeps, " sweeps"));
  }
  return model;
}

struct LogisticOptions {
  int max_iterations = 100;     // outer Newton iterations
  int max_inner_sweeps = 1000;  // coordinate descent sweeps per Newton step
  double tolerance = 1e-10;     // relative objective change
  double separation_ridge = 1e-6;
};

namespace fit_internal {

struct LogisticProblem {
  const Eigen::MatrixXd& z;
  const Eigen::VectorXd& y;
  const Eigen::VectorXd& w;  // per-sample weights, mean 1
  double lambda;
  double ridge;

  double Objective(const Eigen::VectorXd& beta, double b0) const {
    const double n = static_cast<double>(z.rows());
    const Eigen::VectorXd eta = (z * beta).array() + b0;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      // log(1 + e^t) - y t, stable.
      const double t = eta[i];
      const double softplus = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
      loss += w[i] * (softplus - y[i] * t);
    }
    return loss / n + lambda * beta.lpNorm<1>() + 0.5 * ridge * beta.squaredNorm();
  }
};

// Proximal Newton: quadratic model of the loss solved by coordinate descent
// (or a dense solve when there is no l1 term), then backtracking so that the
// penalized objective never increases.
inline FitDiagnostics SolveLogistic(const LogisticProblem& prob,
                                    const LogisticOptions& options,
                                    Eigen::VectorXd* beta_io, double* b0_io) {
  FitDiagnostics diag;
  const Eigen::Index n = prob.z.rows();
  const Eigen::Index p = prob.z.cols();
  const double nd = static_cast<double>(n);
  Eigen::VectorXd beta = *beta_io;
  double b0 = *b0_io;
  double current = prob.Objective(beta, b0);
  diag.objective_trace.push_back(current);
  diag.converged = false;

  for (int it = 0; it < options.max_iterations; ++it) {
    diag.iterations = it + 1;
    const Eigen::VectorXd eta = (prob.z * beta).array() + b0;
    Eigen::VectorXd hw(n), work(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = LinearModel::Sigmoid(eta[i]);
      const double v = std::max(mu * (1.0 - mu), 1e-10);
      hw[i] = prob.w[i] * v / nd;
      work[i] = eta[i] + (prob.y[i] - mu) / v;
    }
    Eigen::VectorXd nb = beta;
    double nb0 = b0;
    if (prob.lambda == 0.0) {
      // Weighted least squares with an unpenalized intercept.
      Eigen::MatrixXd a(p + 1, p + 1);
      Eigen::VectorXd rhs(p + 1);
      const Eigen::VectorXd wz_sum = prob.z.transpose() * hw;
      a(0, 0) = hw.sum();
      a.block(1, 0, p, 1) = wz_sum;
      a.block(0, 1, 1, p) = wz_sum.transpose();
      a.block(1, 1, p, p) = prob.z.transpose() * hw.asDiagonal() * prob.z;
      a.block(1, 1, p, p).diagonal().array() += prob.ridge;
      rhs[0] = hw.dot(work);
      rhs.tail(p) = prob.z.transpose() * hw.cwiseProduct(work);
      const Eigen::VectorXd sol = a.ldlt().solve(rhs);
      if (sol.allFinite()) {
        nb0 = sol[0];
        nb = sol.tail(p);
      }
    } else {
      Eigen::VectorXd r = work - ((prob.z * nb).array() + nb0).matrix();
      Eigen::VectorXd col_h(p);
      for (Eigen::Index j = 0; j < p; ++j) {
        col_h[j] = prob.z.col(j).cwiseAbs2().dot(hw);
      }
      const double hw_sum = hw.sum();
      for (int sweep = 0; sweep < options.max_inner_sweeps; ++sweep) {
        double max_change = 0.0;
        const double d0 = hw.dot(r) / hw_sum;
        nb0 += d0;
        r.array() -= d0;
        max_change = std::abs(d0);
        for (Eigen::Index j = 0; j < p; ++j) {
          if (col_h[j] <= 0.0) continue;
          const double old = nb[j];
          const double g = prob.z.col(j).cwiseProduct(hw).dot(r) + col_h[j] * old;
          const double updated =
              SoftThreshold(g, prob.lambda) / (col_h[j] + prob.ridge);
          if (updated != old) {
            r -= (updated - old) * prob.z.col(j);
            nb[j] = updated;
            max_change = std::max(max_change, std::abs(updated - old));
          }
        }
        if (max_change < 1e-12) break;
      }
    }
    // Backtracking along the Newton direction.
    const Eigen::VectorXd dbeta = nb - beta;
    const double db0 = nb0 - b0;
    double step = 1.0;
    double candidate = prob.Objective(beta + dbeta, b0 + db0);
    while (!(candidate <= current) && step > 1e-10) {
      step *= 0.5;
      candidate = prob.Objective(beta + step * dbeta, b0 + step * db0);
    }
    if (!(candidate <= current)) {
      diag.converged = true;  // no descent direction left
      break;
    }
    beta += step * dbeta;
    b0 += step * db0;
    const double change = current - candidate;
    current = candidate;
    diag.objective_trace.push_back(current);
    if (change <= options.tolerance * std::max(1.0, std::abs(current))) {
      diag.converged = true;
      break;
    }
  }
  *beta_io = beta;
  *b0_io = b0;
  return diag;
}

}  // namespace fit_internal

// Binary logistic regression, optionally l1-penalized on standardized
// features. With class_balance, sample i gets weight n / (2 n_{y_i}).
// Suspected separation (no convergence, or exploding coefficients) triggers a
// refit with a tiny ridge, flagged in the diagnostics.
inline absl::StatusOr<LinearModel> FitLogistic(const Eigen::MatrixXd& x,
                                               const TargetVector& y,
                                               const Penalty& penalty,
                                               bool class_balance,
                                               const LogisticOptions& options = {}) {
  if (y.task() != Task::kClassification || y.n_classes() != 2) {
    return absl::InvalidArgumentError("fit_logistic needs a binary target");
  }
  if (x.rows() != y.n()) {
    return absl::InvalidArgumentError("fit_logistic: x and y have incompatible sizes");
  }
  const double lambda = penalty.kind == Penalty::Kind::kL1 ? penalty.lambda : 0.0;
  if (!(lambda >= 0.0)) return absl::InvalidArgumentError("lambda must be >= 0");

  const auto s = fit_internal::Standardize(x);
  const Eigen::Index n = x.rows();
  const double n_pos = y.values().sum();
  const double n_neg = static_cast<double>(n) - n_pos;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (class_balance) {
    for (Eigen::Index i = 0; i < n; ++i) {
      w[i] = static_cast<double>(n) / (2.0 * (y.values()[i] > 0.5 ? n_pos : n_neg));
    }
  }
  const double prior = (w.array() * y.values().array()).sum() / w.sum();

  auto run = [&](double ridge, Eigen::VectorXd* beta, double* b0) {
    *beta = Eigen::VectorXd::Zero(x.cols());
    *b0 = std::log(prior / (1.0 - prior));
    fit_internal::LogisticProblem prob{s.z, y.values(), w, lambda, ridge};
    return fit_internal::SolveLogistic(prob, options, beta, b0);
  };

  Eigen::VectorXd beta;
  double b0 = 0.0;
  FitDiagnostics diag = run(0.0, &beta, &b0);
  const bool exploded = !beta.allFinite() || beta.cwiseAbs().maxCoeff() > 1e3;
  // Without a penalty, a perfectly separating fit has no finite optimum.
  bool separated = lambda == 0.0 && beta.allFinite();
  if (separated) {
    const Eigen::VectorXd eta = (s.z * beta).array() + b0;
    for (Eigen::Index i = 0; i < n && separated; ++i) {
      separated = (2.0 * y.values()[i] - 1.0) * eta[i] > 0.0;
    }
  }
  if (!diag.converged || exploded || separated) {
    diag = run(options.separation_ridge, &beta, &b0);
    diag.separation_suspected = true;
  }

  LinearModel model;
  model.link = Link::kLogit;
  model.penalty = lambda > 0.0 ? Penalty::L1(lambda) : Penalty::None();
  model.diagnostics = std::move(diag);
  fit_internal::Unstandardize(s, beta, b0, &model);
  return model;
}

// Analogue of LassoLambdaMax for the (weighted) logistic loss.
inline double LogisticLambdaMax(const Eigen::MatrixXd& x, const TargetVector& y,
                                bool class_balance) {
  const auto s = fit_internal::Standardize(x);
  const Eigen::Index n = x.rows();
  const double n_pos = y.values().sum();
  const double n_neg = static_cast<double>(n) - n_pos;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (class_balance) {
    for (Eigen::Index i = 0; i < n; ++i) {
      w[i] = static_cast<double>(n) / (2.0 * (y.values()[i] > 0.5 ? n_pos : n_neg));
    }
  }
  const double prior = (w.array() * y.values().array()).sum() / w.sum();
  const Eigen::VectorXd g = w.cwiseProduct((y.values().array() - prior).matrix());
  // The slack keeps the Newton iterate at zero despite rounding in the weights.
  return (1.0 + 1e-9) * (s.z.transpose() * g).cwiseAbs().maxCoeff() / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Ground truth for linear masters.

enum class GroundTruthConvention {
  kAbsBetaTimesSd,  // |beta_j| * sd_j (default)
  kAbsBeta,         // |beta_j|
  kSquared,         // beta_j^2 * sd_j^2
};

inline const char* GroundTruthConventionName(GroundTruthConvention c) {
  switch (c) {
    case GroundTruthConvention::kAbsBetaTimesSd:
      return "abs-beta-times-sd";
    case GroundTruthConvention::kAbsBeta:
      return "abs-beta";
    case GroundTruthConvention::kSquared:
      return "squared";
  }
  return "abs-beta-times-sd";
}

// Normalized per-feature contribution scale of a linear master, using the
// sample standard deviation of each feature on `x`.
inline absl::StatusOr<Eigen::VectorXd> GroundTruthImportance(
    const LinearModel& model, const Eigen::MatrixXd& x,
    GroundTruthConvention convention = GroundTruthConvention::kAbsBetaTimesSd) {
  if (x.cols() != model.p()) {
    return absl::InvalidArgumentError("ground truth: feature count mismatch");
  }
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd raw(model.p());
  for (int j = 0; j < model.p(); ++j) {
    const double beta = model.coefficients[j];
    if (beta == 0.0) {
      raw[j] = 0.0;
      continue;
    }
    const double mean = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - mean).square().sum() / (n - 1.0));
    switch (convention) {
      case GroundTruthConvention::kAbsBetaTimesSd:
        raw[j] = std::abs(beta) * sd;
        break;
      case GroundTruthConvention::kAbsBeta:
        raw[j] = std::abs(beta);
        break;
      case GroundTruthConvention::kSquared:
        raw[j] = beta * beta * sd * sd;
        break;
    }
  }
  const double total = raw.sum();
  if (!(total > 0.0)) return DegenerateError("all model coefficients are zero");
  return Eigen::VectorXd(raw / total);
}

// ---------------------------------------------------------------------------
// Master models for benchmarks and case studies.

struct MasterSpec {
  Task task = Task::kRegression;
  bool l1 = false;
  // l1 only: lambda is the largest value on a log grid from lambda_max down to
  // lambda_max * lambda_ratio that keeps at least min_nonzero coefficients.
  int min_nonzero = 1;
  int lambda_points = 20;
  double lambda_ratio = 1e-3;
  bool class_balance = true;
};

inline std::vector<double> LambdaGrid(double lambda_max, int points, double ratio) {
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    grid[i] = lambda_max * std::pow(ratio, t);
  }
  return grid;
}

// OLS / lasso for regression, (l1-)logistic for classification. A lasso fit
// that hits the sweep limit keeps its last iterate with converged = false.
inline absl::StatusOr<LinearModel> FitMaster(const Eigen::MatrixXd& x,
                                             const TargetVector& y,
                                             const MasterSpec& spec) {
  if (y.task() != spec.task) {
    return WithKind(absl::InvalidArgumentError("target type does not match the master"),
                    ErrorKind::kConfig);
  }
  const bool regression = spec.task == Task::kRegression;
  if (!spec.l1) {
    if (regression) return FitOls(x, y.values());
    return FitLogistic(x, y, Penalty::None(), spec.class_balance);
  }
  if (spec.lambda_points < 1 || !(spec.lambda_ratio > 0.0 && spec.lambda_ratio < 1.0)) {
    return WithKind(absl::InvalidArgumentError("invalid lambda grid"), ErrorKind::kConfig);
  }
  const double lambda_max = regression ? LassoLambdaMax(x, y.values())
                                       : LogisticLambdaMax(x, y, spec.class_balance);
  LinearModel fitted;
  for (double lambda : LambdaGrid(lambda_max, spec.lambda_points, spec.lambda_ratio)) {
    if (regression) {
      LinearModel last;
      auto fit = FitLasso(x, y.values(), lambda, {}, &last);
      if (fit.ok()) {
        fitted = *std::move(fit);
      } else if (absl::IsResourceExhausted(fit.status())) {
        fitted = std::move(last);
      } else {
        return fit.status();
      }
    } else {
      DVI_ASSIGN_OR_RETURN(fitted,
                           FitLogistic(x, y, Penalty::L1(lambda), spec.class_balance));
    }
    if (fitted.NumNonzero() >= spec.min_nonzero) break;
  }
  return fitted;
}

// Fits `fit` on all columns except `excluded`, then re-inserts a zero
// coefficient so the model still accepts the full matrix.
template <typename FitFn>
absl::StatusOr<LinearModel> FitExcluding(const Eigen::MatrixXd& x, int excluded,
                                         FitFn&& fit) {
  if (excluded < 0 || excluded >= x.cols()) {
    return absl::InvalidArgumentError("excluded feature index out of range");
  }
  Eigen::MatrixXd reduced(x.rows(), x.cols() - 1);
  for (Eigen::Index j = 0, c = 0; j < x.cols(); ++j) {
    if (j != excluded) reduced.col(c++) = x.col(j);
  }
  DVI_ASSIGN_OR_RETURN(LinearModel model, fit(reduced));
  Eigen::VectorXd full = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index j = 0, c = 0; j < x.cols(); ++j) {
    if (j != excluded) full[j] = model.coefficients[c++];
  }
  model.coefficients = std::move(full);
  return model;
}

}  // namespace dvi

#endif  // DVI_PREDICTORS_H_

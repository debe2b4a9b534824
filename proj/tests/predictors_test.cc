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
#include <cmath>
#include <string>
#include <vector>

#include "dvi/csv.h"
#include "dvi/predictors.h"
#include "dvi/rng.h"
#include "dvi/simulation.h"
#include "gtest/gtest.h"

namespace dvi {
namespace {

Eigen::MatrixXd Gaussian(int n, int p, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.Normal();
  }
  return x;
}

// Solves [1 X]'[1 X] b = [1 X]'y by Cholesky.
Eigen::VectorXd NormalEquations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  return (a.transpose() * a).llt().solve(a.transpose() * y);
}

TEST(FitOlsTest, ExactFits) {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  auto m = *FitOls(x, 2.0 * x.col(0));
  EXPECT_NEAR(m.coefficients[0], 2.0, 1e-9);
  EXPECT_NEAR(m.intercept, 0.0, 1e-9);

  const Eigen::MatrixXd g = Gaussian(50, 4, 1);
  const Eigen::Vector4d beta(1.5, -2.0, 0.0, 0.25);
  auto fit = *FitOls(g, (g * beta).array() + 3.0);
  EXPECT_LT((fit.coefficients - beta).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(fit.intercept, 3.0, 1e-6);
  EXPECT_FALSE(fit.diagnostics.rank_deficient);
}

TEST(FitOlsTest, MatchesNormalEquationsOracle) {
  const Eigen::MatrixXd x = Gaussian(100, 10, 2);
  Rng rng(3);
  Eigen::VectorXd beta(10);
  for (int j = 0; j < 10; ++j) beta[j] = rng.Normal();
  Eigen::VectorXd y = x * beta;
  for (int i = 0; i < 100; ++i) y[i] += 0.1 * rng.Normal();
  auto m = *FitOls(x, y);
  const Eigen::VectorXd oracle = NormalEquations(x, y);
  EXPECT_NEAR(m.intercept, oracle[0], 1e-9);
  EXPECT_LT((m.coefficients - oracle.tail(10)).cwiseAbs().maxCoeff(), 1e-9);
  const Eigen::VectorXd resid = y - m.LinearPredictor(x);
  EXPECT_GT(1.0 - resid.squaredNorm() / (y.array() - y.mean()).square().sum(), 0.99);
  EXPECT_LE((x.transpose() * resid).cwiseAbs().maxCoeff(), 1e-6 * y.cwiseAbs().maxCoeff());
}

TEST(FitOlsTest, RankDeficientIsFlagged) {
  Eigen::MatrixXd x = Gaussian(30, 3, 4);
  x.col(2) = x.col(0);
  auto m = *FitOls(x, x.col(0) + x.col(1));
  EXPECT_TRUE(m.diagnostics.rank_deficient);
  EXPECT_TRUE(m.coefficients.allFinite());
  EXPECT_NEAR(m.coefficients[0] + m.coefficients[2], 1.0, 1e-6);
}

// Proximal gradient on the standardized problem; slow but simple.
Eigen::VectorXd IstaOracle(const Eigen::MatrixXd& z, const Eigen::VectorXd& yc, double lambda) {
  const double n = static_cast<double>(z.rows());
  const double step = n / (z.transpose() * z).eigenvalues().real().maxCoeff();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(z.cols());
  for (int it = 0; it < 200000; ++it) {
    const Eigen::VectorXd grad = -z.transpose() * (yc - z * b) / n;
    Eigen::VectorXd next = b - step * grad;
    for (Eigen::Index j = 0; j < next.size(); ++j) {
      next[j] = fit_internal::SoftThreshold(next[j], step * lambda);
    }
    if ((next - b).cwiseAbs().maxCoeff() < 1e-14) return next;
    b = next;
  }
  return b;
}

TEST(FitLassoTest, MatchesIstaOracle) {
  const Eigen::MatrixXd x = Gaussian(80, 5, 5);
  Rng rng(6);
  Eigen::VectorXd y = 2.0 * x.col(0) + x.col(1);
  for (int i = 0; i < 80; ++i) y[i] += 0.5 * rng.Normal();
  const double lambda = 0.2;
  auto m = *FitLasso(x, y, lambda);
  const auto s = fit_internal::Standardize(x);
  const Eigen::VectorXd oracle_std = IstaOracle(s.z, y.array() - y.mean(), lambda);
  for (int j = 0; j < 5; ++j) {
    EXPECT_NEAR(m.coefficients[j] * s.scale[j], oracle_std[j], 1e-6) << j;
    EXPECT_EQ(m.coefficients[j] == 0.0, oracle_std[j] == 0.0) << j;
  }
  EXPECT_GT(m.coefficients[0], 0.0);
  EXPECT_GT(m.coefficients[1], 0.0);
  // KKT on the standardized scale.
  const Eigen::VectorXd beta_std = m.coefficients.cwiseProduct(s.scale);
  const Eigen::VectorXd g =
      s.z.transpose() * ((y.array() - y.mean()).matrix() - s.z * beta_std) / 80.0;
  for (int j = 0; j < 5; ++j) {
    if (beta_std[j] != 0.0) {
      EXPECT_NEAR(g[j], lambda * (beta_std[j] > 0 ? 1.0 : -1.0), 1e-6);
    } else {
      EXPECT_LE(std::abs(g[j]), lambda + 1e-6);
    }
  }
}

TEST(FitLassoTest, LimitsAndMonotoneObjective) {
  const Eigen::MatrixXd x = Gaussian(60, 4, 7);
  const Eigen::VectorXd y = x * Eigen::Vector4d(1, -1, 0.5, 0) + 0.1 * Gaussian(60, 1, 8);
  auto ols = *FitOls(x, y);
  auto l0 = *FitLasso(x, y, 0.0);
  EXPECT_LT((ols.coefficients - l0.coefficients).cwiseAbs().maxCoeff(), 1e-5);
  auto big = *FitLasso(x, y, LassoLambdaMax(x, y));
  EXPECT_EQ(big.NumNonzero(), 0);
  EXPECT_NEAR(big.intercept, y.mean(), 1e-12);
  auto mid = *FitLasso(x, y, 0.1);
  const auto& trace = mid.diagnostics.objective_trace;
  for (size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-15);
}

TEST(FitLassoTest, NonConvergenceCarriesLastIterate) {
  Eigen::MatrixXd x = Gaussian(40, 3, 9);
  x.col(1) = x.col(0) + 1e-3 * x.col(2);
  const Eigen::VectorXd y = x.col(0) + x.col(2);
  LinearModel last;
  auto m = FitLasso(x, y, 1e-6, LassoOptions{2, 1e-15}, &last);
  EXPECT_EQ(m.status().code(), absl::StatusCode::kResourceExhausted);
  EXPECT_EQ(last.diagnostics.iterations, 2);
  EXPECT_FALSE(last.diagnostics.converged);
  EXPECT_TRUE(last.coefficients.allFinite());
}

TargetVector Labels(const Eigen::VectorXd& v) { return *TargetVector::Classification(v); }

double LogLik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double b0, double b1,
              double b2) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double t = b0 + b1 * x(i, 0) + b2 * x(i, 1);
    ll += y[i] * t - std::log1p(std::exp(t));
  }
  return ll;
}

TEST(FitLogisticTest, MatchesGridSearchOracle) {
  const Eigen::MatrixXd x = Gaussian(60, 2, 10);
  Rng rng(11);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    const double pr = LinearModel::Sigmoid(0.3 + 1.2 * x(i, 0) - 0.8 * x(i, 1));
    y[i] = rng.Uniform() < pr ? 1.0 : 0.0;
  }
  auto m = *FitLogistic(x, Labels(y), Penalty::None(), false);
  // Zooming grid search over (b0, b1, b2).
  double c[3] = {0, 0, 0};
  for (double width = 4.0; width > 1e-5; width /= 5.0) {
    double best = -1e300, arg[3] = {0, 0, 0};
    for (int a = -10; a <= 10; ++a) {
      for (int b = -10; b <= 10; ++b) {
        for (int d = -10; d <= 10; ++d) {
          const double p0 = c[0] + a * width / 10, p1 = c[1] + b * width / 10,
                       p2 = c[2] + d * width / 10;
          const double v = LogLik(x, y, p0, p1, p2);
          if (v > best) {
            best = v;
            arg[0] = p0;
            arg[1] = p1;
            arg[2] = p2;
          }
        }
      }
    }
    std::copy(arg, arg + 3, c);
  }
  EXPECT_NEAR(m.intercept, c[0], 1e-3);
  EXPECT_NEAR(m.coefficients[0], c[1], 1e-3);
  EXPECT_NEAR(m.coefficients[1], c[2], 1e-3);
  const auto& trace = m.diagnostics.objective_trace;
  for (size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]);
}

TEST(FitLogisticTest, SymmetryUnderFlip) {
  // Balanced, symmetric design: x -> -x together with y -> 1 - y.
  Eigen::MatrixXd x(8, 1);
  x << -2, -1, -0.5, 0.3, 0.5, 1, 2, -0.3;
  Eigen::VectorXd y(8);
  y << 0, 0, 1, 0, 1, 1, 1, 0;
  auto m = *FitLogistic(x, Labels(y), Penalty::None(), true);
  auto flipped = *FitLogistic(-x, Labels((1.0 - y.array()).matrix()), Penalty::None(), true);
  EXPECT_NEAR(m.coefficients[0], flipped.coefficients[0], 1e-6);
  auto label_flip = *FitLogistic(x, Labels((1.0 - y.array()).matrix()), Penalty::None(), true);
  EXPECT_NEAR(m.coefficients[0], -label_flip.coefficients[0], 1e-6);
}

TEST(FitLogisticTest, SeparationIsFlagged) {
  Eigen::MatrixXd x(6, 1);
  x << -3, -2, -1, 1, 2, 3;
  Eigen::VectorXd y(6);
  y << 0, 0, 0, 1, 1, 1;
  auto m = *FitLogistic(x, Labels(y), Penalty::None(), true);
  EXPECT_TRUE(m.diagnostics.separation_suspected);
  EXPECT_TRUE(m.coefficients.allFinite());
  EXPECT_GT(m.coefficients[0], 0.0);
}

TEST(FitLogisticTest, L1PathAndMonotoneObjective) {
  const Eigen::MatrixXd x = Gaussian(200, 6, 12);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) y[i] = x(i, 0) - 0.5 * x(i, 1) > 0.1 ? 1 : 0;
  const TargetVector t = Labels(y);
  EXPECT_EQ(FitLogistic(x, t, Penalty::L1(LogisticLambdaMax(x, t, true)), true)->NumNonzero(),
            0);
  auto m = *FitLogistic(x, t, Penalty::L1(0.02), true);
  EXPECT_GT(m.NumNonzero(), 0);
  EXPECT_GT(m.coefficients[0], 0.0);
  const auto& trace = m.diagnostics.objective_trace;
  for (size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]);
}

TEST(FitMasterTest, StrongL1OnGermanCreditKeepsFewCoefficients) {
  EncodePolicy policy;
  policy.task = Task::kClassification;
  auto ds = *LoadCsv(std::string(DVI_DATA_DIR) + "/german_credit.csv", "class", policy);
  MasterSpec spec;
  spec.task = Task::kClassification;
  spec.l1 = true;
  spec.min_nonzero = 2;
  auto m = *FitMaster(ds.x.values(), ds.y, spec);
  EXPECT_GE(m.NumNonzero(), 2);
  EXPECT_LE(m.NumNonzero(), 3);
}

TEST(PredictTest, ZeroModels) {
  LinearModel m;
  m.coefficients = Eigen::VectorXd::Zero(3);
  m.intercept = 1.5;
  const Eigen::MatrixXd x = Gaussian(4, 3, 13);
  EXPECT_TRUE((m.Predict(x).array() == 1.5).all());
  m.link = Link::kLogit;
  m.intercept = 0.0;
  EXPECT_TRUE((m.Predict(x).array() == 0.5).all());
}

TEST(PredictCheckedTest, Errors) {
  LinearModel m;
  m.coefficients = Eigen::VectorXd::Ones(2);
  LinearPredictor lp(m);
  EXPECT_EQ(KindOf(PredictChecked(lp, Eigen::MatrixXd::Ones(3, 3)).status()),
            ErrorKind::kConfig);
  FunctionPredictor nan_model(2, 1, [](const Eigen::MatrixXd& x) {
    return Eigen::MatrixXd::Constant(x.rows(), 1, std::nan(""));
  });
  EXPECT_EQ(KindOf(PredictChecked(nan_model, Eigen::MatrixXd::Ones(3, 2)).status()),
            ErrorKind::kPredictor);
  FunctionPredictor bad_probs(
      2, 2, [](const Eigen::MatrixXd& x) { return Eigen::MatrixXd::Constant(x.rows(), 2, 0.7); },
      true);
  EXPECT_EQ(KindOf(PredictChecked(bad_probs, Eigen::MatrixXd::Ones(3, 2)).status()),
            ErrorKind::kPredictor);
  FunctionPredictor wrong_rows(2, 1, [](const Eigen::MatrixXd&) {
    return Eigen::MatrixXd::Zero(1, 1);
  });
  EXPECT_EQ(KindOf(PredictChecked(wrong_rows, Eigen::MatrixXd::Ones(3, 2)).status()),
            ErrorKind::kPredictor);
}

TEST(GroundTruthTest, Conventions) {
  LinearModel m;
  m.coefficients = Eigen::Vector3d(1, 1, 0);
  Eigen::MatrixXd x(3, 3);
  // Sample sds: 2, 1, 1.
  x << -2, -1, 5, 0, 0, 6, 2, 1, 7;
  auto gt = *GroundTruthImportance(m, x);
  EXPECT_NEAR(gt[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(gt[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(gt[2], 0.0);
  auto abs_beta = *GroundTruthImportance(m, x, GroundTruthConvention::kAbsBeta);
  EXPECT_NEAR(abs_beta[0], 0.5, 1e-15);
  auto sq = *GroundTruthImportance(m, x, GroundTruthConvention::kSquared);
  EXPECT_NEAR(sq[0], 0.8, 1e-15);
  m.coefficients.setZero();
  EXPECT_EQ(KindOf(GroundTruthImportance(m, x).status()), ErrorKind::kDegenerate);
}

TEST(FitExcludingTest, ReinsertsZero) {
  const Eigen::MatrixXd x = Gaussian(40, 3, 14);
  const Eigen::VectorXd y = x.col(0) + x.col(1) + x.col(2);
  auto m = *FitExcluding(x, 1, [&](const Eigen::MatrixXd& reduced) {
    return FitOls(reduced, y);
  });
  EXPECT_EQ(m.p(), 3);
  EXPECT_EQ(m.coefficients[1], 0.0);
  EXPECT_NE(m.coefficients[0], 0.0);
}

}  // namespace
}  // namespace dvi

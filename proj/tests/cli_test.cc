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
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dvi/csv.h"
#include "dvi/direct.h"
#include "dvi/model_io.h"
#include "dvi/predictors.h"
#include "dvi/report_io.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace dvi {
namespace {

using ::testing::HasSubstr;

const std::string kHmda = std::string(DVI_DATA_DIR) + "/hmda.csv";
const std::string kGerman = std::string(DVI_DATA_DIR) + "/german_credit.csv";

struct Result {
  int code = -1;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::path(::testing::TempDir()) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  Result Run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" + DVI_CLI_PATH + "' " + args +
                            " 2>'" + Path("stderr.txt") + "'";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    char buf[4096];
    size_t k;
    while ((k = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, k);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  std::string Read(const std::string& name) const {
    std::ifstream in(Path(name));
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  Json ReadJson(const std::string& name) const { return Json::parse(Read(name)); }

  std::filesystem::path dir_;
};

TEST_F(CliTest, ImportanceMatchesLibrary) {
  const Result r = Run("importance --data " + kHmda + " --target dir --threads 3");
  ASSERT_EQ(r.code, 0) << Read("stderr.txt");
  auto report = *ReportFromJson(ReadJson("dvi_importance.json"));
  EXPECT_EQ(report.p(), 12);
  EXPECT_NEAR(report.normalized().sum(), 1.0, 1e-12);
  EXPECT_EQ(report.method(), Method::kDirectOpt);
  EXPECT_EQ(report.metric(), Metric::kMae);

  auto data = *LoadCsv(kHmda, "dir");
  const LinearPredictor f(*FitOls(data.x.values(), data.y.values()));
  auto oracle = *DirectScores(f, data.x);
  EXPECT_EQ(report.raw(), oracle.raw());
  EXPECT_EQ(report.normalized(), oracle.normalized());
  EXPECT_THAT(Read("dvi_importance.csv"), HasSubstr("black,direct-opt,MAE,"));
}

TEST_F(CliTest, SchemeLabel) {
  const Result r = Run("importance --data " + kHmda +
                       " --target dir --metric mse --scheme approx --out rep");
  ASSERT_EQ(r.code, 0) << Read("stderr.txt");
  EXPECT_EQ(ReadJson("rep.json")["method"], "direct-approx");
  EXPECT_EQ(ReadJson("rep.json")["metric"], "MSE");
}

TEST_F(CliTest, EffectiveConfigReproducesRun) {
  ASSERT_EQ(Run("importance --data " + kHmda + " --target dir --metric rmse --out a").code, 0);
  const std::string config = ReadJson("a.json")["run_config"];
  EXPECT_THAT(config, HasSubstr("metric=\"rmse\""));
  std::ofstream(Path("run.ini")) << "# recorded configuration\n" << config;
  ASSERT_EQ(Run("importance --config run.ini --out b").code, 0) << Read("stderr.txt");
  Json a = ReadJson("a.json"), b = ReadJson("b.json");
  a.erase("run_config");
  b.erase("run_config");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(Read("a.csv"), Read("b.csv"));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Run("importance --data " + kHmda + " --target nope").code, 2);
  EXPECT_EQ(Run("importance --data missing.csv --target dir").code, 2);
  EXPECT_EQ(Run("importance --data " + kHmda + " --target dir --metric r2").code, 2);
  EXPECT_EQ(Run("importance --data " + kHmda + " --target dir --bogus").code, 2);
  EXPECT_EQ(Run("").code, 2);

  LinearModel zero;
  zero.coefficients = Eigen::VectorXd::Zero(12);
  std::ofstream(Path("zero.json")) << ModelToJson(zero).dump();
  EXPECT_EQ(Run("importance --data " + kHmda + " --target dir --model zero.json").code, 4);
  EXPECT_EQ(Run("importance --data " + kHmda + " --target dir --external /bin/false").code, 3);
  EXPECT_EQ(Run("systemic --data " + kHmda + " --target dir --protected nope").code, 2);
  EXPECT_EQ(Run("systemic --data " + kHmda + " --target dir --alpha 2").code, 2);
}

TEST_F(CliTest, FitThenScoreSavedModel) {
  ASSERT_EQ(Run("fit --data " + kHmda + " --target dir --out m.json").code, 0);
  ASSERT_EQ(Run("importance --data " + kHmda + " --target dir --out builtin").code, 0);
  ASSERT_EQ(Run("importance --data " + kHmda + " --target dir --model m.json --out saved").code,
            0);
  EXPECT_EQ(Read("builtin.csv"), Read("saved.csv"));
}

TEST_F(CliTest, CompareBreiman) {
  const Result r = Run("importance --data " + kHmda +
                       " --target dir --metric mse --compare-breiman 5 --seed 9");
  ASSERT_EQ(r.code, 0) << Read("stderr.txt");
  auto breiman = *ReportFromJson(ReadJson("dvi_importance_breiman.json"));
  EXPECT_EQ(breiman.method(), Method::kBreiman);
  EXPECT_EQ(breiman.provenance().repetitions, 5);
  const Json dom = ReadJson("dvi_importance_dominance.json");
  EXPECT_EQ(dom["B"], 5);
  EXPECT_TRUE(dom.contains("verdict_consistent"));
  EXPECT_THAT(r.out, HasSubstr("dominance check"));
}

TEST_F(CliTest, SystemicHeaderAndFiles) {
  const Result r = Run("systemic --data " + kHmda +
                       " --target dir --metric mse --alpha 0.01 --protected black");
  ASSERT_EQ(r.code, 0) << Read("stderr.txt");
  EXPECT_THAT(r.out, HasSubstr("tolerance quantile: 0.99"));
  const Json j = ReadJson("dvi_systemic.json");
  EXPECT_EQ(j["header"], "tolerance quantile: 0.99");
  EXPECT_EQ(j["audit"]["feature"], "black");
  EXPECT_GT(j["audit"]["indirect"].get<double>(), j["audit"]["direct"].get<double>());
  EXPECT_TRUE(ReportFromJson(j).ok());
  EXPECT_THAT(Read("dvi_systemic_correlation.csv"), HasSubstr("feature,hir,lvr"));
  EXPECT_THAT(Read("dvi_systemic_edges.csv"), HasSubstr("feature_a,feature_b,rho\n"));
}

TEST_F(CliTest, IndependentDesignGivesEqualScores) {
  // Full factorial design: every pairwise rank correlation is exactly 0.
  std::ofstream csv(Path("grid.csv"));
  csv << "a,b,c,y\n";
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int c = 0; c < 3; ++c) csv << a << ',' << b << ',' << c << ',' << a - 2 * b + c * c << '\n';
    }
  }
  csv.close();
  ASSERT_EQ(Run("systemic --data grid.csv --target y").code, 0) << Read("stderr.txt");
  const Json j = ReadJson("dvi_systemic.json");
  EXPECT_TRUE(j["graph"]["edges"].empty());
  EXPECT_EQ(j["systemic"], j["direct"]);
}

TEST_F(CliTest, GermanProtectedFeatureHasZeroSystemicScore) {
  const Result r = Run("systemic --data " + kGerman +
                       " --target class --model l1-logistic --min-nonzero 2 "
                       "--exclude Sex-Marital_status --protected Sex-Marital_status --metric mse");
  ASSERT_EQ(r.code, 0) << Read("stderr.txt");
  const Json audit = ReadJson("dvi_systemic.json")["audit"];
  EXPECT_EQ(audit["direct"].get<double>(), 0.0);
  EXPECT_EQ(audit["systemic"].get<double>(), 0.0);
}

TEST_F(CliTest, SystemicCrossValidation) {
  const Result r = Run("systemic --data " + kHmda + " --target dir --folds 3 --metric mse");
  ASSERT_EQ(r.code, 0) << Read("stderr.txt");
  const Json j = ReadJson("dvi_systemic.json");
  EXPECT_EQ(j["fold_taus"].size(), 3u);
  EXPECT_EQ(j["provenance"]["repetitions"], 3);
  LinearModel m;
  m.coefficients = Eigen::VectorXd::Ones(12);
  std::ofstream(Path("m.json")) << ModelToJson(m).dump();
  EXPECT_EQ(Run("systemic --data " + kHmda + " --target dir --folds 3 --model m.json").code, 2);
}

TEST_F(CliTest, BenchmarkGridSelection) {
  Result all = Run("benchmark --list");
  ASSERT_EQ(all.code, 0);
  EXPECT_EQ(std::count(all.out.begin(), all.out.end(), '\n'), 193);
  Result lin = Run("benchmark --list --task regression --response linear");
  EXPECT_EQ(std::count(lin.out.begin(), lin.out.end(), '\n'), 49);
  EXPECT_EQ(Run("benchmark --list --n 7").code, 2);
}

TEST_F(CliTest, BenchmarkIsByteIdentical) {
  const std::string args =
      " --task regression --response linear --n 100 --p 10 --sigma 0.1 --reps 2";
  ASSERT_EQ(Run("benchmark --out one --threads 4" + args).code, 0) << Read("stderr.txt");
  ASSERT_EQ(Run("benchmark --out two --threads 1" + args).code, 0);
  const std::string results = Read("one/results.csv");
  EXPECT_EQ(results, Read("two/results.csv"));
  EXPECT_EQ(Read("one/summary.json"), Read("two/summary.json"));
  // 4 scenarios (rho x master) x 4 methods x 3 accuracy metrics plus the header.
  EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 49);
  EXPECT_THAT(Read("one/timings.csv"), HasSubstr("runtime_ms"));
  EXPECT_THAT(Read("one/config.ini"), HasSubstr("reps=2"));
}

TEST_F(CliTest, Stability) {
  Result r = Run("stability --data " + kHmda +
                 " --target dir --methods direct-opt,direct-approx,breiman-1 --runs 10");
  ASSERT_EQ(r.code, 0) << Read("stderr.txt");
  EXPECT_THAT(r.out, HasSubstr("direct-opt     1 distinct"));
  EXPECT_THAT(r.out, HasSubstr("direct-approx  1 distinct"));
  const std::string csv = Read("stability.csv");
  EXPECT_THAT(csv, HasSubstr("method,top_k_indices,top_k_features,count,distinct\n"));
  EXPECT_THAT(csv, HasSubstr(",10,1\n"));

  r = Run("stability --data " + kHmda + " --target dir --methods breiman-1 --runs 1 --out one.csv");
  ASSERT_EQ(r.code, 0);
  const std::string one = Read("one.csv");
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 2);
  EXPECT_EQ(Run("stability --data " + kHmda + " --target dir --k 13").code, 2);
}

}  // namespace
}  // namespace dvi

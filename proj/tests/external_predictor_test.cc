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
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dvi/direct.h"
#include "dvi/external_predictor.h"
#include "dvi/model_io.h"
#include "dvi/predictors.h"
#include "dvi/rng.h"
#include "gtest/gtest.h"

namespace dvi {
namespace {

Eigen::MatrixXd Sample(int n, int p, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.Normal() * 1e3;
  }
  return x;
}

LinearModel Model(Link link) {
  LinearModel m;
  m.coefficients = Eigen::Vector3d(0.5, -1.25e-3, 3.0);
  m.intercept = 0.1;
  m.link = link;
  return m;
}

std::string SaveModel(const LinearModel& m, const std::string& name) {
  const std::string path = ::testing::TempDir() + "/" + name;
  std::ofstream(path) << ModelToJson(m).dump();
  return path;
}

std::vector<std::string> Shell(const std::string& script) {
  return {"/bin/sh", "-c", script};
}

TEST(ProtocolTest, EncodeDecodeRoundTripIsExact) {
  const Eigen::MatrixXd x = Sample(5, 3, 1);
  const std::string req = external_internal::EncodeRequest(x, 1);
  EXPECT_EQ(req.substr(0, req.find('\n')), "#predict n=5 p=3 q=1");
  std::string resp;
  for (int i = 0; i < 5; ++i) {
    external_internal::AppendDouble(&resp, x(i, 0));
    resp += ",";
    external_internal::AppendDouble(&resp, x(i, 2));
    resp += "\n";
  }
  resp += "#end\n";
  auto out = *external_internal::DecodeResponse(resp, 5, 2);
  EXPECT_EQ(out.col(0), x.col(0));
  EXPECT_EQ(out.col(1), x.col(2));
}

TEST(ProtocolTest, DecodeRejectsMalformed) {
  EXPECT_FALSE(external_internal::DecodeResponse("1\n2\n", 2, 1).ok());
  EXPECT_FALSE(external_internal::DecodeResponse("1\n#end\n", 2, 1).ok());
  EXPECT_FALSE(external_internal::DecodeResponse("1,2\n3\n#end\n", 2, 1).ok());
  EXPECT_FALSE(external_internal::DecodeResponse("1\nabc\n#end\n", 2, 1).ok());
  EXPECT_FALSE(external_internal::DecodeResponse("1\nnan\n#end\n", 2, 1).ok());
  EXPECT_TRUE(external_internal::DecodeResponse("1\r\n 2 \n#end\n", 2, 1).ok());
}

TEST(ProtocolTest, ServePredictionInProcess) {
  const LinearPredictor lp(Model(Link::kLogit));
  const Eigen::MatrixXd x = Sample(4, 3, 2);
  std::istringstream in(external_internal::EncodeRequest(x, 2));
  std::ostringstream out;
  ASSERT_TRUE(ServePrediction(lp, in, out).ok());
  auto decoded = *external_internal::DecodeResponse(out.str(), 4, 2);
  EXPECT_EQ(decoded, *lp.Predict(x));
  std::istringstream wrong("#predict n=1 p=2 q=2\n1,2\n");
  std::ostringstream sink;
  EXPECT_FALSE(ServePrediction(lp, wrong, sink).ok());
}

TEST(ExternalPredictorTest, WrappedBuiltinMatchesInProcess) {
  for (Link link : {Link::kIdentity, Link::kLogit}) {
    const LinearModel m = Model(link);
    const LinearPredictor in_process(m);
    const std::string path = SaveModel(m, link == Link::kIdentity ? "reg.json" : "logit.json");
    ExternalPredictor ext({DVI_CLI_PATH, "predict-stdin", "--model", path}, 3,
                          in_process.output_arity());
    const Eigen::MatrixXd x = Sample(300, 3, 3);
    auto a = PredictChecked(ext, x);
    ASSERT_TRUE(a.ok()) << a.status();
    const Eigen::MatrixXd b = *in_process.Predict(x);
    EXPECT_LE((*a - b).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ExternalPredictorTest, DirectScoresMatchInProcess) {
  const LinearModel m = Model(Link::kIdentity);
  const LinearPredictor in_process(m);
  ExternalPredictor ext({DVI_CLI_PATH, "predict-stdin", "--model", SaveModel(m, "d.json")}, 3, 1);
  auto x = *DataMatrix::Create(Sample(64, 3, 4));
  DirectOptions opt;
  opt.metric = Metric::kMse;
  opt.threads = 4;
  auto a = *DirectScores(ext, x, opt);
  auto b = *DirectScores(in_process, x, opt);
  EXPECT_LE((a.normalized() - b.normalized()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ExternalPredictorTest, FailuresAreTaggedAsPredictorErrors) {
  const Eigen::MatrixXd x = Sample(3, 3, 5);
  ExternalPredictor fails(Shell("cat >/dev/null; exit 3"), 3, 1);
  auto r = PredictChecked(fails, x);
  EXPECT_EQ(r.status().code(), absl::StatusCode::kUnavailable);
  EXPECT_EQ(KindOf(r.status()), ErrorKind::kPredictor);

  ExternalPredictor garbage(Shell("cat >/dev/null; echo hello; echo '#end'"), 3, 1);
  EXPECT_EQ(KindOf(PredictChecked(garbage, x).status()), ErrorKind::kPredictor);

  ExternalPredictor short_rows(Shell("cat >/dev/null; printf '1\\n#end\\n'"), 3, 1);
  EXPECT_FALSE(PredictChecked(short_rows, x).ok());

  ExternalPredictor slow(Shell("sleep 5"), 3, 1, 0.3);
  auto t = PredictChecked(slow, x);
  EXPECT_EQ(t.status().code(), absl::StatusCode::kDeadlineExceeded);

  ExternalPredictor missing({"/nonexistent/binary"}, 3, 1);
  EXPECT_FALSE(PredictChecked(missing, x).ok());
}

TEST(ExternalPredictorTest, ShellScriptSpeaksProtocol) {
  // Sums each row; reads the header, then echoes one value per row.
  const std::string script =
      "read h; n=${h#*n=}; n=${n%% *}; i=0; "
      "while [ $i -lt $n ]; do IFS=, read a b; echo $((a + b)); i=$((i+1)); done; "
      "echo '#end'";
  ExternalPredictor ext(Shell(script), 2, 1);
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  auto out = PredictChecked(ext, x);
  ASSERT_TRUE(out.ok()) << out.status();
  EXPECT_EQ((*out)(2, 0), 11.0);
}

}  // namespace
}  // namespace dvi

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
// Direct importance of a fitted linear model on simulated data, next to the
// random-permutation baseline.

#include <cstdio>

#include "dvi/dvi.h"

int main() {
  using namespace dvi;
  auto cov = *BlockCovariance(6, 0.3, 3);
  auto x = *GenGaussian(1000, cov, 1);
  auto draw = *LinearResponse(x, kCoefficientSeed, 0.5, 2);

  auto model = FitOls(x.values(), draw.y.values());
  if (!model.ok()) {
    std::fprintf(stderr, "%s\n", std::string(model.status().message()).c_str());
    return 1;
  }
  const LinearPredictor predictor(*model);

  // MAE scores scale like the |beta| * sd ground truth.
  auto direct = DirectScores(predictor, x);
  auto breiman = BreimanScores(predictor, x, draw.y, 10, 7);
  auto truth = GroundTruthImportance(*model, x.values());
  if (!direct.ok() || !breiman.ok() || !truth.ok()) return 1;

  std::printf("%-8s %10s %10s %10s\n", "feature", "direct", "breiman", "truth");
  for (int k = 0; k < x.p(); ++k) {
    std::printf("%-8s %10.4f %10.4f %10.4f\n", x.names()[k].c_str(), direct->normalized()[k],
                breiman->normalized()[k], (*truth)[k]);
  }
  return 0;
}

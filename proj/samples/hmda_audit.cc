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
// Proxy audit of the `black` feature in the bundled mortgage data.

#include <cstdio>
#include <string>

#include "dvi/dvi.h"

int main(int argc, char** argv) {
  using namespace dvi;
  const std::string path = argc > 1 ? argv[1] : DVI_DATA_DIR "/hmda.csv";
  auto data = LoadCsv(path, "dir");
  if (!data.ok()) {
    std::fprintf(stderr, "%s\n", std::string(data.status().message()).c_str());
    return 2;
  }
  auto model = FitOls(data->x.values(), data->y.values());
  if (!model.ok()) return 1;
  const LinearPredictor predictor(*model);
  auto graph = BuildGraph(data->x);
  if (!graph.ok()) return 1;
  auto audit = AuditFeature(predictor, data->x, *graph, "black", Metric::kMse);
  if (!audit.ok()) return 1;

  std::printf("%s, tau = %.4f\n", ToleranceQuantileLabel(graph->alpha).c_str(), graph->tau);
  std::printf("black: systemic %.4f%% = direct %.4f%% + indirect %.4f%%\n",
              100 * audit->systemic, 100 * audit->direct, 100 * audit->indirect);
  for (const auto& [name, rho] : audit->proxies) {
    std::printf("  proxy %-12s rho = %+.3f\n", name.c_str(), rho);
  }
  return 0;
}

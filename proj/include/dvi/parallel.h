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

#ifndef DVI_PARALLEL_H_
#define DVI_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

#include "absl/status/status.h"

namespace dvi {

inline int WorkerCount(int count, int threads) {
  return std::clamp(threads, 1, std::max(1, count));
}

// Runs fn(i, worker) for i in 0..count-1 on WorkerCount(count, threads)
// workers. Every index writes only to its own output slot, so results do not
// depend on scheduling. `worker` lets callers reuse per-worker scratch space.
// Returns the error of the lowest failing index.
inline absl::Status ParallelForWorkers(
    int count, int threads, const std::function<absl::Status(int, int)>& fn) {
  std::vector<absl::Status> statuses(count);
  const int workers = WorkerCount(count, threads);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) statuses[i] = fn(i, 0);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int i = next++; i < count; i = next++) statuses[i] = fn(i, w);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& s : statuses) {
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

inline absl::Status ParallelFor(int count, int threads,
                                const std::function<absl::Status(int)>& fn) {
  return ParallelForWorkers(count, threads,
                            [&](int i, int) { return fn(i); });
}

inline int DefaultThreads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace dvi

#endif  // DVI_PARALLEL_H_

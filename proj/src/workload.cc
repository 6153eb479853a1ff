// Copyright 2026 The flowplan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flowplan/workload.h"

#include <algorithm>
#include <random>

#include "flowplan/error.h"

namespace flowplan {

bool is_generation_kind(const std::string& kind) {
  return kind == "rollout" || kind == "generation";
}

Workload sample_longtail_workload(const WorkflowGraph& graph, int64_t items,
                                  const LongTailParams& params, uint64_t seed) {
  if (items < 1) throw WorkloadError("workload needs at least one item");
  if (!(params.tail_fraction >= 0.0 && params.tail_fraction <= 1.0)) {
    throw WorkloadError("tail_fraction must lie in [0, 1]");
  }
  if (!(params.body_time_s > 0.0) || !(params.tail_time_s > 0.0)) {
    throw WorkloadError("body and tail times must be positive");
  }
  std::vector<const WorkerSpec*> gens;
  for (const auto& w : graph.workers) {
    if (is_generation_kind(w.kind)) gens.push_back(&w);
  }
  std::sort(gens.begin(), gens.end(),
            [](const WorkerSpec* a, const WorkerSpec* b) { return a->id < b->id; });

  Workload wl;
  wl.seed = seed;
  std::mt19937_64 rng(seed);
  for (const WorkerSpec* w : gens) {
    auto& lat = wl.item_latency_s[w->id];
    auto& fac = wl.item_factor[w->id];
    lat.reserve(items);
    fac.reserve(items);
    for (int64_t i = 0; i < items; ++i) {
      // 53 high bits -> uniform in [0, 1); identical on every platform.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const double t = u < params.tail_fraction ? params.tail_time_s : params.body_time_s;
      lat.push_back(t);
      fac.push_back(t / params.body_time_s);
    }
  }
  return wl;
}

}  // namespace flowplan

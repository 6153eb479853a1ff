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

// Per-item execution variability fed to the simulator.

#ifndef FLOWPLAN_WORKLOAD_H_
#define FLOWPLAN_WORKLOAD_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flowplan/graph.h"

namespace flowplan {

// Chunk time for (worker, chunk) resolves as:
//   1. chunk_time_s[{worker, chunk}] when present;
//   2. otherwise, unless explicit_only, the profiled time at the chunk's
//      (batch, devices) times the largest item factor in the chunk.
// Chunk c of a leaf with batch b covers items [c*b, (c+1)*b).
struct Workload {
  std::map<std::pair<std::string, int64_t>, double> chunk_time_s;
  std::map<std::string, std::vector<double>> item_factor;  // per worker, one per item
  std::map<std::string, std::vector<double>> item_latency_s;
  // Per-item payload overrides keyed by (src, dst).
  std::map<std::pair<std::string, std::string>, std::vector<int64_t>> item_payload_bytes;
  bool explicit_only = false;
  uint64_t seed = 0;
};

struct LongTailParams {
  double body_time_s = 1.0;
  double tail_time_s = 10.0;
  double tail_fraction = 0.0;
};

// Worker kinds whose items get long-tail latencies.
bool is_generation_kind(const std::string& kind);

// Each item of every generation worker takes tail_time_s with probability
// tail_fraction, else body_time_s; its factor is latency / body_time_s.
// Workers are visited in id order and share one mt19937_64 stream.
Workload sample_longtail_workload(const WorkflowGraph& graph, int64_t items,
                                  const LongTailParams& params, uint64_t seed);

}  // namespace flowplan

#endif  // FLOWPLAN_WORKLOAD_H_

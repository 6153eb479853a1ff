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

#ifndef FLOWPLAN_SCHEDULE_H_
#define FLOWPLAN_SCHEDULE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "flowplan/cluster.h"
#include "flowplan/graph.h"

namespace flowplan {

enum class ScheduleKind { kLeaf, kTemporal, kPipeline };

struct Schedule;
using SchedulePtr = std::shared_ptr<const Schedule>;

// Execution plan tree.
//
//   Leaf      one condensed node on `devices`, processing `batch` items per
//             invocation.
//   Temporal  `first` then `second` on the same devices, with a context
//             switch in between.
//   Pipeline  `first` (producer) and `second` (consumer) on disjoint device
//             sets; the batch is cut into chunks of `granularity` items that
//             flow through a channel as soon as each one is produced.
//
// A Pipeline's children run with batch == granularity, once per chunk.
struct Schedule {
  ScheduleKind kind = ScheduleKind::kLeaf;
  std::vector<int> devices;  // sorted global device ids
  int64_t batch = 0;         // items per invocation

  std::string node_id;               // leaf only
  std::vector<std::string> workers;  // leaf only, sorted

  int64_t granularity = 0;  // pipeline only
  SchedulePtr first;
  SchedulePtr second;

  static SchedulePtr leaf(std::string node_id, std::vector<std::string> workers,
                          std::vector<int> devices, int64_t batch);
  static SchedulePtr temporal(SchedulePtr first, SchedulePtr second);
  static SchedulePtr pipeline(SchedulePtr producer, SchedulePtr consumer,
                              int64_t granularity, int64_t batch);
};

std::string_view kind_name(ScheduleKind kind);

// Compact canonical rendering, e.g. "T(P[m=2](gen@0-3,inf@4-7),train@0-7)".
std::string to_string(const Schedule& s);

// All leaves, left to right.
std::vector<const Schedule*> leaves(const Schedule& s);

// Type-invariant violations of `s` as a plan for all of `dag` with the given
// iteration batch: disjoint pipeline children, identical temporal children,
// minimum device counts, granularity divisibility, valid cut order, and
// every condensed node placed exactly once. Empty when valid.
std::vector<std::string> check_schedule(const Schedule& s,
                                        const CondensedGraph& dag,
                                        int64_t total_batch,
                                        const ClusterSpec& cluster);

struct ScheduleEstimate {
  double total_time_s = 0.0;
  bool feasible = false;
  std::map<int, int64_t> peak_memory_by_device;
  std::string binding_constraint;  // why it is infeasible, if it is
};

}  // namespace flowplan

#endif  // FLOWPLAN_SCHEDULE_H_

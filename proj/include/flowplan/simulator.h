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

// Discrete-event execution of a plan tree. One invocation of a node runs
// as follows:
//
//   leaf      one task per member (per loop step for cycle groups) on the
//             leaf's devices, each holding the device lock while it runs.
//   temporal  first; then the switch from first's final residency to
//             second's initial one (offloads, then onloads); then second.
//   pipeline  the producer runs its chunks back to back, restoring its
//             initial residency between chunks; each finished chunk goes over
//             the pipeline's link (one transfer at a time); the consumer takes
//             chunk k once it has arrived and its previous chunk and restore
//             are done.
//
// Workers named by the root's initial residency start loaded. Onload
// memory counts from the start of the onload, offload memory is freed at
// its end.

#ifndef FLOWPLAN_SIMULATOR_H_
#define FLOWPLAN_SIMULATOR_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "flowplan/channel.h"
#include "flowplan/cluster.h"
#include "flowplan/graph.h"
#include "flowplan/profile.h"
#include "flowplan/schedule.h"
#include "flowplan/workload.h"

namespace flowplan {

enum class EventKind {
  kTaskStart,
  kTaskEnd,
  kOnload,
  kOffload,
  kLockAcquire,
  kLockRelease,
  kTransfer,
};

std::string_view event_kind_name(EventKind kind);

struct TraceEvent {
  double time_s = 0.0;
  EventKind kind = EventKind::kTaskStart;
  std::string worker;
  std::vector<int> devices;
  int64_t chunk = 0;
  double duration_s = 0.0;  // onload, offload, transfer
};

struct DeviceStats {
  int device = 0;
  double busy_s = 0.0;  // compute tasks only
  int64_t peak_memory_bytes = 0;
};

struct ChannelReport {
  std::string producer;  // node ids of the producer side, '+'-joined
  std::string consumer;
  bool offload_to_host = false;
  int64_t items_enqueued = 0;
  int64_t items_dequeued = 0;
  std::map<int, double> consumer_load;
  std::vector<std::string> notes;
};

struct SimTrace {
  std::vector<TraceEvent> events;
  double makespan_s = 0.0;
  std::vector<DeviceStats> devices;
  std::vector<ChannelReport> channels;
  std::map<std::string, int64_t> chunks_executed;  // leaf invocations per worker
  std::vector<double> generation_item_done_s;      // one per generation item
  std::vector<std::string> violations;             // memory capacity
  bool aborted = false;
  bool event_cap_hit = false;
  int64_t events_processed = 0;
};

struct SimOptions {
  int64_t max_events = 10'000'000;
  BalancePolicy balance;
};

// Throws StructuralError when the schedule does not fit the workflow or the
// cluster, WorkloadError when an explicit-only workload lacks a chunk.
SimTrace simulate(const Schedule& schedule, const WorkflowGraph& graph,
                  const ClusterSpec& cluster, const ProfileTable& costs,
                  const Workload& workload, const SimOptions& options = {});

// Overlapping spans of different holders on one device.
std::vector<std::string> mutual_exclusion_violations(const SimTrace& trace);

struct UtilizationReport {
  std::vector<double> busy_fraction;  // per device
  double mean_busy = 0.0;
  double min_busy = 0.0;
  std::vector<int64_t> peak_memory_bytes;
  // Share of the makespan between the completion of the 95th-percentile
  // generation item and the last one; 0 without generation items.
  double idle_tail_fraction = 0.0;
};

// Throws Error on a trace without events.
UtilizationReport compute_utilization(const SimTrace& trace, const ClusterSpec& cluster);

struct EstimateCheck {
  double estimate_s = 0.0;
  double makespan_s = 0.0;
  double gap = 0.0;  // |makespan - estimate| / estimate
};

EstimateCheck verify_estimate(const Schedule& schedule, const ScheduleEstimate& estimate,
                              const SimTrace& trace);

}  // namespace flowplan

#endif  // FLOWPLAN_SIMULATOR_H_

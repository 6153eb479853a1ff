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

// Worker scheduling: memoized recursion over s-t cuts that picks, for each
// cut, between time-sharing the devices (temporal) and splitting them into
// a chunked pipeline (spatial), searching device splits and chunk sizes.
//
// Cost of a plan S processing a batch B:
//
//   leaf(u)          profiled time of u at (B, n); cycle groups charge the sum
//                    of their members' times once per loop step.
//   temporal(a, b)   time(a) + time(b) + switch(end(a) -> start(b))
//   pipeline(p, c)   T_critical + (B/m - 1) * T_bottleneck with
//                      T_critical   = time(p) + x + time(c)
//                      T_bottleneck = max(time(p) + r(p), x, time(c) + r(c))
//                    where x is the per-chunk channel transfer and r(s) the
//                    switch that restores s to its starting residency before
//                    the next chunk (zero unless s time-shares internally).
//
// start(s)/end(s) are the condensed nodes resident on the devices when s
// begins/finishes. The recursion keeps the best plan per (start, end) pair,
// which makes the search exact despite switch costs depending on them.

#ifndef FLOWPLAN_SCHEDULER_H_
#define FLOWPLAN_SCHEDULER_H_

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "flowplan/cluster.h"
#include "flowplan/graph.h"
#include "flowplan/profile.h"
#include "flowplan/schedule.h"

namespace flowplan {

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

// T_critical + (M/m - 1) * T_bottleneck. Throws GranularityError unless
// m divides M.
double pipelining_time(double t_critical, double t_bottleneck, int64_t total,
                       int64_t granularity);

double temporal_cost(double t_first, double t_second, double switch_overhead);

// Divisors of `total`, ascending, thinned to at most `cap` values spread
// geometrically between 1 and `total`.
std::vector<int64_t> granularity_candidates(int64_t total, int cap);

// (n_s, n_t) with n_s + n_t == devices and both above their minimum,
// ascending in n_s.
std::vector<std::pair<int, int>> enumerate_device_splits(int devices, int min_s,
                                                         int min_t);

enum class ForcedMode { kCollocated, kDisaggregated };

struct SchedulerOptions {
  bool strict_profiles = false;  // reject device-count extrapolation
  int granularity_cap = 8;
  bool use_memo = true;
  int max_nodes = kMaxCutNodes;
};

struct SwitchStep {
  std::string worker;
  SwitchDirection direction = SwitchDirection::kOffload;
  double seconds = 0.0;
  bool waived = false;
};

struct TransferStep {
  const DataEdge* edge = nullptr;
  LocalityTier tier = LocalityTier::kIntraNode;
  int legs = 1;           // 2 when the channel parks data on the host
  double seconds = 0.0;   // per leg
};

struct LeafCost {
  double time_s = kInfiniteTime;
  int64_t memory_bytes = 0;  // per device
  bool feasible = false;
  std::string reason;        // set when infeasible
};

// Binds a workflow to a cluster and a profile table and answers the cost
// questions the scheduler, the oracle and the simulator share. Leaf costs
// are cached; the context is not thread-safe.
class CostModel {
 public:
  CostModel(const WorkflowGraph& graph, const ClusterSpec& cluster,
            const ProfileTable& profiles, SchedulerOptions options = {});

  const WorkflowGraph& graph() const { return graph_; }
  const CondensedGraph& dag() const { return dag_; }
  const ClusterSpec& cluster() const { return cluster_; }
  const ProfileTable& profiles() const { return profiles_; }
  const SchedulerOptions& options() const { return options_; }
  int64_t total_batch() const { return graph_.total_batch; }

  const LeafCost& leaf(int node, int64_t batch, int devices) const;
  // Profiled time of one worker at (batch, devices); one loop step.
  double worker_time(const std::string& worker, int64_t batch, int devices) const;
  int64_t worker_memory(const std::string& worker, int64_t batch, int devices) const;

  // Offloads of nodes in from \ to, then onloads of nodes in to \ from.
  std::vector<SwitchStep> switch_steps(NodeMask from, NodeMask to) const;
  double switch_cost(NodeMask from, NodeMask to) const;

  std::vector<TransferStep> transfer_steps(NodeMask src, NodeMask dst,
                                           int64_t items, LocalityTier tier) const;
  double transfer_cost(NodeMask src, NodeMask dst, int64_t items,
                       LocalityTier tier) const;

 private:
  const WorkflowGraph& graph_;
  CondensedGraph dag_;
  const ClusterSpec& cluster_;
  const ProfileTable& profiles_;
  SchedulerOptions options_;
  std::map<std::string, const WorkerSpec*> workers_;
  mutable std::map<std::tuple<int, int64_t, int>, LeafCost> leaf_cache_;
};

// Everything the cost model says about one concrete plan.
struct PlanEvaluation {
  double time_s = kInfiniteTime;
  double restore_s = 0.0;
  NodeMask start = 0;
  NodeMask end = 0;
  bool feasible = false;
  std::string reason;
  std::map<int, int64_t> peak_memory_by_device;
};

// Direct recursive evaluation of a plan tree; independent of the search.
PlanEvaluation evaluate_schedule(const Schedule& schedule, const CostModel& model);

ScheduleEstimate to_estimate(const PlanEvaluation& eval);

struct ScheduleResult {
  SchedulePtr schedule;  // null when infeasible
  ScheduleEstimate estimate;
};

// Key of one subproblem: which nodes, on how many devices, at which batch,
// starting at which offset within a cluster node (matters for the transfer
// tier only).
struct MemoKey {
  NodeMask nodes = 0;
  int devices = 0;
  int64_t batch = 0;
  int node_offset = 0;
  auto operator<=>(const MemoKey&) const = default;
};

struct MemoStats {
  int64_t lookups = 0;
  int64_t hits = 0;
  int64_t subproblems = 0;
};

// Memoized search. Throws SizeError above options.max_nodes condensed nodes.
ScheduleResult find_schedule(const WorkflowGraph& graph, const ClusterSpec& cluster,
                             const ProfileTable& costs,
                             const SchedulerOptions& options = {},
                             MemoStats* stats = nullptr);

struct OracleLimits {
  int max_nodes = 6;
  int max_devices = 8;
};

// Enumerates every plan tree in the same space and evaluates each one with
// evaluate_schedule. Throws SizeError outside `limits`.
ScheduleResult brute_force_schedule(const WorkflowGraph& graph,
                                    const ClusterSpec& cluster,
                                    const ProfileTable& costs,
                                    const SchedulerOptions& options = {},
                                    OracleLimits limits = {},
                                    int64_t* plans_visited = nullptr);

// Collocated: every node on all devices, time-shared in topological order.
// Disaggregated: a chain of pipelines over the topological order with
// device counts proportional to each side's sequential time.
ScheduleResult forced_mode_schedule(const WorkflowGraph& graph,
                                    const ClusterSpec& cluster,
                                    const ProfileTable& costs, ForcedMode mode,
                                    const SchedulerOptions& options = {});

}  // namespace flowplan

#endif  // FLOWPLAN_SCHEDULER_H_

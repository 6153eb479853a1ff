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

// Workflow graph IR: workers connected by data channels, the cycle
// condensation that turns it into a DAG, and the s-t cut enumeration the
// scheduler recurses over.

#ifndef FLOWPLAN_GRAPH_H_
#define FLOWPLAN_GRAPH_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flowplan {

struct WorkerSpec {
  std::string id;
  std::string kind;
  int min_devices = 1;
  // SPMD workers can process any partial batch; others only the full one.
  bool supports_chunking = true;
  // Workers in the same group share weights, so swapping between them
  // needs no offload/onload.
  std::optional<std::string> weight_sync_group;
  // Loop iterations per invocation when the worker sits inside a cycle.
  int cycle_steps = 1;
};

struct DataEdge {
  std::string src;
  std::string dst;
  int64_t unit_payload_bytes = 0;
  std::string channel_id;
  bool offload_to_host = false;
};

struct WorkflowGraph {
  std::vector<WorkerSpec> workers;
  std::vector<DataEdge> edges;
  int64_t total_batch = 1;

  const WorkerSpec* find_worker(std::string_view id) const;
};

struct Violation {
  std::string code;  // e.g. "duplicate-id", "dangling-edge"
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Never throws: every broken invariant becomes a violation.
ValidationReport validate_graph(const WorkflowGraph& graph);

// Bitset over condensed node indices.
using NodeMask = uint32_t;

// Largest DAG the exhaustive cut enumeration accepts.
inline constexpr int kMaxCutNodes = 12;

struct CondensedNode {
  std::string id;                    // worker id, or members joined by '+'
  std::vector<std::string> members;  // sorted by id
  bool is_group = false;
  int min_devices = 1;
  bool supports_chunking = true;
  int cycle_steps = 1;
};

struct CondensedGraph {
  std::vector<CondensedNode> nodes;          // sorted by id
  std::vector<std::pair<int, int>> edges;    // sorted, deduplicated
  std::vector<DataEdge> crossing_edges;      // worker edges between nodes
  std::map<std::string, int> node_of_worker;

  int size() const { return static_cast<int>(nodes.size()); }
  NodeMask all_mask() const;
  int index_of(std::string_view node_id) const;  // -1 if absent
  // succ[i] / pred[i]: neighbours of node i as masks.
  std::vector<NodeMask> successor_masks() const;
  std::vector<NodeMask> predecessor_masks() const;
};

// Collapses each strongly connected component of two or more workers into
// a single group node. Edges between components are kept and deduplicated.
CondensedGraph condense_cycles(const WorkflowGraph& graph);

// Re-expresses a condensed graph as a workflow whose workers are the nodes.
WorkflowGraph as_workflow(const CondensedGraph& dag, int64_t total_batch);

// Subgraph induced by `mask`, with node order preserved.
CondensedGraph induced_subgraph(const CondensedGraph& dag, NodeMask mask);

bool is_weakly_connected(const CondensedGraph& dag, NodeMask mask);

struct StCut {
  NodeMask source_mask = 0;
  CondensedGraph source_side;
  CondensedGraph sink_side;
};

// Every bipartition (S, T) of a weakly connected DAG with both sides
// non-empty and no edge from T into S, ordered lexicographically by the
// sorted node ids of S. Empty for a single node.
std::vector<StCut> enumerate_st_cuts(const CondensedGraph& dag);

// Cut source masks among the nodes in `within`, same order as
// enumerate_st_cuts. `within` need not be connected.
std::vector<NodeMask> st_cut_masks(const CondensedGraph& dag, NodeMask within);

// Kahn's algorithm with ties broken by node index (which is id order).
std::vector<int> topological_order(const CondensedGraph& dag);

}  // namespace flowplan

#endif  // FLOWPLAN_GRAPH_H_

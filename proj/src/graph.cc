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

#include "flowplan/graph.h"

#include <algorithm>
#include <bit>
#include <functional>
#include <queue>
#include <set>

#include "flowplan/error.h"

namespace flowplan {

const WorkerSpec* WorkflowGraph::find_worker(std::string_view id) const {
  for (const auto& w : workers) {
    if (w.id == id) return &w;
  }
  return nullptr;
}

ValidationReport validate_graph(const WorkflowGraph& graph) {
  ValidationReport report;
  auto add = [&report](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };

  if (graph.total_batch < 1) {
    add("non-positive-batch",
        "total_batch must be >= 1, got " + std::to_string(graph.total_batch));
  }
  if (graph.workers.empty()) add("empty-graph", "workflow has no workers");

  std::set<std::string> ids;
  std::set<std::string> reported_dups;
  for (const auto& w : graph.workers) {
    if (w.id.empty()) add("empty-id", "worker with empty id");
    if (!ids.insert(w.id).second && reported_dups.insert(w.id).second) {
      add("duplicate-id", "duplicate worker id \"" + w.id + "\"");
    }
    if (w.min_devices < 1) {
      add("min-devices", "worker \"" + w.id + "\" has min_devices " +
                             std::to_string(w.min_devices) + " < 1");
    }
    if (w.cycle_steps < 1) {
      add("cycle-steps", "worker \"" + w.id + "\" has cycle_steps " +
                             std::to_string(w.cycle_steps) + " < 1");
    }
  }

  bool dangling = false;
  for (const auto& e : graph.edges) {
    const std::string name = e.src + "->" + e.dst;
    for (const std::string* end : {&e.src, &e.dst}) {
      if (!ids.contains(*end)) {
        dangling = true;
        add("dangling-edge",
            "edge " + name + " references unknown worker \"" + *end + "\"");
      }
    }
    if (e.src == e.dst) add("self-loop", "edge " + name + " is a self-loop");
    if (e.unit_payload_bytes < 0) {
      add("negative-payload", "edge " + name + " has negative payload");
    }
  }

  if (!dangling && ids.size() > 1) {
    // Union-find over unique ids.
    std::map<std::string, std::string> parent;
    for (const auto& id : ids) parent[id] = id;
    std::function<std::string(const std::string&)> find =
        [&](const std::string& x) -> std::string {
      if (parent[x] == x) return x;
      return parent[x] = find(parent[x]);
    };
    for (const auto& e : graph.edges) parent[find(e.src)] = find(e.dst);
    std::set<std::string> roots;
    for (const auto& id : ids) roots.insert(find(id));
    if (roots.size() > 1) {
      add("disconnected", "workflow is not weakly connected (" +
                              std::to_string(roots.size()) + " components)");
    }
  }
  return report;
}

NodeMask CondensedGraph::all_mask() const {
  return size() >= 32 ? ~NodeMask{0} : (NodeMask{1} << size()) - 1;
}

int CondensedGraph::index_of(std::string_view node_id) const {
  for (int i = 0; i < size(); ++i) {
    if (nodes[i].id == node_id) return i;
  }
  return -1;
}

std::vector<NodeMask> CondensedGraph::successor_masks() const {
  std::vector<NodeMask> succ(nodes.size(), 0);
  for (auto [a, b] : edges) succ[a] |= NodeMask{1} << b;
  return succ;
}

std::vector<NodeMask> CondensedGraph::predecessor_masks() const {
  std::vector<NodeMask> pred(nodes.size(), 0);
  for (auto [a, b] : edges) pred[b] |= NodeMask{1} << a;
  return pred;
}

namespace {

// Tarjan's SCC over a small adjacency list.
class SccFinder {
 public:
  explicit SccFinder(const std::vector<std::vector<int>>& adj)
      : adj_(adj), index_(adj.size(), -1), low_(adj.size(), 0),
        on_stack_(adj.size(), false) {}

  std::vector<std::vector<int>> run() {
    for (int v = 0; v < static_cast<int>(adj_.size()); ++v) {
      if (index_[v] < 0) visit(v);
    }
    return components_;
  }

 private:
  void visit(int v) {
    index_[v] = low_[v] = counter_++;
    stack_.push_back(v);
    on_stack_[v] = true;
    for (int w : adj_[v]) {
      if (index_[w] < 0) {
        visit(w);
        low_[v] = std::min(low_[v], low_[w]);
      } else if (on_stack_[w]) {
        low_[v] = std::min(low_[v], index_[w]);
      }
    }
    if (low_[v] == index_[v]) {
      std::vector<int> comp;
      int w;
      do {
        w = stack_.back();
        stack_.pop_back();
        on_stack_[w] = false;
        comp.push_back(w);
      } while (w != v);
      components_.push_back(std::move(comp));
    }
  }

  const std::vector<std::vector<int>>& adj_;
  std::vector<int> index_, low_;
  std::vector<bool> on_stack_;
  std::vector<int> stack_;
  std::vector<std::vector<int>> components_;
  int counter_ = 0;
};

}  // namespace

CondensedGraph condense_cycles(const WorkflowGraph& graph) {
  std::vector<const WorkerSpec*> workers;
  std::map<std::string, int> pos;
  for (const auto& w : graph.workers) {
    if (pos.emplace(w.id, 0).second) workers.push_back(&w);
  }
  std::sort(workers.begin(), workers.end(),
            [](auto* a, auto* b) { return a->id < b->id; });
  for (int i = 0; i < static_cast<int>(workers.size()); ++i) {
    pos[workers[i]->id] = i;
  }

  std::vector<std::vector<int>> adj(workers.size());
  for (const auto& e : graph.edges) {
    auto s = pos.find(e.src), d = pos.find(e.dst);
    if (s == pos.end() || d == pos.end()) {
      throw StructuralError("edge " + e.src + "->" + e.dst +
                            " references an unknown worker");
    }
    adj[s->second].push_back(d->second);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  CondensedGraph dag;
  for (auto& comp : SccFinder(adj).run()) {
    CondensedNode node;
    std::sort(comp.begin(), comp.end());
    node.is_group = comp.size() > 1;
    node.min_devices = 1;
    for (int w : comp) {
      const WorkerSpec& spec = *workers[w];
      node.members.push_back(spec.id);
      node.min_devices = std::max(node.min_devices, spec.min_devices);
      node.supports_chunking = node.supports_chunking && spec.supports_chunking;
      if (node.is_group) {
        node.cycle_steps = std::max(node.cycle_steps, spec.cycle_steps);
      }
    }
    for (const auto& m : node.members) {
      if (!node.id.empty()) node.id += '+';
      node.id += m;
    }
    dag.nodes.push_back(std::move(node));
  }
  std::sort(dag.nodes.begin(), dag.nodes.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (int i = 0; i < dag.size(); ++i) {
    for (const auto& m : dag.nodes[i].members) dag.node_of_worker[m] = i;
  }

  std::set<std::pair<int, int>> edge_set;
  for (const auto& e : graph.edges) {
    int a = dag.node_of_worker.at(e.src), b = dag.node_of_worker.at(e.dst);
    if (a == b) continue;
    edge_set.emplace(a, b);
    dag.crossing_edges.push_back(e);
  }
  dag.edges.assign(edge_set.begin(), edge_set.end());
  return dag;
}

WorkflowGraph as_workflow(const CondensedGraph& dag, int64_t total_batch) {
  WorkflowGraph g;
  g.total_batch = total_batch;
  for (const auto& n : dag.nodes) {
    WorkerSpec w;
    w.id = n.id;
    w.kind = n.is_group ? "group" : "worker";
    w.min_devices = n.min_devices;
    w.supports_chunking = n.supports_chunking;
    w.cycle_steps = n.cycle_steps;
    g.workers.push_back(std::move(w));
  }
  for (auto [a, b] : dag.edges) {
    g.edges.push_back({dag.nodes[a].id, dag.nodes[b].id, 0, "", false});
  }
  return g;
}

CondensedGraph induced_subgraph(const CondensedGraph& dag, NodeMask mask) {
  CondensedGraph sub;
  std::vector<int> remap(dag.nodes.size(), -1);
  for (int i = 0; i < dag.size(); ++i) {
    if (mask >> i & 1) {
      remap[i] = sub.size();
      sub.nodes.push_back(dag.nodes[i]);
      for (const auto& m : dag.nodes[i].members) sub.node_of_worker[m] = remap[i];
    }
  }
  for (auto [a, b] : dag.edges) {
    if (remap[a] >= 0 && remap[b] >= 0) sub.edges.emplace_back(remap[a], remap[b]);
  }
  for (const auto& e : dag.crossing_edges) {
    if (sub.node_of_worker.contains(e.src) && sub.node_of_worker.contains(e.dst)) {
      sub.crossing_edges.push_back(e);
    }
  }
  return sub;
}

bool is_weakly_connected(const CondensedGraph& dag, NodeMask mask) {
  if (mask == 0) return true;
  std::vector<NodeMask> nbr(dag.nodes.size(), 0);
  for (auto [a, b] : dag.edges) {
    nbr[a] |= NodeMask{1} << b;
    nbr[b] |= NodeMask{1} << a;
  }
  NodeMask seen = mask & (~mask + 1);  // lowest set bit
  NodeMask frontier = seen;
  while (frontier) {
    NodeMask next = 0;
    for (int i = 0; i < dag.size(); ++i) {
      if (frontier >> i & 1) next |= nbr[i];
    }
    next &= mask & ~seen;
    seen |= next;
    frontier = next;
  }
  return seen == mask;
}

namespace {

// Lexicographic comparison of the ascending index lists of two masks.
bool mask_lex_less(NodeMask a, NodeMask b) {
  while (a && b) {
    NodeMask la = a & (~a + 1), lb = b & (~b + 1);
    if (la != lb) return la < lb;
    a ^= la;
    b ^= lb;
  }
  return a == 0 && b != 0;
}

}  // namespace

std::vector<NodeMask> st_cut_masks(const CondensedGraph& dag, NodeMask within) {
  std::vector<NodeMask> cuts;
  if (std::popcount(within) < 2) return cuts;
  const auto succ = dag.successor_masks();
  for (NodeMask s = (within - 1) & within; s; s = (s - 1) & within) {
    NodeMask t = within & ~s;
    bool ok = true;
    for (int i = 0; ok && i < dag.size(); ++i) {
      if ((t >> i & 1) && (succ[i] & s)) ok = false;
    }
    if (ok) cuts.push_back(s);
  }
  std::sort(cuts.begin(), cuts.end(), mask_lex_less);
  return cuts;
}

std::vector<StCut> enumerate_st_cuts(const CondensedGraph& dag) {
  if (dag.size() > kMaxCutNodes) {
    throw SizeError("cut enumeration supports at most " +
                    std::to_string(kMaxCutNodes) + " condensed nodes, got " +
                    std::to_string(dag.size()));
  }
  std::vector<StCut> out;
  if (dag.size() < 2) return out;
  if (!is_weakly_connected(dag, dag.all_mask())) {
    throw StructuralError("cut enumeration requires a weakly connected DAG");
  }
  for (NodeMask s : st_cut_masks(dag, dag.all_mask())) {
    out.push_back({s, induced_subgraph(dag, s),
                   induced_subgraph(dag, dag.all_mask() & ~s)});
  }
  return out;
}

std::vector<int> topological_order(const CondensedGraph& dag) {
  std::vector<int> indegree(dag.nodes.size(), 0);
  std::vector<std::vector<int>> out(dag.nodes.size());
  for (auto [a, b] : dag.edges) {
    ++indegree[b];
    out[a].push_back(b);
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int i = 0; i < dag.size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int w : out[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  if (static_cast<int>(order.size()) != dag.size()) {
    throw StructuralError("cycle detected in condensed graph");
  }
  return order;
}

}  // namespace flowplan

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

#include <doctest.h>

#include <algorithm>
#include <bit>
#include <random>
#include <set>

#include "flowplan/error.h"
#include "flowplan/graph.h"
#include "support.h"

namespace flowplan {
namespace {

using testing::edge;
using testing::worker;

WorkflowGraph chain(std::vector<std::string> ids, int64_t batch = 4) {
  WorkflowGraph g;
  g.total_batch = batch;
  for (const auto& id : ids) g.workers.push_back(worker(id));
  for (size_t i = 1; i < ids.size(); ++i) g.edges.push_back(edge(ids[i - 1], ids[i]));
  return g;
}

WorkflowGraph diamond() {
  WorkflowGraph g = chain({"A", "B", "D"});
  g.workers.push_back(worker("C"));
  g.edges.push_back(edge("A", "C"));
  g.edges.push_back(edge("C", "D"));
  return g;
}

std::vector<std::string> ids_of(const CondensedGraph& g) {
  std::vector<std::string> out;
  for (const auto& n : g.nodes) out.push_back(n.id);
  return out;
}

// Reference SCCs from the transitive closure.
std::set<std::set<std::string>> closure_components(const WorkflowGraph& g) {
  const size_t n = g.workers.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  auto idx = [&](const std::string& id) {
    for (size_t i = 0; i < n; ++i) {
      if (g.workers[i].id == id) return i;
    }
    return n;
  };
  for (size_t i = 0; i < n; ++i) reach[i][i] = true;
  for (const auto& e : g.edges) reach[idx(e.src)][idx(e.dst)] = true;
  for (size_t k = 0; k < n; ++k)
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  std::set<std::set<std::string>> out;
  for (size_t i = 0; i < n; ++i) {
    std::set<std::string> c;
    for (size_t j = 0; j < n; ++j) {
      if (reach[i][j] && reach[j][i]) c.insert(g.workers[j].id);
    }
    out.insert(c);
  }
  return out;
}

// Reference cut list: filter every proper bipartition.
std::vector<NodeMask> filtered_bipartitions(const CondensedGraph& dag) {
  std::vector<std::vector<int>> lists;
  const NodeMask all = dag.all_mask();
  for (NodeMask s = 1; s < all; ++s) {
    bool ok = true;
    for (auto [a, b] : dag.edges) {
      if (!(s >> a & 1) && (s >> b & 1)) ok = false;
    }
    if (!ok) continue;
    std::vector<int> members;
    for (int i = 0; i < dag.size(); ++i) {
      if (s >> i & 1) members.push_back(i);
    }
    lists.push_back(members);
  }
  std::sort(lists.begin(), lists.end());
  std::vector<NodeMask> out;
  for (const auto& l : lists) {
    NodeMask m = 0;
    for (int i : l) m |= NodeMask{1} << i;
    out.push_back(m);
  }
  return out;
}

WorkflowGraph random_dag(std::mt19937_64& rng, int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  std::shuffle(names.begin(), names.end(), rng);  // id order differs from topo order
  WorkflowGraph g;
  for (const auto& id : names) g.workers.push_back(worker(id));
  std::uniform_int_distribution<int> coin(0, 2);
  for (int j = 1; j < n; ++j) {
    g.edges.push_back(edge(names[std::uniform_int_distribution<int>(0, j - 1)(rng)], names[j]));
    for (int i = 0; i < j; ++i) {
      if (coin(rng) == 0) g.edges.push_back(edge(names[i], names[j]));
    }
  }
  return g;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("validate_graph accepts a clean chain") {
  CHECK(validate_graph(chain({"A", "B"})).ok());
}

TEST_CASE("validate_graph names the unknown endpoint") {
  WorkflowGraph g = chain({"A", "B"});
  g.edges.push_back(edge("B", "X"));
  const auto r = validate_graph(g);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].code == "dangling-edge");
  CHECK(r.violations[0].message.find("\"X\"") != std::string::npos);
}

TEST_CASE("validate_graph reports one duplicate id") {
  WorkflowGraph g = chain({"A", "B"});
  g.workers.push_back(worker("A"));
  const auto r = validate_graph(g);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].code == "duplicate-id");
}

TEST_CASE("validate_graph edge cases") {
  WorkflowGraph g = chain({"A", "B"}, 0);
  CHECK(validate_graph(g).violations.at(0).code == "non-positive-batch");

  g = chain({"A", "B"});
  g.edges.push_back(edge("A", "A"));
  CHECK(validate_graph(g).violations.at(0).code == "self-loop");

  g = chain({"A", "B"});
  g.workers[0].min_devices = 0;
  CHECK(validate_graph(g).violations.at(0).code == "min-devices");

  g = chain({"A", "B"});
  g.workers.push_back(worker("C"));
  CHECK(validate_graph(g).violations.at(0).code == "disconnected");

  g = chain({"A", "B"});
  g.edges[0].unit_payload_bytes = -1;
  CHECK(validate_graph(g).violations.at(0).code == "negative-payload");

  CHECK(validate_graph(WorkflowGraph{}).violations.at(0).code == "empty-graph");
}

TEST_CASE("condense_cycles leaves a chain alone") {
  const CondensedGraph dag = condense_cycles(chain({"A", "B", "C"}));
  CHECK(ids_of(dag) == std::vector<std::string>{"A", "B", "C"});
  CHECK(dag.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  for (const auto& n : dag.nodes) CHECK_FALSE(n.is_group);
}

TEST_CASE("condense_cycles groups a two-cycle") {
  WorkflowGraph g = chain({"A", "B", "C"});
  g.edges.push_back(edge("B", "A"));
  const CondensedGraph dag = condense_cycles(g);
  CHECK(ids_of(dag) == std::vector<std::string>{"A+B", "C"});
  CHECK(dag.nodes[0].is_group);
  CHECK(dag.nodes[0].members == std::vector<std::string>{"A", "B"});
  CHECK(dag.edges == std::vector<std::pair<int, int>>{{0, 1}});
}

TEST_CASE("condense_cycles on the embodied loop") {
  WorkflowGraph g;
  g.total_batch = 8;
  for (const char* id : {"gen", "sim", "train"}) g.workers.push_back(worker(id));
  g.workers[0].min_devices = 2;
  g.workers[1].supports_chunking = false;
  g.workers[0].cycle_steps = 3;
  g.edges = {edge("gen", "sim"), edge("sim", "gen"), edge("gen", "train")};
  const CondensedGraph dag = condense_cycles(g);
  CHECK(ids_of(dag) == std::vector<std::string>{"gen+sim", "train"});
  CHECK(dag.nodes[0].min_devices == 2);
  CHECK_FALSE(dag.nodes[0].supports_chunking);
  CHECK(dag.nodes[0].cycle_steps == 3);
  CHECK(dag.node_of_worker.at("sim") == 0);
}

TEST_CASE("condense_cycles matches the transitive-closure components") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    WorkflowGraph g = random_dag(rng, n);
    const int back = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int b = 0; b < back && n > 1; ++b) {
      const auto& e = g.edges[std::uniform_int_distribution<size_t>(0, g.edges.size() - 1)(rng)];
      g.edges.push_back(edge(e.dst, e.src));
    }
    const CondensedGraph dag = condense_cycles(g);
    std::set<std::set<std::string>> got;
    for (const auto& node : dag.nodes) got.insert({node.members.begin(), node.members.end()});
    CHECK(got == closure_components(g));
    CHECK_NOTHROW(topological_order(dag));
  }
}

TEST_CASE("condense_cycles is idempotent") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    WorkflowGraph g = random_dag(rng, std::uniform_int_distribution<int>(2, 7)(rng));
    g.edges.push_back(edge(g.edges.back().dst, g.edges.back().src));
    const CondensedGraph once = condense_cycles(g);
    const CondensedGraph twice = condense_cycles(as_workflow(once, 4));
    CHECK(ids_of(once) == ids_of(twice));
    CHECK(once.edges == twice.edges);
  }
}

TEST_CASE("st cuts of small graphs") {
  CHECK(enumerate_st_cuts(condense_cycles(chain({"A"}))).empty());

  auto cuts = enumerate_st_cuts(condense_cycles(chain({"A", "B"})));
  REQUIRE(cuts.size() == 1);
  CHECK(ids_of(cuts[0].source_side) == std::vector<std::string>{"A"});
  CHECK(ids_of(cuts[0].sink_side) == std::vector<std::string>{"B"});

  cuts = enumerate_st_cuts(condense_cycles(chain({"A", "B", "C"})));
  REQUIRE(cuts.size() == 2);
  CHECK(ids_of(cuts[0].source_side) == std::vector<std::string>{"A"});
  CHECK(ids_of(cuts[1].source_side) == std::vector<std::string>{"A", "B"});
}

TEST_CASE("st cuts of the diamond") {
  const auto cuts = enumerate_st_cuts(condense_cycles(diamond()));
  std::vector<std::vector<std::string>> sources;
  for (const auto& c : cuts) sources.push_back(ids_of(c.source_side));
  // Lexicographic over the sorted source ids.
  CHECK(sources == std::vector<std::vector<std::string>>{
                       {"A"}, {"A", "B"}, {"A", "B", "C"}, {"A", "C"}});
  for (const auto& c : cuts) {
    CHECK(c.source_side.size() + c.sink_side.size() == 4);
  }
}

TEST_CASE("st cuts equal the filtered bipartitions on random DAGs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 10)(rng);
    const CondensedGraph dag = condense_cycles(random_dag(rng, n));
    const auto cuts = enumerate_st_cuts(dag);
    std::vector<NodeMask> got;
    for (const auto& c : cuts) {
      got.push_back(c.source_mask);
      // Disjoint, exhaustive, no sink-to-source edge.
      const NodeMask t = dag.all_mask() & ~c.source_mask;
      CHECK(c.source_side.size() == std::popcount(c.source_mask));
      CHECK(c.sink_side.size() == std::popcount(t));
      for (auto [a, b] : dag.edges) CHECK_FALSE(((t >> a & 1) && (c.source_mask >> b & 1)));
    }
    CHECK(got == filtered_bipartitions(dag));
  }
}

TEST_CASE("st cut enumeration guards") {
  WorkflowGraph g = chain({"A", "B"});
  g.workers.push_back(worker("C"));
  CHECK_THROWS_AS(enumerate_st_cuts(condense_cycles(g)), StructuralError);

  std::vector<std::string> ids;
  for (int i = 0; i < kMaxCutNodes + 1; ++i) ids.push_back("n" + std::to_string(100 + i));
  CHECK_THROWS_AS(enumerate_st_cuts(condense_cycles(chain(ids))), SizeError);
}

TEST_CASE("topological order") {
  auto names = [](const CondensedGraph& dag) {
    std::vector<std::string> out;
    for (int i : topological_order(dag)) out.push_back(dag.nodes[i].id);
    return out;
  };
  CHECK(names(condense_cycles(chain({"A", "B", "C"}))) == std::vector<std::string>{"A", "B", "C"});
  CHECK(names(condense_cycles(diamond())) == std::vector<std::string>{"A", "B", "C", "D"});
  CHECK(names(condense_cycles(chain({"solo"}))) == std::vector<std::string>{"solo"});
  // Reverse-named chain: order follows edges, not ids.
  CHECK(names(condense_cycles(chain({"z", "y", "x"}))) == std::vector<std::string>{"z", "y", "x"});

  CondensedGraph cyclic = condense_cycles(chain({"A", "B"}));
  cyclic.edges.push_back({1, 0});
  CHECK_THROWS_AS(topological_order(cyclic), StructuralError);
}

TEST_CASE("topological order is a permutation respecting edges") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const CondensedGraph dag =
        condense_cycles(random_dag(rng, std::uniform_int_distribution<int>(1, 10)(rng)));
    const auto order = topological_order(dag);
    std::vector<int> pos(dag.size(), -1);
    for (size_t i = 0; i < order.size(); ++i) pos[order[i]] = static_cast<int>(i);
    CHECK(std::count(pos.begin(), pos.end(), -1) == 0);
    for (auto [a, b] : dag.edges) CHECK(pos[a] < pos[b]);
  }
}

}  // TEST_SUITE

}  // namespace flowplan

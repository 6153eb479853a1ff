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

#include <cmath>

#include "flowplan/error.h"
#include "flowplan/io.h"
#include "flowplan/scheduler.h"
#include "support.h"

namespace flowplan {
namespace {

std::string scenario_file(const std::string& scenario, const std::string& name) {
  return read_file(std::string(FLOWPLAN_SOURCE_DIR) + "/scenarios/" + scenario + "/" + name);
}

std::string parse_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

const char* kSmallWorkflow = R"({
  "format_version": 1,
  "total_batch": 4,
  "workers": [{"id": "A", "kind": "compute", "min_devices": 1, "supports_chunking": true},
              {"id": "B", "kind": "compute", "min_devices": 2, "supports_chunking": false}],
  "edges": [{"src": "A", "dst": "B", "unit_payload_bytes": 8}]
})";

}  // namespace

TEST_SUITE("io") {

TEST_CASE("bundled scenarios parse") {
  for (const char* name : {"grpo", "embodied", "libero"}) {
    CAPTURE(name);
    std::vector<std::string> warnings;
    ParseOptions strict{true, &warnings};
    const WorkflowGraph g = parse_workflow(scenario_file(name, "workflow.json"), name, strict);
    CHECK(validate_graph(g).ok());
    const ProfileData p = parse_profiles(scenario_file(name, "profiles.json"), name, strict);
    CHECK_FALSE(p.points.empty());
    const ClusterSpec c = parse_cluster(scenario_file(name, "cluster.json"), name, strict);
    CHECK(c.total_devices() == 8);
    CHECK(warnings.empty());
  }
}

TEST_CASE("workflow fields") {
  const WorkflowGraph g = parse_workflow(kSmallWorkflow, "wf");
  REQUIRE(g.workers.size() == 2);
  CHECK(g.total_batch == 4);
  CHECK(g.workers[1].min_devices == 2);
  CHECK(g.workers[0].supports_chunking);
  CHECK_FALSE(g.workers[1].supports_chunking);
  CHECK_FALSE(g.workers[0].weight_sync_group.has_value());
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].unit_payload_bytes == 8);
  CHECK_FALSE(g.edges[0].offload_to_host);
}

TEST_CASE("errors point at the offending value") {
  const std::string bad_type = parse_error([] {
    parse_workflow(R"({"format_version": 1, "total_batch": 4,
                       "workers": [{"id": "A", "kind": "x", "min_devices": "two",
                                     "supports_chunking": true}], "edges": []})",
                   "wf.json");
  });
  CHECK(bad_type.find("wf.json: /workers/0/min_devices:") == 0);

  const std::string missing = parse_error([] {
    parse_cluster(R"({"format_version": 1, "num_nodes": 1})", "c.json");
  });
  CHECK(missing.find("c.json: ") == 0);
  CHECK(missing.find("devices_per_node") != std::string::npos);

  const std::string syntax = parse_error([] { parse_profiles("{\n  \"points\": [,]\n}", "p.json"); });
  CHECK(syntax.find("p.json:2:") == 0);

  const std::string negative = parse_error([] {
    parse_workload(R"({"format_version": 1, "chunks": [{"worker": "A", "chunk": 0, "time_s": -1}]})",
                   "w.json");
  });
  CHECK(negative.find("w.json: /chunks/0/time_s: must be > 0") == 0);
}

TEST_CASE("unknown fields warn, or fail when strict") {
  const std::string text = R"({"format_version": 1, "num_nodes": 1, "devices_per_node": 2,
    "device_memory_bytes": 100, "colour": "blue",
    "tier_bandwidth_bytes_per_s": {"intra_node": 1, "inter_node": 1, "host_link": 1}})";
  std::vector<std::string> warnings;
  const ClusterSpec c = parse_cluster(text, "c.json", {false, &warnings});
  CHECK(c.devices_per_node == 2);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("colour") != std::string::npos);
  CHECK_THROWS_AS(parse_cluster(text, "c.json", {true, nullptr}), ParseError);
}

TEST_CASE("format_version") {
  const std::string unversioned = R"({"total_batch": 1, "workers": [{"id": "A", "kind": "x", "min_devices": 1,
      "supports_chunking": true}], "edges": []})";
  std::vector<std::string> warnings;
  CHECK_NOTHROW(parse_workflow(unversioned, "wf", {false, &warnings}));
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS(parse_workflow(unversioned, "wf", {true, nullptr}), ParseError);
  const std::string future = R"({"format_version": 2, "total_batch": 1, "workers": [], "edges": []})";
  CHECK(parse_error([&] { parse_workflow(future, "wf"); }).find("unsupported format_version 2") !=
        std::string::npos);
}

TEST_CASE("invalid clusters are rejected") {
  CHECK_THROWS_AS(parse_cluster(R"({"format_version": 1, "num_nodes": 1, "devices_per_node": 0,
      "device_memory_bytes": 1,
      "tier_bandwidth_bytes_per_s": {"intra_node": 1, "inter_node": 1, "host_link": 1}})",
                                "c"),
                  ParseError);
}

TEST_CASE("workload files") {
  const Workload w = parse_workload(R"({"format_version": 1, "explicit_only": true, "seed": 9,
    "chunks": [{"worker": "A", "chunk": 1, "time_s": 2.5}],
    "item_factors": [{"worker": "gen", "factors": [1, 10, 1]}],
    "item_payload_bytes": [{"src": "A", "dst": "B", "bytes": [4, 0]}]})",
                                    "w");
  CHECK(w.explicit_only);
  CHECK(w.seed == 9);
  CHECK(w.chunk_time_s.at({"A", 1}) == 2.5);
  CHECK(w.item_factor.at("gen") == std::vector<double>{1, 10, 1});
  CHECK(w.item_payload_bytes.at({"A", "B"}) == std::vector<int64_t>{4, 0});
}

TEST_CASE("schedules round-trip") {
  const WorkflowGraph g = parse_workflow(scenario_file("grpo", "workflow.json"), "wf");
  const ProfileData pd = parse_profiles(scenario_file("grpo", "profiles.json"), "p");
  const ProfileTable t = fit_profile(pd.points, pd.switches).table;
  const ClusterSpec c = parse_cluster(scenario_file("grpo", "cluster.json"), "c");
  const ScheduleResult r = find_schedule(g, c, t);
  REQUIRE(r.schedule);
  const ScheduleDocument doc{"auto", g.total_batch, c.total_devices(), r.estimate, r.schedule};
  const std::string text = schedule_to_json(doc);
  const ScheduleDocument back = parse_schedule(text, "s", {true, nullptr});
  CHECK(back.mode == "auto");
  CHECK(back.total_batch == 256);
  CHECK(back.num_devices == 8);
  CHECK(to_string(*back.schedule) == to_string(*r.schedule));
  CHECK(back.estimate.total_time_s == r.estimate.total_time_s);
  CHECK(back.estimate.peak_memory_by_device == r.estimate.peak_memory_by_device);
  CHECK(schedule_to_json(back) == text);
  CHECK(text.back() == '\n');
}

TEST_CASE("infeasible schedules serialize without a tree") {
  ScheduleDocument doc;
  doc.mode = "disaggregated";
  doc.total_batch = 4;
  doc.num_devices = 1;
  doc.estimate.total_time_s = kInfiniteTime;
  doc.estimate.binding_constraint = "too small";
  const std::string text = schedule_to_json(doc);
  CHECK(text.find("\"total_time_s\": null") != std::string::npos);
  const ScheduleDocument back = parse_schedule(text, "s");
  CHECK_FALSE(back.schedule);
  CHECK(std::isinf(back.estimate.total_time_s));
  CHECK(back.estimate.binding_constraint == "too small");
}

TEST_CASE("traces serialize") {
  const WorkflowGraph g = parse_workflow(kSmallWorkflow, "wf");
  SimTrace trace;
  trace.makespan_s = 2.0;
  trace.events.push_back({0.0, EventKind::kTaskStart, "A", {0}, 0, 0.0});
  trace.events.push_back({2.0, EventKind::kTaskEnd, "A", {0}, 0, 0.0});
  trace.devices.push_back({0, 2.0, 10});
  UtilizationReport u = compute_utilization(trace, testing::cluster(1, 1));
  const std::string text = trace_to_json(trace, u, {2.0, 2.0, 0.0});
  CHECK(text.find("\"makespan_s\": 2") != std::string::npos);
  CHECK(text.find("\"task-start\"") != std::string::npos);
  CHECK(trace_to_json(trace, u, {2.0, 2.0, 0.0}) == text);
}

}  // TEST_SUITE

}  // namespace flowplan

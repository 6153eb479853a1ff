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
#include <random>

#include "flowplan/scheduler.h"
#include "support.h"

namespace flowplan {
namespace {

constexpr double kTol = 1e-9;

bool close(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= kTol * std::max(1.0, std::abs(b));
}

}  // namespace

TEST_SUITE("scheduler-properties") {

TEST_CASE("search agrees with exhaustive enumeration") {
  for (double cycles : {0.0, 0.4}) {
    std::mt19937_64 rng(cycles == 0.0 ? 11 : 12);
    testing::RandomShape shape;
    shape.cycle_probability = cycles;
    for (int i = 0; i < 80; ++i) {
      const auto inst = testing::random_instance(rng, shape);
      CAPTURE(inst.label);
      CAPTURE(i);
      const ScheduleResult fast = find_schedule(inst.graph, inst.cluster, inst.profiles);
      const ScheduleResult slow = brute_force_schedule(inst.graph, inst.cluster, inst.profiles);
      CHECK(fast.estimate.feasible == slow.estimate.feasible);
      CHECK(close(fast.estimate.total_time_s, slow.estimate.total_time_s));
    }
  }
}

TEST_CASE("memoization does not change the answer") {
  std::mt19937_64 rng(21);
  testing::RandomShape shape;
  shape.max_workers = 4;
  shape.max_devices = 6;
  SchedulerOptions plain;
  plain.use_memo = false;
  for (int i = 0; i < 40; ++i) {
    const auto inst = testing::random_instance(rng, shape);
    CAPTURE(inst.label);
    MemoStats with_stats, without_stats;
    const ScheduleResult a = find_schedule(inst.graph, inst.cluster, inst.profiles, {}, &with_stats);
    const ScheduleResult b =
        find_schedule(inst.graph, inst.cluster, inst.profiles, plain, &without_stats);
    CHECK(a.estimate.total_time_s == b.estimate.total_time_s);
    CHECK((a.schedule == nullptr) == (b.schedule == nullptr));
    if (a.schedule && b.schedule) CHECK(to_string(*a.schedule) == to_string(*b.schedule));
    CHECK(without_stats.hits == 0);
    CHECK(with_stats.subproblems <= without_stats.subproblems);
  }
}

TEST_CASE("schedules are well-formed and their estimates reproducible") {
  std::mt19937_64 rng(31);
  testing::RandomShape shape;
  shape.max_workers = 6;
  shape.cycle_probability = 0.2;
  int feasible = 0;
  for (int i = 0; i < 150; ++i) {
    const auto inst = testing::random_instance(rng, shape);
    CAPTURE(inst.label);
    const ScheduleResult r = find_schedule(inst.graph, inst.cluster, inst.profiles);
    if (!r.schedule) {
      CHECK_FALSE(r.estimate.binding_constraint.empty());
      continue;
    }
    ++feasible;
    const CondensedGraph dag = condense_cycles(inst.graph);
    CHECK(check_schedule(*r.schedule, dag, inst.graph.total_batch, inst.cluster).empty());
    CHECK(r.schedule->devices.size() == static_cast<size_t>(inst.cluster.total_devices()));
    CostModel model(inst.graph, inst.cluster, inst.profiles);
    const PlanEvaluation eval = evaluate_schedule(*r.schedule, model);
    CHECK(eval.feasible);
    CHECK(eval.time_s == r.estimate.total_time_s);
    for (const auto& [device, bytes] : r.estimate.peak_memory_by_device) {
      CHECK(bytes <= inst.cluster.device_memory_bytes);
    }
    const ScheduleResult again = find_schedule(inst.graph, inst.cluster, inst.profiles);
    CHECK(to_string(*again.schedule) == to_string(*r.schedule));
  }
  CHECK(feasible > 75);
}

TEST_CASE("search never loses to a forced mode") {
  std::mt19937_64 rng(41);
  testing::RandomShape shape;
  shape.max_workers = 6;
  for (int i = 0; i < 150; ++i) {
    const auto inst = testing::random_instance(rng, shape);
    CAPTURE(inst.label);
    const double best = find_schedule(inst.graph, inst.cluster, inst.profiles).estimate.total_time_s;
    for (ForcedMode mode : {ForcedMode::kCollocated, ForcedMode::kDisaggregated}) {
      const ScheduleResult f = forced_mode_schedule(inst.graph, inst.cluster, inst.profiles, mode);
      if (!f.schedule) continue;
      CHECK(f.estimate.feasible);
      CHECK(best <= f.estimate.total_time_s * (1 + kTol));
      const CondensedGraph dag = condense_cycles(inst.graph);
      CHECK(check_schedule(*f.schedule, dag, inst.graph.total_batch, inst.cluster).empty());
    }
  }
}

}  // TEST_SUITE

}  // namespace flowplan

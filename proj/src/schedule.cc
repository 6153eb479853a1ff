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

#include "flowplan/schedule.h"

#include <algorithm>
#include <set>

#include "flowplan/error.h"

namespace flowplan {

SchedulePtr Schedule::leaf(std::string node_id, std::vector<std::string> workers,
                           std::vector<int> devices, int64_t batch) {
  auto s = std::make_shared<Schedule>();
  s->kind = ScheduleKind::kLeaf;
  s->node_id = std::move(node_id);
  std::sort(workers.begin(), workers.end());
  s->workers = std::move(workers);
  std::sort(devices.begin(), devices.end());
  s->devices = std::move(devices);
  s->batch = batch;
  return s;
}

SchedulePtr Schedule::temporal(SchedulePtr first, SchedulePtr second) {
  if (!first || !second) throw StructuralError("temporal node needs two children");
  auto s = std::make_shared<Schedule>();
  s->kind = ScheduleKind::kTemporal;
  s->devices = first->devices;
  s->batch = first->batch;
  s->first = std::move(first);
  s->second = std::move(second);
  return s;
}

SchedulePtr Schedule::pipeline(SchedulePtr producer, SchedulePtr consumer,
                               int64_t granularity, int64_t batch) {
  if (!producer || !consumer) throw StructuralError("pipeline node needs two children");
  auto s = std::make_shared<Schedule>();
  s->kind = ScheduleKind::kPipeline;
  s->devices = producer->devices;
  s->devices.insert(s->devices.end(), consumer->devices.begin(),
                    consumer->devices.end());
  std::sort(s->devices.begin(), s->devices.end());
  s->granularity = granularity;
  s->batch = batch;
  s->first = std::move(producer);
  s->second = std::move(consumer);
  return s;
}

std::string_view kind_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kLeaf:
      return "leaf";
    case ScheduleKind::kTemporal:
      return "temporal";
    case ScheduleKind::kPipeline:
      return "pipeline";
  }
  return "unknown";
}

namespace {

std::string render_devices(const std::vector<int>& devices) {
  if (devices.empty()) return "-";
  bool contiguous = true;
  for (size_t i = 1; i < devices.size(); ++i) {
    if (devices[i] != devices[i - 1] + 1) contiguous = false;
  }
  if (contiguous) {
    return devices.size() == 1
               ? std::to_string(devices[0])
               : std::to_string(devices.front()) + "-" + std::to_string(devices.back());
  }
  std::string out;
  for (int d : devices) {
    if (!out.empty()) out += ',';
    out += std::to_string(d);
  }
  return out;
}

void render(const Schedule& s, std::string& out) {
  switch (s.kind) {
    case ScheduleKind::kLeaf:
      out += s.node_id + "@" + render_devices(s.devices) + "#" + std::to_string(s.batch);
      return;
    case ScheduleKind::kTemporal:
      out += "T(";
      break;
    case ScheduleKind::kPipeline:
      out += "P[m=" + std::to_string(s.granularity) + "](";
      break;
  }
  render(*s.first, out);
  out += ',';
  render(*s.second, out);
  out += ')';
}

void collect_leaves(const Schedule& s, std::vector<const Schedule*>& out) {
  if (s.kind == ScheduleKind::kLeaf) {
    out.push_back(&s);
    return;
  }
  collect_leaves(*s.first, out);
  collect_leaves(*s.second, out);
}

class ScheduleChecker {
 public:
  ScheduleChecker(const CondensedGraph& dag, const ClusterSpec& cluster)
      : dag_(dag), cluster_(cluster), succ_(dag.successor_masks()) {}

  // Returns the mask of condensed nodes covered by `s`.
  NodeMask check(const Schedule& s, int64_t batch, const std::string& path) {
    if (s.batch != batch) {
      problem(path, "batch " + std::to_string(s.batch) + " but parent expects " +
                        std::to_string(batch));
    }
    std::set<int> uniq(s.devices.begin(), s.devices.end());
    if (uniq.size() != s.devices.size() || s.devices.empty()) {
      problem(path, "device set must be non-empty and free of duplicates");
    }
    for (int d : s.devices) {
      if (d < 0 || d >= cluster_.total_devices()) {
        problem(path, "device " + std::to_string(d) + " outside the cluster");
      }
    }
    switch (s.kind) {
      case ScheduleKind::kLeaf:
        return check_leaf(s, path);
      case ScheduleKind::kTemporal:
      case ScheduleKind::kPipeline:
        break;
    }
    if (!s.first || !s.second) {
      problem(path, "composite node missing a child");
      return 0;
    }
    NodeMask a, b;
    if (s.kind == ScheduleKind::kTemporal) {
      if (s.first->devices != s.devices || s.second->devices != s.devices) {
        problem(path, "temporal children must use identical device sets");
      }
      a = check(*s.first, batch, path + ".first");
      b = check(*s.second, batch, path + ".second");
    } else {
      if (s.granularity < 1 || batch % s.granularity != 0) {
        problem(path, "granularity " + std::to_string(s.granularity) +
                          " does not divide batch " + std::to_string(batch));
      }
      std::vector<int> both;
      std::set_intersection(s.first->devices.begin(), s.first->devices.end(),
                            s.second->devices.begin(), s.second->devices.end(),
                            std::back_inserter(both));
      if (!both.empty()) problem(path, "pipeline children share devices");
      std::vector<int> all = s.first->devices;
      all.insert(all.end(), s.second->devices.begin(), s.second->devices.end());
      std::sort(all.begin(), all.end());
      if (all != s.devices) problem(path, "pipeline devices must be the union of its children");
      a = check(*s.first, s.granularity, path + ".first");
      b = check(*s.second, s.granularity, path + ".second");
    }
    if (a & b) problem(path, "a node appears on both sides");
    for (int i = 0; i < dag_.size(); ++i) {
      if ((b >> i & 1) && (succ_[i] & a)) {
        problem(path, "edge from " + dag_.nodes[i].id +
                          " runs against the composition order");
      }
    }
    return a | b;
  }

  std::vector<std::string> take() { return std::move(problems_); }
  void problem(const std::string& path, const std::string& what) {
    problems_.push_back(path + ": " + what);
  }

 private:
  NodeMask check_leaf(const Schedule& s, const std::string& path) {
    const int idx = dag_.index_of(s.node_id);
    if (idx < 0) {
      problem(path, "unknown node \"" + s.node_id + "\"");
      return 0;
    }
    const auto& node = dag_.nodes[idx];
    if (s.workers != node.members) {
      problem(path, "workers of \"" + s.node_id + "\" do not match the workflow");
    }
    if (static_cast<int>(s.devices.size()) < node.min_devices) {
      problem(path, "\"" + s.node_id + "\" needs at least " +
                        std::to_string(node.min_devices) + " devices");
    }
    if (seen_ >> idx & 1) problem(path, "\"" + s.node_id + "\" placed twice");
    seen_ |= NodeMask{1} << idx;
    return NodeMask{1} << idx;
  }

  const CondensedGraph& dag_;
  const ClusterSpec& cluster_;
  std::vector<NodeMask> succ_;
  NodeMask seen_ = 0;
  std::vector<std::string> problems_;
};

}  // namespace

std::string to_string(const Schedule& s) {
  std::string out;
  render(s, out);
  return out;
}

std::vector<const Schedule*> leaves(const Schedule& s) {
  std::vector<const Schedule*> out;
  collect_leaves(s, out);
  return out;
}

std::vector<std::string> check_schedule(const Schedule& s,
                                        const CondensedGraph& dag,
                                        int64_t total_batch,
                                        const ClusterSpec& cluster) {
  ScheduleChecker checker(dag, cluster);
  NodeMask covered = checker.check(s, total_batch, "schedule");
  if (covered != dag.all_mask()) {
    checker.problem("schedule", "does not place every workflow node");
  }
  return checker.take();
}

}  // namespace flowplan

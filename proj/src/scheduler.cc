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

#include "flowplan/scheduler.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>

#include "flowplan/error.h"

namespace flowplan {

double pipelining_time(double t_critical, double t_bottleneck, int64_t total,
                       int64_t granularity) {
  if (granularity < 1 || total < 1 || total % granularity != 0) {
    throw GranularityError("granularity " + std::to_string(granularity) +
                           " does not divide batch " + std::to_string(total));
  }
  if (t_critical < 0.0 || t_bottleneck < 0.0) {
    throw Error("pipelining_time: negative stage time");
  }
  const int64_t chunks = total / granularity;
  if (chunks == 1) return t_critical;
  return t_critical + static_cast<double>(chunks - 1) * t_bottleneck;
}

double temporal_cost(double t_first, double t_second, double switch_overhead) {
  return t_first + t_second + switch_overhead;
}

std::vector<int64_t> granularity_candidates(int64_t total, int cap) {
  if (total < 1) throw GranularityError("batch must be >= 1");
  std::vector<int64_t> divisors;
  for (int64_t d = 1; d * d <= total; ++d) {
    if (total % d == 0) {
      divisors.push_back(d);
      if (d != total / d) divisors.push_back(total / d);
    }
  }
  std::sort(divisors.begin(), divisors.end());
  if (cap < 1) cap = 1;
  if (static_cast<int>(divisors.size()) <= cap) return divisors;
  if (cap == 1) return {total};

  // Target i sits at total^(i / (cap - 1)); take the nearest unused divisor
  // in log space, larger one on ties.
  const long double log_total = std::log(static_cast<long double>(total));
  std::vector<bool> used(divisors.size(), false);
  std::vector<int64_t> out;
  for (int i = 0; i < cap; ++i) {
    const long double target = log_total * i / (cap - 1);
    int best = -1;
    long double best_dist = 0;
    for (int j = 0; j < static_cast<int>(divisors.size()); ++j) {
      if (used[j]) continue;
      const long double dist =
          std::fabs(std::log(static_cast<long double>(divisors[j])) - target);
      if (best < 0 || dist < best_dist - 1e-12L ||
          (std::fabs(dist - best_dist) <= 1e-12L && divisors[j] > divisors[best])) {
        best = j;
        best_dist = dist;
      }
    }
    used[best] = true;
    out.push_back(divisors[best]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, int>> enumerate_device_splits(int devices, int min_s,
                                                         int min_t) {
  std::vector<std::pair<int, int>> out;
  for (int s = std::max(1, min_s); s <= devices - std::max(1, min_t); ++s) {
    out.emplace_back(s, devices - s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CostModel

CostModel::CostModel(const WorkflowGraph& graph, const ClusterSpec& cluster,
                     const ProfileTable& profiles, SchedulerOptions options)
    : graph_(graph), dag_(condense_cycles(graph)), cluster_(cluster),
      profiles_(profiles), options_(options) {
  for (const auto& w : graph_.workers) workers_.emplace(w.id, &w);
}

double CostModel::worker_time(const std::string& worker, int64_t batch,
                              int devices) const {
  return estimate_exec_time(profiles_, worker, batch, devices).seconds;
}

int64_t CostModel::worker_memory(const std::string& worker, int64_t batch,
                                 int devices) const {
  return estimate_memory(profiles_, worker, batch, devices).bytes;
}

const LeafCost& CostModel::leaf(int node_index, int64_t batch, int devices) const {
  auto key = std::make_tuple(node_index, batch, devices);
  if (auto it = leaf_cache_.find(key); it != leaf_cache_.end()) return it->second;

  LeafCost cost;
  const CondensedNode& node = dag_.nodes.at(node_index);
  auto fail = [&](std::string why) {
    cost.feasible = false;
    cost.time_s = kInfiniteTime;
    cost.reason = std::move(why);
  };
  const std::string where = "\"" + node.id + "\" at batch " + std::to_string(batch) +
                            " on " + std::to_string(devices) + " device(s)";
  if (devices < node.min_devices) {
    fail("\"" + node.id + "\" needs at least " + std::to_string(node.min_devices) +
         " device(s), got " + std::to_string(devices));
  } else if (batch != total_batch() && !node.supports_chunking) {
    fail("\"" + node.id + "\" cannot process partial batches (batch " +
         std::to_string(batch) + " of " + std::to_string(total_batch()) + ")");
  } else {
    double step = 0.0;
    int64_t memory = 0;
    bool extrapolated = false;
    for (const auto& w : node.members) {
      const auto t = estimate_exec_time(profiles_, w, batch, devices);
      const auto m = estimate_memory(profiles_, w, batch, devices);
      step += t.seconds;
      memory += m.bytes;
      extrapolated = extrapolated || t.extrapolated_devices || m.extrapolated_devices;
    }
    cost.memory_bytes = memory;
    if (options_.strict_profiles && extrapolated) {
      fail("no measured profile for " + where + " (strict profiles)");
    } else if (memory > cluster_.device_memory_bytes) {
      fail(where + " needs " + std::to_string(memory) +
           " bytes per device, capacity is " +
           std::to_string(cluster_.device_memory_bytes));
    } else {
      cost.feasible = true;
      cost.time_s = node.is_group ? static_cast<double>(node.cycle_steps) * step : step;
    }
  }
  return leaf_cache_.emplace(key, std::move(cost)).first->second;
}

std::vector<SwitchStep> CostModel::switch_steps(NodeMask from, NodeMask to) const {
  const NodeMask leaving = from & ~to;
  const NodeMask arriving = to & ~from;
  std::vector<const WorkerSpec*> out_workers, in_workers;
  for (int i = 0; i < dag_.size(); ++i) {
    for (const auto& m : dag_.nodes[i].members) {
      if (leaving >> i & 1) out_workers.push_back(workers_.at(m));
      if (arriving >> i & 1) in_workers.push_back(workers_.at(m));
    }
  }
  auto shares_group = [](const WorkerSpec* w, const auto& others) {
    if (!w->weight_sync_group) return false;
    return std::any_of(others.begin(), others.end(), [&](const WorkerSpec* o) {
      return o->weight_sync_group == w->weight_sync_group;
    });
  };
  std::vector<SwitchStep> steps;
  SwitchContext ctx{total_batch(), cluster_.host_link_bw, false};
  for (const WorkerSpec* w : out_workers) {
    ctx.waived = shares_group(w, in_workers);
    steps.push_back({w->id, SwitchDirection::kOffload,
                     estimate_switch(profiles_, w->id, SwitchDirection::kOffload, ctx),
                     ctx.waived});
  }
  for (const WorkerSpec* w : in_workers) {
    ctx.waived = shares_group(w, out_workers);
    steps.push_back({w->id, SwitchDirection::kOnload,
                     estimate_switch(profiles_, w->id, SwitchDirection::kOnload, ctx),
                     ctx.waived});
  }
  return steps;
}

double CostModel::switch_cost(NodeMask from, NodeMask to) const {
  double total = 0.0;
  for (const auto& s : switch_steps(from, to)) total += s.seconds;
  return total;
}

std::vector<TransferStep> CostModel::transfer_steps(NodeMask src, NodeMask dst,
                                                    int64_t items,
                                                    LocalityTier tier) const {
  std::vector<TransferStep> steps;
  for (const auto& e : dag_.crossing_edges) {
    const int a = dag_.node_of_worker.at(e.src);
    const int b = dag_.node_of_worker.at(e.dst);
    if (!(src >> a & 1) || !(dst >> b & 1)) continue;
    const int64_t bytes = e.unit_payload_bytes * items;
    TransferStep step;
    step.edge = &e;
    if (e.offload_to_host) {
      step.tier = LocalityTier::kHostLink;
      step.legs = 2;
    } else {
      step.tier = tier;
    }
    step.seconds = estimate_transfer(bytes, step.tier, cluster_);
    steps.push_back(step);
  }
  return steps;
}

double CostModel::transfer_cost(NodeMask src, NodeMask dst, int64_t items,
                                LocalityTier tier) const {
  double total = 0.0;
  for (const auto& s : transfer_steps(src, dst, items, tier)) {
    for (int leg = 0; leg < s.legs; ++leg) total += s.seconds;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Plan evaluation

namespace {

double compose_pipeline(double producer, double producer_restore, double consumer,
                        double consumer_restore, double transfer, int64_t batch,
                        int64_t granularity) {
  const double critical = producer + transfer + consumer;
  const double bottleneck = std::max(
      {producer + producer_restore, transfer, consumer + consumer_restore});
  return pipelining_time(critical, bottleneck, batch, granularity);
}

struct Evaluation {
  double time = kInfiniteTime;
  NodeMask nodes = 0, start = 0, end = 0;
  bool feasible = false;
  std::string reason;
};

class Evaluator {
 public:
  Evaluator(const CostModel& model, bool with_memory)
      : model_(model), with_memory_(with_memory) {}

  Evaluation run(const Schedule& s) {
    Evaluation e;
    if (s.kind == ScheduleKind::kLeaf) {
      const int idx = model_.dag().index_of(s.node_id);
      if (idx < 0) throw StructuralError("schedule names unknown node \"" + s.node_id + "\"");
      const LeafCost& leaf = model_.leaf(idx, s.batch, static_cast<int>(s.devices.size()));
      e.nodes = e.start = e.end = NodeMask{1} << idx;
      e.feasible = leaf.feasible;
      e.reason = leaf.reason;
      e.time = leaf.time_s;
      if (with_memory_) {
        for (int d : s.devices) {
          auto& peak = peak_[d];
          peak = std::max(peak, leaf.memory_bytes);
        }
      }
      return e;
    }
    const Evaluation a = run(*s.first);
    const Evaluation b = run(*s.second);
    e.nodes = a.nodes | b.nodes;
    e.feasible = a.feasible && b.feasible;
    e.reason = !a.feasible ? a.reason : b.reason;
    if (s.kind == ScheduleKind::kTemporal) {
      e.start = a.start;
      e.end = b.end;
      if (e.feasible) {
        e.time = temporal_cost(a.time, b.time, model_.switch_cost(a.end, b.start));
      }
    } else {
      e.start = a.start | b.start;
      e.end = a.end | b.end;
      if (e.feasible) {
        const LocalityTier tier =
            tier_between(model_.cluster(), s.first->devices, s.second->devices);
        const double x = model_.transfer_cost(a.nodes, b.nodes, s.granularity, tier);
        e.time = compose_pipeline(a.time, model_.switch_cost(a.end, a.start), b.time,
                                  model_.switch_cost(b.end, b.start), x, s.batch,
                                  s.granularity);
      }
    }
    if (!e.feasible) e.time = kInfiniteTime;
    return e;
  }

  std::map<int, int64_t> take_peaks() { return std::move(peak_); }

 private:
  const CostModel& model_;
  bool with_memory_;
  std::map<int, int64_t> peak_;
};

}  // namespace

PlanEvaluation evaluate_schedule(const Schedule& schedule, const CostModel& model) {
  Evaluator evaluator(model, true);
  const Evaluation e = evaluator.run(schedule);
  PlanEvaluation out;
  out.time_s = e.time;
  out.start = e.start;
  out.end = e.end;
  out.restore_s = model.switch_cost(e.end, e.start);
  out.feasible = e.feasible;
  out.reason = e.reason;
  out.peak_memory_by_device = evaluator.take_peaks();
  return out;
}

ScheduleEstimate to_estimate(const PlanEvaluation& eval) {
  ScheduleEstimate est;
  est.total_time_s = eval.time_s;
  est.feasible = eval.feasible;
  est.peak_memory_by_device = eval.peak_memory_by_device;
  est.binding_constraint = eval.reason;
  return est;
}

// ---------------------------------------------------------------------------
// Memoized search

namespace {

struct Plan;
using PlanPtr = std::shared_ptr<const Plan>;

// Device-relative plan; materialized into a Schedule once a base is known.
struct Plan {
  ScheduleKind kind = ScheduleKind::kLeaf;
  int node = -1;
  int devices = 0;
  int64_t batch = 0;
  int64_t granularity = 0;
  int split = 0;
  PlanPtr a, b;
};

struct Candidate {
  double time = kInfiniteTime;
  double restore = 0.0;
  NodeMask start = 0, end = 0;
  int kind_rank = 0;  // leaf/temporal 0, pipeline 1
  int split = 0;
  int64_t granularity = 0;
  PlanPtr plan;
};

// Equal times prefer temporal, then the smaller producer share, then the
// larger chunk.
bool better(const Candidate& x, const Candidate& y) {
  return std::make_tuple(x.time, x.kind_rank, x.split, -x.granularity) <
         std::make_tuple(y.time, y.kind_rank, y.split, -y.granularity);
}

using Entries = std::vector<Candidate>;
using EntriesPtr = std::shared_ptr<const Entries>;

class Search {
 public:
  Search(const CostModel& model, MemoStats* stats)
      : model_(model), dag_(model.dag()), stats_(stats) {
    for (int i = 0; i < dag_.size(); ++i) {
      min_devices_.push_back(dag_.nodes[i].min_devices);
    }
  }

  EntriesPtr solve(const MemoKey& key) {
    if (model_.options().use_memo) {
      if (stats_) ++stats_->lookups;
      if (auto it = memo_.find(key); it != memo_.end()) {
        if (stats_) ++stats_->hits;
        return it->second;
      }
    }
    auto entries = std::make_shared<const Entries>(compute(key));
    if (stats_) ++stats_->subproblems;
    if (model_.options().use_memo) memo_.emplace(key, entries);
    return entries;
  }

  SchedulePtr materialize(const Plan& p, int base) const {
    switch (p.kind) {
      case ScheduleKind::kLeaf: {
        std::vector<int> devs(p.devices);
        std::iota(devs.begin(), devs.end(), base);
        const auto& node = dag_.nodes[p.node];
        return Schedule::leaf(node.id, node.members, std::move(devs), p.batch);
      }
      case ScheduleKind::kTemporal:
        return Schedule::temporal(materialize(*p.a, base), materialize(*p.b, base));
      case ScheduleKind::kPipeline:
        return Schedule::pipeline(materialize(*p.a, base),
                                  materialize(*p.b, base + p.split), p.granularity,
                                  p.batch);
    }
    return nullptr;
  }

  int offset_after(int offset, int devices) const {
    const ClusterSpec& c = model_.cluster();
    return c.num_nodes > 1 ? (offset + devices) % c.devices_per_node : 0;
  }

 private:
  Entries compute(const MemoKey& key) {
    const NodeMask mask = key.nodes;
    if (std::popcount(mask) == 1) {
      const int node = std::countr_zero(mask);
      const LeafCost& leaf = model_.leaf(node, key.batch, key.devices);
      if (!leaf.feasible) return {};
      auto plan = std::make_shared<Plan>();
      plan->kind = ScheduleKind::kLeaf;
      plan->node = node;
      plan->devices = key.devices;
      plan->batch = key.batch;
      Candidate c;
      c.time = leaf.time_s;
      c.start = c.end = mask;
      c.plan = std::move(plan);
      return {std::move(c)};
    }

    std::map<std::pair<NodeMask, NodeMask>, Candidate> best;
    auto offer = [&](Candidate c) {
      auto [it, inserted] = best.try_emplace({c.start, c.end}, c);
      if (!inserted && better(c, it->second)) it->second = std::move(c);
    };

    for (NodeMask s_mask : cuts(mask)) {
      const NodeMask t_mask = mask & ~s_mask;

      // Shared devices.
      {
        const EntriesPtr first = solve({s_mask, key.devices, key.batch, key.node_offset});
        const EntriesPtr second = solve({t_mask, key.devices, key.batch, key.node_offset});
        for (const auto& a : *first) {
          for (const auto& b : *second) {
            Candidate c;
            c.time = temporal_cost(a.time, b.time, switch_cost(a.end, b.start));
            c.start = a.start;
            c.end = b.end;
            auto plan = std::make_shared<Plan>();
            plan->kind = ScheduleKind::kTemporal;
            plan->devices = key.devices;
            plan->batch = key.batch;
            plan->a = a.plan;
            plan->b = b.plan;
            c.plan = std::move(plan);
            offer(std::move(c));
          }
        }
      }

      // Disjoint devices.
      const auto splits =
          enumerate_device_splits(key.devices, side_min(s_mask), side_min(t_mask));
      if (splits.empty()) continue;
      const LocalityTier tier = pipeline_tier(key.node_offset, key.devices);
      const auto& grains = candidates(key.batch);
      for (auto [ns, nt] : splits) {
        for (auto g = grains.rbegin(); g != grains.rend(); ++g) {
          const int64_t m = *g;
          const EntriesPtr producer = solve({s_mask, ns, m, key.node_offset});
          if (producer->empty()) continue;
          const EntriesPtr consumer =
              solve({t_mask, nt, m, offset_after(key.node_offset, ns)});
          if (consumer->empty()) continue;
          const double x = model_.transfer_cost(s_mask, t_mask, m, tier);
          for (const auto& a : *producer) {
            for (const auto& b : *consumer) {
              Candidate c;
              c.time = compose_pipeline(a.time, a.restore, b.time, b.restore, x,
                                        key.batch, m);
              c.start = a.start | b.start;
              c.end = a.end | b.end;
              c.kind_rank = 1;
              c.split = ns;
              c.granularity = m;
              auto plan = std::make_shared<Plan>();
              plan->kind = ScheduleKind::kPipeline;
              plan->devices = key.devices;
              plan->batch = key.batch;
              plan->granularity = m;
              plan->split = ns;
              plan->a = a.plan;
              plan->b = b.plan;
              c.plan = std::move(plan);
              offer(std::move(c));
            }
          }
        }
      }
    }

    Entries out;
    out.reserve(best.size());
    for (auto& [cls, c] : best) {
      c.restore = switch_cost(c.end, c.start);
      out.push_back(std::move(c));
    }
    return out;
  }

  double switch_cost(NodeMask from, NodeMask to) {
    auto key = std::make_pair(from, to);
    if (auto it = switch_cache_.find(key); it != switch_cache_.end()) return it->second;
    return switch_cache_[key] = model_.switch_cost(from, to);
  }

  LocalityTier pipeline_tier(int offset, int devices) const {
    const ClusterSpec& c = model_.cluster();
    if (c.num_nodes > 1 && offset + devices > c.devices_per_node) {
      return LocalityTier::kInterNode;
    }
    return LocalityTier::kIntraNode;
  }

  int side_min(NodeMask mask) const {
    int m = 1;
    for (int i = 0; i < dag_.size(); ++i) {
      if (mask >> i & 1) m = std::max(m, min_devices_[i]);
    }
    return m;
  }

  const std::vector<NodeMask>& cuts(NodeMask mask) {
    auto it = cut_cache_.find(mask);
    if (it == cut_cache_.end()) it = cut_cache_.emplace(mask, st_cut_masks(dag_, mask)).first;
    return it->second;
  }

  const std::vector<int64_t>& candidates(int64_t batch) {
    auto it = grain_cache_.find(batch);
    if (it == grain_cache_.end()) {
      it = grain_cache_
               .emplace(batch, granularity_candidates(batch, model_.options().granularity_cap))
               .first;
    }
    return it->second;
  }

  const CostModel& model_;
  const CondensedGraph& dag_;
  MemoStats* stats_;
  std::vector<int> min_devices_;
  std::map<MemoKey, EntriesPtr> memo_;
  std::map<NodeMask, std::vector<NodeMask>> cut_cache_;
  std::map<int64_t, std::vector<int64_t>> grain_cache_;
  std::map<std::pair<NodeMask, NodeMask>, double> switch_cache_;
};

// Names the constraint that rules out every plan.
std::string diagnose_infeasible(const CostModel& model, int devices) {
  const auto& dag = model.dag();
  for (const auto& node : dag.nodes) {
    if (node.min_devices > devices) {
      return "\"" + node.id + "\" needs at least " + std::to_string(node.min_devices) +
             " device(s) but the cluster has " + std::to_string(devices);
    }
  }
  const auto divisors = granularity_candidates(model.total_batch(), 1 << 30);
  for (int i = 0; i < dag.size(); ++i) {
    bool any = false;
    for (int n = 1; n <= devices && !any; ++n) {
      for (int64_t b : divisors) {
        if (model.leaf(i, b, n).feasible) {
          any = true;
          break;
        }
      }
    }
    if (!any) return model.leaf(i, model.total_batch(), devices).reason;
  }
  if (dag.size() == 1) return model.leaf(0, model.total_batch(), devices).reason;
  return "no placement of the workflow fits the cluster";
}

void check_instance(const CostModel& model, int max_nodes) {
  if (model.dag().size() > max_nodes) {
    throw SizeError("workflow has " + std::to_string(model.dag().size()) +
                    " condensed nodes, limit is " + std::to_string(max_nodes));
  }
  if (model.dag().size() == 0) throw StructuralError("workflow has no workers");
  if (model.cluster().total_devices() < 1) throw StructuralError("cluster has no devices");
}

ScheduleResult finish(const CostModel& model, SchedulePtr schedule) {
  ScheduleResult result;
  if (!schedule) {
    result.estimate.feasible = false;
    result.estimate.total_time_s = kInfiniteTime;
    result.estimate.binding_constraint =
        diagnose_infeasible(model, model.cluster().total_devices());
    return result;
  }
  PlanEvaluation eval = evaluate_schedule(*schedule, model);
  result.estimate = to_estimate(eval);
  if (eval.feasible) {
    result.schedule = std::move(schedule);
  } else {
    result.estimate.total_time_s = kInfiniteTime;
  }
  return result;
}

}  // namespace

ScheduleResult find_schedule(const WorkflowGraph& graph, const ClusterSpec& cluster,
                             const ProfileTable& costs, const SchedulerOptions& options,
                             MemoStats* stats) {
  CostModel model(graph, cluster, costs, options);
  check_instance(model, std::min(options.max_nodes, kMaxCutNodes));
  Search search(model, stats);
  const int devices = cluster.total_devices();
  const EntriesPtr root = search.solve({model.dag().all_mask(), devices, graph.total_batch, 0});
  const Candidate* best = nullptr;
  for (const auto& c : *root) {
    if (!best || better(c, *best)) best = &c;
  }
  return finish(model, best ? search.materialize(*best->plan, 0) : nullptr);
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

namespace {

class Enumerator {
 public:
  explicit Enumerator(const CostModel& model) : model_(model), dag_(model.dag()) {}

  using Visit = std::function<void(const SchedulePtr&)>;

  void run(NodeMask mask, int base, int devices, int64_t batch, const Visit& visit) {
    if (std::popcount(mask) == 1) {
      const auto& node = dag_.nodes[std::countr_zero(mask)];
      std::vector<int> devs(devices);
      std::iota(devs.begin(), devs.end(), base);
      visit(Schedule::leaf(node.id, node.members, std::move(devs), batch));
      return;
    }
    for (NodeMask s_mask : st_cut_masks(dag_, mask)) {
      const NodeMask t_mask = mask & ~s_mask;
      run(s_mask, base, devices, batch, [&](const SchedulePtr& a) {
        run(t_mask, base, devices, batch, [&](const SchedulePtr& b) {
          visit(Schedule::temporal(a, b));
        });
      });
      for (auto [ns, nt] : enumerate_device_splits(devices, 1, 1)) {
        for (int64_t m : granularity_candidates(batch, model_.options().granularity_cap)) {
          run(s_mask, base, ns, m, [&](const SchedulePtr& a) {
            run(t_mask, base + ns, nt, m, [&](const SchedulePtr& b) {
              visit(Schedule::pipeline(a, b, m, batch));
            });
          });
        }
      }
    }
  }

 private:
  const CostModel& model_;
  const CondensedGraph& dag_;
};

}  // namespace

ScheduleResult brute_force_schedule(const WorkflowGraph& graph,
                                    const ClusterSpec& cluster,
                                    const ProfileTable& costs,
                                    const SchedulerOptions& options,
                                    OracleLimits limits, int64_t* plans_visited) {
  SchedulerOptions opts = options;
  opts.use_memo = false;
  CostModel model(graph, cluster, costs, opts);
  if (model.dag().size() > limits.max_nodes) {
    throw SizeError("oracle limited to " + std::to_string(limits.max_nodes) +
                    " condensed nodes, got " + std::to_string(model.dag().size()));
  }
  if (cluster.total_devices() > limits.max_devices) {
    throw SizeError("oracle limited to " + std::to_string(limits.max_devices) +
                    " devices, got " + std::to_string(cluster.total_devices()));
  }
  check_instance(model, limits.max_nodes);

  SchedulePtr best;
  double best_time = kInfiniteTime;
  int64_t visited = 0;
  Enumerator(model).run(model.dag().all_mask(), 0, cluster.total_devices(),
                        graph.total_batch, [&](const SchedulePtr& s) {
                          ++visited;
                          Evaluator evaluator(model, false);
                          const Evaluation e = evaluator.run(*s);
                          if (e.feasible && e.time < best_time) {
                            best_time = e.time;
                            best = s;
                          }
                        });
  if (plans_visited) *plans_visited = visited;
  return finish(model, best);
}

// ---------------------------------------------------------------------------
// Forced modes

ScheduleResult forced_mode_schedule(const WorkflowGraph& graph,
                                    const ClusterSpec& cluster,
                                    const ProfileTable& costs, ForcedMode mode,
                                    const SchedulerOptions& options) {
  CostModel model(graph, cluster, costs, options);
  check_instance(model, std::min(options.max_nodes, kMaxCutNodes));
  const auto& dag = model.dag();
  const std::vector<int> order = topological_order(dag);
  const int devices = cluster.total_devices();
  const int64_t batch = graph.total_batch;

  auto make_leaf = [&](int node, int base, int n, int64_t b) {
    std::vector<int> devs(n);
    std::iota(devs.begin(), devs.end(), base);
    return Schedule::leaf(dag.nodes[node].id, dag.nodes[node].members, std::move(devs), b);
  };

  if (mode == ForcedMode::kCollocated) {
    SchedulePtr tree = make_leaf(order.back(), 0, devices, batch);
    for (int i = static_cast<int>(order.size()) - 2; i >= 0; --i) {
      tree = Schedule::temporal(make_leaf(order[i], 0, devices, batch), tree);
    }
    return finish(model, tree);
  }

  // Disaggregated.
  const int k = static_cast<int>(order.size());
  std::vector<int> suffix_min(k + 1, 0);
  for (int i = k - 1; i >= 0; --i) {
    suffix_min[i] = suffix_min[i + 1] + dag.nodes[order[i]].min_devices;
  }
  if (suffix_min[0] > devices) {
    ScheduleResult r;
    r.estimate.total_time_s = kInfiniteTime;
    r.estimate.binding_constraint =
        "disaggregated mode needs " + std::to_string(suffix_min[0]) +
        " devices for disjoint placement, cluster has " + std::to_string(devices);
    return r;
  }
  auto sequential_time = [&](int node) {
    const auto& n = dag.nodes[node];
    double t = 0.0;
    for (const auto& w : n.members) t += model.worker_time(w, batch, n.min_devices);
    return n.is_group ? t * n.cycle_steps : t;
  };
  std::vector<double> seq(k), suffix_seq(k + 1, 0.0);
  for (int i = k - 1; i >= 0; --i) {
    seq[i] = sequential_time(order[i]);
    suffix_seq[i] = suffix_seq[i + 1] + seq[i];
  }
  // Device range per level: [base[i], base[i] + span[i]) holds order[i..].
  std::vector<int> base(k, 0), span(k, devices), share(k, 0);
  for (int i = 0; i + 1 < k; ++i) {
    const double frac = seq[i] / suffix_seq[i];
    int ns = static_cast<int>(std::lround(span[i] * frac));
    ns = std::clamp(ns, dag.nodes[order[i]].min_devices, span[i] - suffix_min[i + 1]);
    share[i] = ns;
    base[i + 1] = base[i] + ns;
    span[i + 1] = span[i] - ns;
  }

  // Best granularity per level, given the batch handed down.
  std::map<std::pair<int, int64_t>, std::pair<SchedulePtr, double>> memo;
  std::function<std::pair<SchedulePtr, double>(int, int64_t)> best_chain =
      [&](int i, int64_t b) -> std::pair<SchedulePtr, double> {
    if (auto it = memo.find({i, b}); it != memo.end()) return it->second;
    std::pair<SchedulePtr, double> result{nullptr, kInfiniteTime};
    if (i == k - 1) {
      auto s = make_leaf(order[i], base[i], span[i], b);
      result = {s, evaluate_schedule(*s, model).time_s};
    } else {
      const auto grains = granularity_candidates(b, options.granularity_cap);
      for (auto g = grains.rbegin(); g != grains.rend(); ++g) {
        auto [rest, rest_time] = best_chain(i + 1, *g);
        auto s = Schedule::pipeline(make_leaf(order[i], base[i], share[i], *g),
                                    rest, *g, b);
        const double t = evaluate_schedule(*s, model).time_s;
        if (!result.first || t < result.second) result = {s, t};
      }
    }
    return memo[{i, b}] = result;
  };
  return finish(model, best_chain(0, batch).first);
}

}  // namespace flowplan

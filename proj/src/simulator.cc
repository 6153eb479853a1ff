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

#include "flowplan/simulator.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <numeric>
#include <queue>
#include <tuple>

#include "flowplan/device_lock.h"
#include "flowplan/error.h"
#include "flowplan/scheduler.h"

namespace flowplan {

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kTaskStart:
      return "task-start";
    case EventKind::kTaskEnd:
      return "task-end";
    case EventKind::kOnload:
      return "onload";
    case EventKind::kOffload:
      return "offload";
    case EventKind::kLockAcquire:
      return "lock-acquire";
    case EventKind::kLockRelease:
      return "lock-release";
    case EventKind::kTransfer:
      return "transfer";
  }
  return "unknown";
}

namespace {

// Same-time events run releases first, then new lock requests, then the
// grant sweep, then op starts.
enum Phase { kRelease = 0, kAcquire = 1, kGrant = 2, kStart = 3 };

using Done = std::function<void()>;

struct Event {
  double time;
  int phase;
  std::string worker;
  int64_t seq;
  std::function<void()> fn;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time, a.phase, a.worker, a.seq) >
           std::tie(b.time, b.phase, b.worker, b.seq);
  }
};

struct Op {
  EventKind kind = EventKind::kTaskStart;  // task, onload or offload
  std::string worker;
  std::vector<int> devices;
  int rank = 0;
  double duration = 0.0;
  int64_t chunk = 0;
  int64_t bytes = 0;
  double started = 0.0;
  std::vector<double> items_done;  // relative to the start; generation tasks
  Done done;
};

struct SubtreeInfo {
  NodeMask nodes = 0, start = 0, end = 0;
};

struct PipeRun {
  const Schedule* s = nullptr;
  int64_t offset = 0;
  int64_t chunks = 0;
  int64_t m = 0;
  std::vector<bool> arrived;
  std::deque<int64_t> link_queue;
  bool link_busy = false;
  bool consumer_idle = true;
  int64_t next_consume = 0;
  ChannelState* channel = nullptr;
  Done done;
};

class Engine {
 public:
  Engine(const Schedule& root, const WorkflowGraph& graph, const ClusterSpec& cluster,
         const ProfileTable& costs, const Workload& workload, const SimOptions& options)
      : root_(root), graph_(graph), cluster_(cluster), workload_(workload),
        options_(options), model_(graph, cluster, costs),
        locks_(cluster.total_devices()) {
    const auto problems = check_schedule(root, model_.dag(), graph.total_batch, cluster);
    if (!problems.empty()) {
      throw StructuralError("schedule does not match the workflow: " + problems.front());
    }
    const auto order = topological_order(model_.dag());
    rank_.assign(model_.dag().size(), 0);
    for (size_t i = 0; i < order.size(); ++i) rank_[order[i]] = static_cast<int>(i);
    index(root);
    const int n = cluster.total_devices();
    resident_.resize(n);
    total_.assign(n, 0);
    peak_.assign(n, 0);
    busy_.assign(n, 0.0);
  }

  SimTrace run() {
    for (int i = 0; i < model_.dag().size(); ++i) {
      if (!(info_.at(&root_).start >> i & 1)) continue;
      for (const auto& w : model_.dag().nodes[i].members) {
        load_memory(w, devices_of(w), bytes_of(w));
      }
    }
    bool finished = false;
    if (!trace_.aborted) invoke(root_, 0, [&] { finished = true; });
    while (!queue_.empty() && !trace_.aborted) {
      if (trace_.events_processed >= options_.max_events) {
        trace_.event_cap_hit = true;
        break;
      }
      Event e = queue_.top();
      queue_.pop();
      now_ = e.time;
      ++trace_.events_processed;
      e.fn();
    }
    if (!finished && !trace_.aborted && !trace_.event_cap_hit) {
      throw Error("simulation stalled with " + std::to_string(locks_.waiting()) +
                  " waiting lock request(s)");
    }
    trace_.makespan_s = now_;
    for (int d = 0; d < cluster_.total_devices(); ++d) {
      trace_.devices.push_back({d, busy_[d], peak_[d]});
    }
    for (size_t i = 0; i < channels_.size(); ++i) {
      const ChannelState& c = *channels_[i];
      ChannelReport r = channel_names_[i];
      r.offload_to_host = c.offload_to_host;
      r.items_enqueued = c.enqueued;
      r.items_dequeued = c.dequeued;
      r.consumer_load = c.load;
      r.notes = c.notes;
      trace_.channels.push_back(std::move(r));
    }
    return std::move(trace_);
  }

 private:
  // --- structure ----------------------------------------------------------

  SubtreeInfo index(const Schedule& s) {
    SubtreeInfo info;
    if (s.kind == ScheduleKind::kLeaf) {
      const int idx = model_.dag().index_of(s.node_id);
      placement_[idx] = &s;
      info.nodes = info.start = info.end = NodeMask{1} << idx;
    } else {
      if (s.kind == ScheduleKind::kPipeline) {
        channel_of_[&s] = channels_.size();
        channels_.push_back(std::make_unique<ChannelState>());
        channel_names_.push_back({});
      }
      const size_t slot = s.kind == ScheduleKind::kPipeline ? channels_.size() - 1 : 0;
      const SubtreeInfo a = index(*s.first);
      const SubtreeInfo b = index(*s.second);
      info.nodes = a.nodes | b.nodes;
      if (s.kind == ScheduleKind::kTemporal) {
        info.start = a.start;
        info.end = b.end;
      } else {
        info.start = a.start | b.start;
        info.end = a.end | b.end;
        channel_names_[slot].producer = node_names(a.nodes);
        channel_names_[slot].consumer = node_names(b.nodes);
        channels_[slot]->id = channel_names_[slot].producer + "->" +
                              channel_names_[slot].consumer;
        for (const auto& e : model_.dag().crossing_edges) {
          if ((a.nodes >> model_.dag().node_of_worker.at(e.src) & 1) &&
              (b.nodes >> model_.dag().node_of_worker.at(e.dst) & 1) && e.offload_to_host) {
            channels_[slot]->offload_to_host = true;
          }
        }
      }
    }
    info_[&s] = info;
    return info;
  }

  std::string node_names(NodeMask mask) const {
    std::string out;
    for (int i = 0; i < model_.dag().size(); ++i) {
      if (!(mask >> i & 1)) continue;
      if (!out.empty()) out += '+';
      out += model_.dag().nodes[i].id;
    }
    return out;
  }

  int node_of(const std::string& worker) const {
    return model_.dag().node_of_worker.at(worker);
  }
  const std::vector<int>& devices_of(const std::string& worker) const {
    return placement_.at(node_of(worker))->devices;
  }
  int64_t bytes_of(const std::string& worker) const {
    const Schedule* leaf = placement_.at(node_of(worker));
    return model_.worker_memory(worker, leaf->batch, static_cast<int>(leaf->devices.size()));
  }

  // --- events and locks ---------------------------------------------------

  void at(double t, int phase, const std::string& worker, std::function<void()> fn) {
    queue_.push(Event{t, phase, worker, seq_++, std::move(fn)});
  }

  void record(EventKind kind, const std::string& worker, const std::vector<int>& devices,
              int64_t chunk, double duration = 0.0) {
    trace_.events.push_back({now_, kind, worker, devices, chunk, duration});
  }

  void submit(Op op) {
    const std::string worker = op.worker;
    at(now_, kAcquire, worker, [this, op = std::move(op)]() mutable {
      const int64_t id = locks_.request(op.devices, op.rank, now_, op.worker);
      ops_.emplace(id, std::move(op));
      schedule_sweep();
    });
  }

  void schedule_sweep() {
    if (sweep_pending_) return;
    sweep_pending_ = true;
    at(now_, kGrant, "", [this] {
      sweep_pending_ = false;
      for (int64_t id : locks_.grant()) {
        const Op& op = ops_.at(id);
        record(EventKind::kLockAcquire, op.worker, op.devices, op.chunk);
        at(now_, kStart, op.worker, [this, id] { start(id); });
      }
    });
  }

  void start(int64_t id) {
    Op& op = ops_.at(id);
    op.started = now_;
    record(op.kind, op.worker, op.devices, op.chunk,
           op.kind == EventKind::kTaskStart ? 0.0 : op.duration);
    if (op.kind == EventKind::kOnload) {
      load_memory(op.worker, op.devices, op.bytes);
      if (trace_.aborted) return;
    }
    at(now_ + op.duration, kRelease, op.worker, [this, id] { finish(id); });
  }

  void finish(int64_t id) {
    Op op = std::move(ops_.at(id));
    ops_.erase(id);
    if (op.kind == EventKind::kTaskStart) {
      record(EventKind::kTaskEnd, op.worker, op.devices, op.chunk);
      for (int d : op.devices) busy_[d] += op.duration;
      for (double r : op.items_done) trace_.generation_item_done_s.push_back(op.started + r);
    } else if (op.kind == EventKind::kOffload) {
      for (int d : op.devices) {
        total_[d] -= resident_[d][op.worker];
        resident_[d].erase(op.worker);
      }
    }
    record(EventKind::kLockRelease, op.worker, op.devices, op.chunk);
    locks_.release(id);
    schedule_sweep();
    if (op.done) op.done();
  }

  void load_memory(const std::string& worker, const std::vector<int>& devices,
                   int64_t bytes) {
    for (int d : devices) {
      auto& slot = resident_[d][worker];
      total_[d] += bytes - slot;
      slot = bytes;
      peak_[d] = std::max(peak_[d], total_[d]);
      if (total_[d] > cluster_.device_memory_bytes) {
        trace_.violations.push_back(
            "device " + std::to_string(d) + " holds " + std::to_string(total_[d]) +
            " bytes after loading \"" + worker + "\" at t=" + std::to_string(now_) +
            "s, capacity " + std::to_string(cluster_.device_memory_bytes));
        trace_.aborted = true;
      }
    }
  }

  // --- plan execution -----------------------------------------------------

  void invoke(const Schedule& s, int64_t offset, Done done) {
    switch (s.kind) {
      case ScheduleKind::kLeaf:
        return invoke_leaf(s, offset, std::move(done));
      case ScheduleKind::kTemporal: {
        const Schedule* second = s.second.get();
        const NodeMask from = info_.at(s.first.get()).end;
        const NodeMask to = info_.at(second).start;
        return invoke(*s.first, offset,
                      [this, second, from, to, offset, done = std::move(done)]() mutable {
                        run_switch(from, to, offset,
                                   [this, second, offset, done = std::move(done)]() mutable {
                                     invoke(*second, offset, std::move(done));
                                   });
                      });
      }
      case ScheduleKind::kPipeline:
        return invoke_pipeline(s, offset, std::move(done));
    }
  }

  double chunk_time(const std::string& worker, int64_t offset, int64_t batch,
                    int devices, double* base_out) {
    const int64_t chunk = offset / batch;
    if (auto it = workload_.chunk_time_s.find({worker, chunk});
        it != workload_.chunk_time_s.end()) {
      *base_out = -1.0;
      return it->second;
    }
    if (workload_.explicit_only) {
      throw WorkloadError("workload has no time for worker \"" + worker + "\" chunk " +
                          std::to_string(chunk) + " (batch " + std::to_string(batch) + ")");
    }
    const double base = model_.worker_time(worker, batch, devices);
    *base_out = base;
    double factor = 1.0;
    if (auto it = workload_.item_factor.find(worker); it != workload_.item_factor.end()) {
      if (static_cast<int64_t>(it->second.size()) < offset + batch) {
        throw WorkloadError("workload for \"" + worker + "\" covers " +
                            std::to_string(it->second.size()) + " items, need " +
                            std::to_string(offset + batch));
      }
      factor = *std::max_element(it->second.begin() + offset,
                                 it->second.begin() + offset + batch);
    }
    return base * factor;
  }

  void invoke_leaf(const Schedule& s, int64_t offset, Done done) {
    const int node = model_.dag().index_of(s.node_id);
    const auto& cn = model_.dag().nodes[node];
    const int steps = cn.is_group ? cn.cycle_steps : 1;
    const int n = static_cast<int>(s.devices.size());
    const int64_t chunk = offset / s.batch;

    auto tasks = std::make_shared<std::vector<Op>>();
    for (int step = 0; step < steps; ++step) {
      for (const auto& w : cn.members) {
        double base = 0.0;
        Op op;
        op.kind = EventKind::kTaskStart;
        op.worker = w;
        op.devices = s.devices;
        op.rank = rank_[node];
        op.duration = chunk_time(w, offset, s.batch, n, &base);
        op.chunk = chunk;
        if (step == steps - 1) op.items_done = item_times(w, offset, s.batch, base, op.duration);
        tasks->push_back(std::move(op));
      }
    }
    for (const auto& w : cn.members) ++trace_.chunks_executed[w];
    run_sequence(tasks, 0, std::move(done));
  }

  // Completion time of each generation item relative to its task start.
  std::vector<double> item_times(const std::string& worker, int64_t offset, int64_t batch,
                                 double base, double duration) const {
    const WorkerSpec* spec = graph_.find_worker(worker);
    if (!spec || !is_generation_kind(spec->kind)) return {};
    std::vector<double> out;
    auto it = workload_.item_factor.find(worker);
    for (int64_t i = offset; i < offset + batch; ++i) {
      if (base < 0.0 || it == workload_.item_factor.end()) {
        out.push_back(duration);
      } else {
        out.push_back(base * it->second[i]);
      }
    }
    return out;
  }

  void run_sequence(std::shared_ptr<std::vector<Op>> ops, size_t i, Done done) {
    if (i == ops->size()) {
      done();
      return;
    }
    Op op = (*ops)[i];
    op.done = [this, ops, i, done = std::move(done)]() mutable {
      run_sequence(ops, i + 1, std::move(done));
    };
    submit(std::move(op));
  }

  void run_switch(NodeMask from, NodeMask to, int64_t offset, Done done) {
    auto ops = std::make_shared<std::vector<Op>>();
    for (const SwitchStep& step : model_.switch_steps(from, to)) {
      Op op;
      op.kind = step.direction == SwitchDirection::kOnload ? EventKind::kOnload
                                                           : EventKind::kOffload;
      op.worker = step.worker;
      op.devices = devices_of(step.worker);
      op.rank = rank_[node_of(step.worker)];
      op.duration = step.seconds;
      op.chunk = offset / placement_.at(node_of(step.worker))->batch;
      op.bytes = bytes_of(step.worker);
      ops->push_back(std::move(op));
    }
    run_sequence(ops, 0, std::move(done));
  }

  void invoke_pipeline(const Schedule& s, int64_t offset, Done done) {
    auto run = std::make_shared<PipeRun>();
    run->s = &s;
    run->offset = offset;
    run->m = s.granularity;
    run->chunks = s.batch / s.granularity;
    run->arrived.assign(run->chunks, false);
    run->channel = channels_[channel_of_.at(&s)].get();
    run->done = std::move(done);
    produce(run, 0);
  }

  void produce(std::shared_ptr<PipeRun> run, int64_t k) {
    const Schedule& s = *run->s;
    invoke(*s.first, run->offset + k * run->m, [this, run, k] {
      on_produced(run, k);
      if (k + 1 < run->chunks) {
        const SubtreeInfo& a = info_.at(run->s->first.get());
        run_switch(a.end, a.start, run->offset + k * run->m,
                   [this, run, k] { produce(run, k + 1); });
      }
    });
  }

  void on_produced(const std::shared_ptr<PipeRun>& run, int64_t k) {
    const SubtreeInfo& a = info_.at(run->s->first.get());
    const SubtreeInfo& b = info_.at(run->s->second.get());
    const int64_t first_item = run->offset + k * run->m;
    const std::vector<double>* weights = nullptr;
    for (int i = 0; i < model_.dag().size() && !weights; ++i) {
      if (!(a.nodes >> i & 1)) continue;
      for (const auto& w : model_.dag().nodes[i].members) {
        auto it = workload_.item_factor.find(w);
        if (it != workload_.item_factor.end()) {
          weights = &it->second;
          break;
        }
      }
    }
    for (int64_t i = first_item; i < first_item + run->m; ++i) {
      int64_t payload = 0;
      for (const auto& e : model_.dag().crossing_edges) {
        if ((a.nodes >> node_of(e.src) & 1) && (b.nodes >> node_of(e.dst) & 1)) {
          payload += item_payload(e, i);
        }
      }
      const double weight =
          weights && i < static_cast<int64_t>(weights->size()) ? (*weights)[i] : 1.0;
      run->channel->push({payload, weight, k});
    }
    run->link_queue.push_back(k);
    pump_link(run);
  }

  int64_t item_payload(const DataEdge& e, int64_t item) const {
    auto it = workload_.item_payload_bytes.find({e.src, e.dst});
    if (it == workload_.item_payload_bytes.end()) return e.unit_payload_bytes;
    if (item >= static_cast<int64_t>(it->second.size())) {
      throw WorkloadError("payload override for " + e.src + "->" + e.dst +
                          " does not cover item " + std::to_string(item));
    }
    return it->second[item];
  }

  void pump_link(const std::shared_ptr<PipeRun>& run) {
    if (run->link_busy || run->link_queue.empty()) return;
    const int64_t k = run->link_queue.front();
    run->link_queue.pop_front();
    run->link_busy = true;

    const Schedule& s = *run->s;
    const SubtreeInfo& a = info_.at(s.first.get());
    const SubtreeInfo& b = info_.at(s.second.get());
    const LocalityTier tier = tier_between(cluster_, s.first->devices, s.second->devices);
    const int64_t first_item = run->offset + k * run->m;
    double total = 0.0;
    for (const TransferStep& step : model_.transfer_steps(a.nodes, b.nodes, run->m, tier)) {
      int64_t bytes = 0;
      if (workload_.item_payload_bytes.count({step.edge->src, step.edge->dst})) {
        for (int64_t i = first_item; i < first_item + run->m; ++i) {
          bytes += item_payload(*step.edge, i);
        }
      } else {
        bytes = step.edge->unit_payload_bytes * run->m;
      }
      const double leg = estimate_transfer(bytes, step.tier, cluster_);
      std::vector<int> devs = devices_of(step.edge->src);
      const auto& dst = devices_of(step.edge->dst);
      devs.insert(devs.end(), dst.begin(), dst.end());
      for (int l = 0; l < step.legs; ++l) {
        const double saved = now_;
        now_ = saved + total;
        record(EventKind::kTransfer, step.edge->src + "->" + step.edge->dst, devs,
               k, leg);
        now_ = saved;
        total += leg;
      }
    }
    at(now_ + total, kRelease, "", [this, run, k] {
      run->link_busy = false;
      run->arrived[k] = true;
      try_consume(run);
      pump_link(run);
    });
  }

  void try_consume(const std::shared_ptr<PipeRun>& run) {
    if (!run->consumer_idle || run->next_consume >= run->chunks ||
        !run->arrived[run->next_consume]) {
      return;
    }
    const int64_t k = run->next_consume++;
    run->consumer_idle = false;
    const Schedule& s = *run->s;
    assign_to_consumer(*run->channel, s.second->devices, options_.balance, run->m);
    invoke(*s.second, run->offset + k * run->m, [this, run, k] {
      if (k + 1 == run->chunks) {
        Done done = std::move(run->done);
        done();
        return;
      }
      const SubtreeInfo& b = info_.at(run->s->second.get());
      run_switch(b.end, b.start, run->offset + k * run->m, [this, run] {
        run->consumer_idle = true;
        try_consume(run);
      });
    });
  }

  const Schedule& root_;
  const WorkflowGraph& graph_;
  const ClusterSpec& cluster_;
  const Workload& workload_;
  const SimOptions& options_;
  CostModel model_;
  DeviceLockManager locks_;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  double now_ = 0.0;
  int64_t seq_ = 0;
  bool sweep_pending_ = false;
  std::map<int64_t, Op> ops_;

  std::vector<int> rank_;
  std::map<int, const Schedule*> placement_;
  std::map<const Schedule*, SubtreeInfo> info_;
  std::map<const Schedule*, size_t> channel_of_;
  std::vector<std::unique_ptr<ChannelState>> channels_;
  std::vector<ChannelReport> channel_names_;

  std::vector<std::map<std::string, int64_t>> resident_;
  std::vector<int64_t> total_, peak_;
  std::vector<double> busy_;
  SimTrace trace_;
};

}  // namespace

SimTrace simulate(const Schedule& schedule, const WorkflowGraph& graph,
                  const ClusterSpec& cluster, const ProfileTable& costs,
                  const Workload& workload, const SimOptions& options) {
  Engine engine(schedule, graph, cluster, costs, workload, options);
  return engine.run();
}

std::vector<std::string> mutual_exclusion_violations(const SimTrace& trace) {
  struct Span {
    double start, end;
    std::string worker;
  };
  std::map<int, std::vector<Span>> spans;
  std::map<std::pair<int, std::string>, double> open;
  for (const auto& e : trace.events) {
    for (int d : e.devices) {
      switch (e.kind) {
        case EventKind::kTaskStart:
          open[{d, e.worker}] = e.time_s;
          break;
        case EventKind::kTaskEnd: {
          auto it = open.find({d, e.worker});
          if (it != open.end()) {
            spans[d].push_back({it->second, e.time_s, e.worker});
            open.erase(it);
          }
          break;
        }
        case EventKind::kOnload:
        case EventKind::kOffload:
          spans[d].push_back({e.time_s, e.time_s + e.duration_s, e.worker});
          break;
        default:
          break;
      }
    }
  }
  std::vector<std::string> out;
  for (auto& [d, list] : spans) {
    std::stable_sort(list.begin(), list.end(), [](const Span& a, const Span& b) {
      return std::tie(a.start, a.end) < std::tie(b.start, b.end);
    });
    double reach = -kInfiniteTime;
    std::string holder;
    for (const auto& s : list) {
      if (s.start < reach) {
        out.push_back("device " + std::to_string(d) + ": \"" + s.worker +
                      "\" starts at " + std::to_string(s.start) + " while \"" + holder +
                      "\" holds it until " + std::to_string(reach));
      }
      if (s.end > reach) {
        reach = s.end;
        holder = s.worker;
      }
    }
  }
  for (const auto& [key, t] : open) {
    out.push_back("device " + std::to_string(key.first) + ": task of \"" + key.second +
                  "\" started at " + std::to_string(t) + " never ended");
  }
  return out;
}

UtilizationReport compute_utilization(const SimTrace& trace, const ClusterSpec& cluster) {
  if (trace.events.empty()) throw Error("utilization of an empty trace");
  UtilizationReport r;
  const int n = cluster.total_devices();
  r.busy_fraction.assign(n, 0.0);
  r.peak_memory_bytes.assign(n, 0);
  for (const auto& d : trace.devices) {
    if (d.device < 0 || d.device >= n) continue;
    r.busy_fraction[d.device] = trace.makespan_s > 0.0 ? d.busy_s / trace.makespan_s : 0.0;
    r.peak_memory_bytes[d.device] = d.peak_memory_bytes;
  }
  r.min_busy = *std::min_element(r.busy_fraction.begin(), r.busy_fraction.end());
  r.mean_busy = std::accumulate(r.busy_fraction.begin(), r.busy_fraction.end(), 0.0) / n;
  if (!trace.generation_item_done_s.empty() && trace.makespan_s > 0.0) {
    std::vector<double> done = trace.generation_item_done_s;
    std::sort(done.begin(), done.end());
    const size_t count = done.size();
    const size_t idx = (95 * count + 99) / 100 - 1;
    r.idle_tail_fraction = (done.back() - done[idx]) / trace.makespan_s;
  }
  return r;
}

EstimateCheck verify_estimate(const Schedule& schedule, const ScheduleEstimate& estimate,
                              const SimTrace& trace) {
  (void)schedule;
  EstimateCheck c;
  c.estimate_s = estimate.total_time_s;
  c.makespan_s = trace.makespan_s;
  const double diff = std::fabs(c.makespan_s - c.estimate_s);
  c.gap = c.estimate_s > 0.0 ? diff / c.estimate_s : diff;
  return c;
}

}  // namespace flowplan

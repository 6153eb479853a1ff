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

#include "flowplan/io.h"

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flowplan/error.h"

namespace flowplan {

using nlohmann::json;
using nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError(path + ": cannot write file");
  out << contents;
  if (!out) throw ParseError(path + ": write failed");
}

namespace {

// Cursor into a parsed document that knows its JSON pointer.
class Field {
 public:
  Field(const json& value, std::string pointer, const std::string& source,
        const ParseOptions& options)
      : v_(value), ptr_(std::move(pointer)), src_(source), opt_(options) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(src_ + ": " + (ptr_.empty() ? "/" : ptr_) + ": " + what);
  }

  const json& raw() const { return v_; }

  bool has(const char* key) const {
    return v_.is_object() && v_.contains(key) && !v_.at(key).is_null();
  }

  Field at(const char* key) const {
    if (!v_.is_object()) fail("expected an object");
    if (!has(key)) fail(std::string("missing field \"") + key + "\"");
    return {v_.at(key), ptr_ + "/" + key, src_, opt_};
  }

  std::optional<Field> maybe(const char* key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
  }

  std::vector<Field> items() const {
    if (!v_.is_array()) fail("expected an array");
    std::vector<Field> out;
    for (size_t i = 0; i < v_.size(); ++i) {
      out.emplace_back(v_[i], ptr_ + "/" + std::to_string(i), src_, opt_);
    }
    return out;
  }

  int64_t integer() const {
    if (!v_.is_number_integer()) fail("expected an integer");
    return v_.get<int64_t>();
  }
  int small_int() const {
    const int64_t x = integer();
    if (x < INT32_MIN || x > INT32_MAX) fail("integer out of range");
    return static_cast<int>(x);
  }
  double number() const {
    if (!v_.is_number()) fail("expected a number");
    const double x = v_.get<double>();
    if (!std::isfinite(x)) fail("expected a finite number");
    return x;
  }
  bool boolean() const {
    if (!v_.is_boolean()) fail("expected true or false");
    return v_.get<bool>();
  }
  std::string string() const {
    if (!v_.is_string()) fail("expected a string");
    return v_.get<std::string>();
  }

  void allow(std::initializer_list<const char*> keys) const {
    if (!v_.is_object()) fail("expected an object");
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [k, _] : v_.items()) {
      if (known.count(k)) continue;
      const std::string msg = src_ + ": " + ptr_ + "/" + k + ": unknown field";
      if (opt_.strict) throw ParseError(msg);
      if (opt_.warnings) opt_.warnings->push_back(msg + " ignored");
    }
  }

 private:
  const json& v_;
  std::string ptr_;
  const std::string& src_;
  const ParseOptions& opt_;
};

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based; turn it into line:column.
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": " + what);
  }
}

void check_version(const Field& root, const ParseOptions& options, const std::string& source) {
  if (!root.raw().is_object()) root.fail("expected an object");
  if (!root.has("format_version")) {
    const std::string msg = source + ": /: missing field \"format_version\"";
    if (options.strict) throw ParseError(msg);
    if (options.warnings) options.warnings->push_back(msg + ", assuming 1");
    return;
  }
  const Field v = root.at("format_version");
  if (v.integer() != kFormatVersion) {
    v.fail("unsupported format_version " + std::to_string(v.integer()) + " (expected " +
           std::to_string(kFormatVersion) + ")");
  }
}

}  // namespace

WorkflowGraph parse_workflow(const std::string& text, const std::string& source,
                             const ParseOptions& options) {
  const json doc = parse_json(text, source);
  const Field root(doc, "", source, options);
  check_version(root, options, source);
  root.allow({"format_version", "workers", "edges", "total_batch", "name", "description"});
  WorkflowGraph g;
  g.total_batch = root.at("total_batch").integer();
  for (const Field& f : root.at("workers").items()) {
    f.allow({"id", "kind", "min_devices", "supports_chunking", "weight_sync_group",
             "cycle_steps"});
    WorkerSpec w;
    w.id = f.at("id").string();
    w.kind = f.at("kind").string();
    w.min_devices = f.at("min_devices").small_int();
    w.supports_chunking = f.at("supports_chunking").boolean();
    if (auto x = f.maybe("weight_sync_group")) w.weight_sync_group = x->string();
    if (auto x = f.maybe("cycle_steps")) w.cycle_steps = x->small_int();
    g.workers.push_back(std::move(w));
  }
  if (root.has("edges")) {
    for (const Field& f : root.at("edges").items()) {
      f.allow({"src", "dst", "unit_payload_bytes", "channel_id", "offload_to_host"});
      DataEdge e;
      e.src = f.at("src").string();
      e.dst = f.at("dst").string();
      e.unit_payload_bytes = f.at("unit_payload_bytes").integer();
      if (auto x = f.maybe("channel_id")) e.channel_id = x->string();
      if (auto x = f.maybe("offload_to_host")) e.offload_to_host = x->boolean();
      g.edges.push_back(std::move(e));
    }
  }
  return g;
}

ProfileData parse_profiles(const std::string& text, const std::string& source,
                           const ParseOptions& options) {
  const json doc = parse_json(text, source);
  const Field root(doc, "", source, options);
  check_version(root, options, source);
  root.allow({"format_version", "points", "switch", "description"});
  ProfileData out;
  for (const Field& f : root.at("points").items()) {
    f.allow({"worker", "device_count", "batch_size", "exec_time_s", "memory_bytes"});
    ProfilePoint p;
    p.worker_id = f.at("worker").string();
    p.device_count = f.at("device_count").small_int();
    p.batch_size = f.at("batch_size").integer();
    p.exec_time_s = f.at("exec_time_s").number();
    p.memory_bytes = f.at("memory_bytes").integer();
    if (p.device_count < 1) f.at("device_count").fail("must be >= 1");
    if (p.batch_size < 1) f.at("batch_size").fail("must be >= 1");
    if (!(p.exec_time_s > 0.0)) f.at("exec_time_s").fail("must be > 0");
    if (p.memory_bytes < 1) f.at("memory_bytes").fail("must be > 0");
    out.points.push_back(std::move(p));
  }
  if (root.has("switch")) {
    for (const Field& f : root.at("switch").items()) {
      f.allow({"worker", "onload_s", "offload_s"});
      SwitchCost c{f.at("onload_s").number(), f.at("offload_s").number()};
      if (c.onload_s < 0.0) f.at("onload_s").fail("must be >= 0");
      if (c.offload_s < 0.0) f.at("offload_s").fail("must be >= 0");
      out.switches[f.at("worker").string()] = c;
    }
  }
  return out;
}

ClusterSpec parse_cluster(const std::string& text, const std::string& source,
                          const ParseOptions& options) {
  const json doc = parse_json(text, source);
  const Field root(doc, "", source, options);
  check_version(root, options, source);
  root.allow({"format_version", "num_nodes", "devices_per_node", "device_memory_bytes",
              "tier_bandwidth_bytes_per_s", "description"});
  ClusterSpec c;
  c.num_nodes = root.at("num_nodes").small_int();
  c.devices_per_node = root.at("devices_per_node").small_int();
  c.device_memory_bytes = root.at("device_memory_bytes").integer();
  const Field bw = root.at("tier_bandwidth_bytes_per_s");
  bw.allow({"intra_device", "intra_node", "inter_node", "host_link"});
  if (auto x = bw.maybe("intra_device")) c.intra_device_bw = x->number();
  c.intra_node_bw = bw.at("intra_node").number();
  c.inter_node_bw = bw.at("inter_node").number();
  c.host_link_bw = bw.at("host_link").number();
  if (auto problems = validate_cluster(c); !problems.empty()) root.fail(problems.front());
  return c;
}

Workload parse_workload(const std::string& text, const std::string& source,
                        const ParseOptions& options) {
  const json doc = parse_json(text, source);
  const Field root(doc, "", source, options);
  check_version(root, options, source);
  root.allow({"format_version", "explicit_only", "seed", "chunks", "item_factors",
              "item_payload_bytes"});
  Workload wl;
  if (auto x = root.maybe("explicit_only")) wl.explicit_only = x->boolean();
  if (auto x = root.maybe("seed")) wl.seed = static_cast<uint64_t>(x->integer());
  if (auto chunks = root.maybe("chunks")) {
    for (const Field& f : chunks->items()) {
      f.allow({"worker", "chunk", "time_s"});
      const double t = f.at("time_s").number();
      if (!(t > 0.0)) f.at("time_s").fail("must be > 0");
      wl.chunk_time_s[{f.at("worker").string(), f.at("chunk").integer()}] = t;
    }
  }
  if (auto factors = root.maybe("item_factors")) {
    for (const Field& f : factors->items()) {
      f.allow({"worker", "factors"});
      auto& out = wl.item_factor[f.at("worker").string()];
      for (const Field& x : f.at("factors").items()) {
        const double v = x.number();
        if (!(v > 0.0)) x.fail("must be > 0");
        out.push_back(v);
      }
    }
  }
  if (auto payloads = root.maybe("item_payload_bytes")) {
    for (const Field& f : payloads->items()) {
      f.allow({"src", "dst", "bytes"});
      auto& out = wl.item_payload_bytes[{f.at("src").string(), f.at("dst").string()}];
      for (const Field& x : f.at("bytes").items()) {
        if (x.integer() < 0) x.fail("must be >= 0");
        out.push_back(x.integer());
      }
    }
  }
  return wl;
}

// --- schedules -------------------------------------------------------------

namespace {

ordered_json schedule_node(const Schedule& s) {
  ordered_json j;
  j["type"] = std::string(kind_name(s.kind));
  j["devices"] = s.devices;
  j["batch"] = s.batch;
  switch (s.kind) {
    case ScheduleKind::kLeaf:
      j["node"] = s.node_id;
      j["workers"] = s.workers;
      break;
    case ScheduleKind::kTemporal:
      j["first"] = schedule_node(*s.first);
      j["second"] = schedule_node(*s.second);
      break;
    case ScheduleKind::kPipeline:
      j["granularity"] = s.granularity;
      j["producer"] = schedule_node(*s.first);
      j["consumer"] = schedule_node(*s.second);
      break;
  }
  return j;
}

ordered_json number_or_null(double x) {
  return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
}

SchedulePtr read_node(const Field& f) {
  const std::string type = f.at("type").string();
  std::vector<int> devices;
  for (const Field& d : f.at("devices").items()) devices.push_back(d.small_int());
  const int64_t batch = f.at("batch").integer();
  SchedulePtr out;
  if (type == "leaf") {
    f.allow({"type", "devices", "batch", "node", "workers"});
    std::vector<std::string> workers;
    for (const Field& w : f.at("workers").items()) workers.push_back(w.string());
    out = Schedule::leaf(f.at("node").string(), std::move(workers), devices, batch);
  } else if (type == "temporal") {
    f.allow({"type", "devices", "batch", "first", "second"});
    out = Schedule::temporal(read_node(f.at("first")), read_node(f.at("second")));
  } else if (type == "pipeline") {
    f.allow({"type", "devices", "batch", "granularity", "producer", "consumer"});
    out = Schedule::pipeline(read_node(f.at("producer")), read_node(f.at("consumer")),
                             f.at("granularity").integer(), batch);
  } else {
    f.at("type").fail("unknown node type \"" + type + "\"");
  }
  std::sort(devices.begin(), devices.end());
  if (out->devices != devices) f.at("devices").fail("does not match the children");
  if (out->batch != batch) f.at("batch").fail("does not match the children");
  return out;
}

}  // namespace

std::string schedule_to_json(const ScheduleDocument& doc) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["mode"] = doc.mode;
  j["total_batch"] = doc.total_batch;
  j["num_devices"] = doc.num_devices;
  ordered_json est;
  est["total_time_s"] = number_or_null(doc.estimate.total_time_s);
  est["feasible"] = doc.estimate.feasible;
  ordered_json peaks = ordered_json::array();
  for (const auto& [d, bytes] : doc.estimate.peak_memory_by_device) {
    peaks.push_back({{"device", d}, {"bytes", bytes}});
  }
  est["peak_memory_by_device"] = std::move(peaks);
  est["binding_constraint"] = doc.estimate.binding_constraint;
  j["estimate"] = std::move(est);
  j["schedule"] = doc.schedule ? schedule_node(*doc.schedule) : ordered_json(nullptr);
  return j.dump(2) + "\n";
}

ScheduleDocument parse_schedule(const std::string& text, const std::string& source,
                                const ParseOptions& options) {
  const json doc = parse_json(text, source);
  const Field root(doc, "", source, options);
  check_version(root, options, source);
  root.allow({"format_version", "mode", "total_batch", "num_devices", "estimate", "schedule"});
  ScheduleDocument out;
  out.mode = root.at("mode").string();
  out.total_batch = root.at("total_batch").integer();
  out.num_devices = root.at("num_devices").small_int();
  const Field est = root.at("estimate");
  est.allow({"total_time_s", "feasible", "peak_memory_by_device", "binding_constraint"});
  out.estimate.feasible = est.at("feasible").boolean();
  out.estimate.total_time_s = est.has("total_time_s")
                                  ? est.at("total_time_s").number()
                                  : std::numeric_limits<double>::infinity();
  if (auto peaks = est.maybe("peak_memory_by_device")) {
    for (const Field& p : peaks->items()) {
      p.allow({"device", "bytes"});
      out.estimate.peak_memory_by_device[p.at("device").small_int()] = p.at("bytes").integer();
    }
  }
  if (auto b = est.maybe("binding_constraint")) out.estimate.binding_constraint = b->string();
  if (root.has("schedule")) out.schedule = read_node(root.at("schedule"));
  return out;
}

// --- traces ----------------------------------------------------------------

std::string trace_to_json(const SimTrace& trace, const UtilizationReport& utilization,
                          const EstimateCheck& check) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["makespan_s"] = trace.makespan_s;
  ordered_json events = ordered_json::array();
  for (const auto& e : trace.events) {
    ordered_json ev;
    ev["time_s"] = e.time_s;
    ev["kind"] = std::string(event_kind_name(e.kind));
    ev["worker"] = e.worker;
    ev["devices"] = e.devices;
    ev["chunk"] = e.chunk;
    if (e.kind == EventKind::kOnload || e.kind == EventKind::kOffload ||
        e.kind == EventKind::kTransfer) {
      ev["duration_s"] = e.duration_s;
    }
    events.push_back(std::move(ev));
  }
  j["events"] = std::move(events);
  ordered_json devices = ordered_json::array();
  for (const auto& d : trace.devices) {
    devices.push_back({{"device", d.device},
                       {"busy_s", d.busy_s},
                       {"peak_memory_bytes", d.peak_memory_bytes}});
  }
  j["devices"] = std::move(devices);
  ordered_json util;
  util["busy_fraction"] = utilization.busy_fraction;
  util["mean_busy"] = utilization.mean_busy;
  util["min_busy"] = utilization.min_busy;
  util["idle_tail_fraction"] = utilization.idle_tail_fraction;
  j["utilization"] = std::move(util);
  ordered_json gap;
  gap["estimate_s"] = number_or_null(check.estimate_s);
  gap["makespan_s"] = check.makespan_s;
  gap["relative_gap"] = number_or_null(check.gap);
  j["estimate_gap"] = std::move(gap);
  ordered_json channels = ordered_json::array();
  for (const auto& c : trace.channels) {
    ordered_json cj;
    cj["producer"] = c.producer;
    cj["consumer"] = c.consumer;
    cj["offload_to_host"] = c.offload_to_host;
    cj["items_enqueued"] = c.items_enqueued;
    cj["items_dequeued"] = c.items_dequeued;
    ordered_json loads = ordered_json::array();
    for (const auto& [consumer, load] : c.consumer_load) {
      loads.push_back({{"consumer", consumer}, {"weight", load}});
    }
    cj["consumer_load"] = std::move(loads);
    channels.push_back(std::move(cj));
  }
  j["channels"] = std::move(channels);
  j["violations"] = trace.violations;
  j["event_cap_hit"] = trace.event_cap_hit;
  return j.dump(2) + "\n";
}

}  // namespace flowplan

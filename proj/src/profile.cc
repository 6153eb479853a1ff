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

#include "flowplan/profile.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "flowplan/error.h"

namespace flowplan {

struct ProfileTableBuilder {
  static auto& groups(ProfileTable& t) { return t.groups_; }
  static auto& switches(ProfileTable& t) { return t.switches_; }
};

bool ProfileTable::has_worker(std::string_view worker) const {
  auto it = groups_.lower_bound({std::string(worker), 0});
  return it != groups_.end() && it->first.first == worker;
}

const std::vector<ProfileSample>* ProfileTable::group(std::string_view worker,
                                                      int devices) const {
  auto it = groups_.find({std::string(worker), devices});
  return it == groups_.end() ? nullptr : &it->second;
}

std::vector<int> ProfileTable::device_counts(std::string_view worker) const {
  std::vector<int> out;
  for (auto it = groups_.lower_bound({std::string(worker), 0});
       it != groups_.end() && it->first.first == worker; ++it) {
    out.push_back(it->first.second);
  }
  return out;
}

std::optional<SwitchCost> ProfileTable::switch_cost(std::string_view worker) const {
  auto it = switches_.find(worker);
  if (it == switches_.end()) return std::nullopt;
  return it->second;
}

FitResult fit_profile(std::span<const ProfilePoint> samples,
                      const std::map<std::string, SwitchCost>& switches) {
  if (samples.empty()) throw Error("fit_profile: no profile samples");
  FitResult result;
  auto& groups = ProfileTableBuilder::groups(result.table);

  for (const auto& p : samples) {
    if (p.worker_id.empty() || p.device_count < 1 || p.batch_size < 1 ||
        !(p.exec_time_s > 0.0) || p.memory_bytes < 1) {
      throw Error("fit_profile: sample for worker \"" + p.worker_id +
                  "\" has a non-positive field");
    }
    auto& group = groups[{p.worker_id, p.device_count}];
    auto it = std::find_if(group.begin(), group.end(), [&](const auto& s) {
      return s.batch == p.batch_size;
    });
    if (it != group.end()) {
      *it = {p.batch_size, p.exec_time_s, p.memory_bytes};
      ++result.report.duplicates;
      result.report.messages.push_back(
          "duplicate sample (" + p.worker_id + ", " +
          std::to_string(p.device_count) + " devices, batch " +
          std::to_string(p.batch_size) + "): last one wins");
    } else {
      group.push_back({p.batch_size, p.exec_time_s, p.memory_bytes});
    }
  }

  for (auto& [key, group] : groups) {
    std::sort(group.begin(), group.end(),
              [](const auto& a, const auto& b) { return a.batch < b.batch; });
    double running = 0.0;
    for (auto& s : group) {
      if (s.time_s < running) {
        result.report.messages.push_back(
            "non-monotone time for " + key.first + " at " +
            std::to_string(key.second) + " devices, batch " +
            std::to_string(s.batch) + ": raised to running max");
        s.time_s = running;
        ++result.report.cleanups;
      }
      running = s.time_s;
    }
  }

  for (const auto& [worker, cost] : switches) {
    if (cost.onload_s < 0.0 || cost.offload_s < 0.0) {
      throw Error("fit_profile: negative switch cost for worker \"" + worker + "\"");
    }
    ProfileTableBuilder::switches(result.table)[worker] = cost;
  }
  return result;
}

namespace {

struct GroupChoice {
  const std::vector<ProfileSample>* samples = nullptr;
  int measured_devices = 0;
  bool extrapolated = false;
};

GroupChoice choose_group(const ProfileTable& table, std::string_view worker,
                         int devices) {
  if (devices < 1) throw Error("device count must be >= 1");
  if (const auto* g = table.group(worker, devices)) return {g, devices, false};
  const auto counts = table.device_counts(worker);
  if (counts.empty()) {
    throw MissingProfileError("no profile for worker \"" + std::string(worker) + "\"");
  }
  int best = counts.front();
  for (int c : counts) {
    if (std::abs(c - devices) < std::abs(best - devices)) best = c;
  }
  return {table.group(worker, best), best, true};
}

template <typename Get>
double interpolate(const std::vector<ProfileSample>& s, int64_t batch, Get get) {
  const double b = static_cast<double>(batch);
  if (s.size() == 1) {
    return get(s[0]) * b / static_cast<double>(s[0].batch);
  }
  size_t hi = 1;
  while (hi + 1 < s.size() && s[hi].batch < batch) ++hi;
  const auto& lo_s = s[hi - 1];
  const auto& hi_s = s[hi];
  if (batch == lo_s.batch) return get(lo_s);
  if (batch == hi_s.batch) return get(hi_s);
  const double slope = (get(hi_s) - get(lo_s)) /
                       static_cast<double>(hi_s.batch - lo_s.batch);
  return get(lo_s) + slope * (b - static_cast<double>(lo_s.batch));
}

}  // namespace

TimeEstimate estimate_exec_time(const ProfileTable& table,
                                std::string_view worker, int64_t batch,
                                int devices) {
  if (batch < 1) throw Error("batch must be >= 1");
  const GroupChoice g = choose_group(table, worker, devices);
  const auto& s = *g.samples;
  double t = interpolate(s, batch, [](const ProfileSample& p) { return p.time_s; });
  t = std::max(t, s.front().time_s);
  if (g.extrapolated) {
    t = t * static_cast<double>(g.measured_devices) / static_cast<double>(devices);
  }
  return {t, g.extrapolated};
}

MemoryEstimate estimate_memory(const ProfileTable& table,
                               std::string_view worker, int64_t batch,
                               int devices) {
  if (batch < 1) throw Error("batch must be >= 1");
  const GroupChoice g = choose_group(table, worker, devices);
  auto mem_of = [](const ProfileSample& p) {
    return static_cast<double>(p.memory_bytes);
  };
  double bytes = std::max(0.0, interpolate(*g.samples, batch, mem_of));
  if (g.extrapolated) {
    const auto counts = table.device_counts(worker);
    bool sharded = false;
    if (counts.size() >= 2) {
      const auto& few = *table.group(worker, counts.front());
      const auto& many = *table.group(worker, counts.back());
      const int64_t probe = few.front().batch;
      sharded = interpolate(many, probe, mem_of) < interpolate(few, probe, mem_of);
    }
    if (sharded) {
      bytes = bytes * static_cast<double>(g.measured_devices) /
              static_cast<double>(devices);
    }
  }
  return {std::llround(bytes), g.extrapolated};
}

double estimate_switch(const ProfileTable& table, std::string_view worker,
                       SwitchDirection direction, const SwitchContext& ctx) {
  if (ctx.waived) return 0.0;
  if (auto cost = table.switch_cost(worker)) {
    return direction == SwitchDirection::kOnload ? cost->onload_s : cost->offload_s;
  }
  const auto counts = table.device_counts(worker);
  if (counts.empty() || !(ctx.host_link_bw > 0.0)) return 0.0;
  const auto mem = estimate_memory(table, worker, std::max<int64_t>(1, ctx.total_batch),
                                   counts.front());
  return static_cast<double>(mem.bytes) / ctx.host_link_bw;
}

double estimate_transfer(int64_t bytes, LocalityTier tier,
                         const ClusterSpec& cluster) {
  if (bytes < 0) throw Error("transfer size must be >= 0");
  if (bytes == 0 || tier == LocalityTier::kIntraDevice) return 0.0;
  return static_cast<double>(bytes) / cluster.bandwidth(tier);
}

}  // namespace flowplan

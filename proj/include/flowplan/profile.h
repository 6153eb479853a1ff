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

// Profile-driven cost model: execution time and memory as functions of
// (worker, batch size, device count), context-switch costs and transfer
// costs.

#ifndef FLOWPLAN_PROFILE_H_
#define FLOWPLAN_PROFILE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowplan/cluster.h"

namespace flowplan {

struct ProfilePoint {
  std::string worker_id;
  int device_count = 1;
  int64_t batch_size = 1;
  double exec_time_s = 0.0;
  int64_t memory_bytes = 0;
};

struct ProfileSample {
  int64_t batch = 0;
  double time_s = 0.0;
  int64_t memory_bytes = 0;
};

struct SwitchCost {
  double onload_s = 0.0;
  double offload_s = 0.0;
};

enum class SwitchDirection { kOnload, kOffload };

class ProfileTable {
 public:
  using GroupKey = std::pair<std::string, int>;  // (worker, device count)

  bool has_worker(std::string_view worker) const;
  // Samples for one (worker, device count), sorted by batch; null if absent.
  const std::vector<ProfileSample>* group(std::string_view worker,
                                          int devices) const;
  // Measured device counts for a worker, ascending.
  std::vector<int> device_counts(std::string_view worker) const;
  std::optional<SwitchCost> switch_cost(std::string_view worker) const;

  const std::map<GroupKey, std::vector<ProfileSample>>& groups() const {
    return groups_;
  }
  const std::map<std::string, SwitchCost, std::less<>>& switches() const {
    return switches_;
  }

 private:
  friend struct ProfileTableBuilder;
  std::map<GroupKey, std::vector<ProfileSample>> groups_;
  std::map<std::string, SwitchCost, std::less<>> switches_;
};

struct FitReport {
  int cleanups = 0;    // samples raised to the running max
  int duplicates = 0;  // (worker, devices, batch) rows overwritten
  std::vector<std::string> messages;
};

struct FitResult {
  ProfileTable table;
  FitReport report;
};

// Groups samples by (worker, device count), sorts by batch, and enforces
// non-decreasing time in batch by replacing violators with the running
// maximum. Duplicate rows: last one wins. Throws Error on empty input or
// non-positive fields.
FitResult fit_profile(std::span<const ProfilePoint> samples,
                      const std::map<std::string, SwitchCost>& switches = {});

struct TimeEstimate {
  double seconds = 0.0;
  bool extrapolated_devices = false;
};

struct MemoryEstimate {
  int64_t bytes = 0;
  bool extrapolated_devices = false;
};

// Piecewise-linear in batch, linear extrapolation outside the measured
// range (clamped below at the smallest measured time). An unmeasured device
// count scales the nearest measured one by measured/requested.
TimeEstimate estimate_exec_time(const ProfileTable& table,
                                std::string_view worker, int64_t batch,
                                int devices);

// Per-device bytes. Piecewise-linear in batch. Across device counts the
// measurement is used as-is unless the profile itself shows memory shrinking
// with more devices, in which case it scales inversely.
MemoryEstimate estimate_memory(const ProfileTable& table,
                               std::string_view worker, int64_t batch,
                               int devices);

struct SwitchContext {
  int64_t total_batch = 1;
  double host_link_bw = 1.0;
  bool waived = false;  // co-resident weight_sync_group partner
};

// Profiled constant if present, otherwise the worker's memory at the
// iteration batch moved over the host link.
double estimate_switch(const ProfileTable& table, std::string_view worker,
                       SwitchDirection direction, const SwitchContext& ctx);

double estimate_transfer(int64_t bytes, LocalityTier tier,
                         const ClusterSpec& cluster);

}  // namespace flowplan

#endif  // FLOWPLAN_PROFILE_H_

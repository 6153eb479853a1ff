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

#ifndef FLOWPLAN_CLUSTER_H_
#define FLOWPLAN_CLUSTER_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowplan {

// Where a transfer travels. IntraDevice is zero-copy; HostLink is the
// device <-> host path used for offloading.
enum class LocalityTier { kIntraDevice, kIntraNode, kInterNode, kHostLink };

std::string_view tier_name(LocalityTier tier);

struct ClusterSpec {
  int num_nodes = 1;
  int devices_per_node = 1;
  int64_t device_memory_bytes = 0;
  double intra_device_bw = 1e15;
  double intra_node_bw = 0.0;
  double inter_node_bw = 0.0;
  double host_link_bw = 0.0;

  int total_devices() const { return num_nodes * devices_per_node; }
  int node_of(int device) const { return device / devices_per_node; }
  double bandwidth(LocalityTier tier) const;
};

// Human-readable problems; empty when the spec is usable.
std::vector<std::string> validate_cluster(const ClusterSpec& cluster);

// Tier for data moving from devices `src` to devices `dst`: IntraDevice if
// the sets overlap, IntraNode if all of them live on one node, InterNode
// otherwise.
LocalityTier tier_between(const ClusterSpec& cluster, std::span<const int> src,
                          std::span<const int> dst);

}  // namespace flowplan

#endif  // FLOWPLAN_CLUSTER_H_

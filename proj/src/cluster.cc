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

#include "flowplan/cluster.h"

#include <algorithm>

namespace flowplan {

std::string_view tier_name(LocalityTier tier) {
  switch (tier) {
    case LocalityTier::kIntraDevice:
      return "intra_device";
    case LocalityTier::kIntraNode:
      return "intra_node";
    case LocalityTier::kInterNode:
      return "inter_node";
    case LocalityTier::kHostLink:
      return "host_link";
  }
  return "unknown";
}

double ClusterSpec::bandwidth(LocalityTier tier) const {
  switch (tier) {
    case LocalityTier::kIntraDevice:
      return intra_device_bw;
    case LocalityTier::kIntraNode:
      return intra_node_bw;
    case LocalityTier::kInterNode:
      return inter_node_bw;
    case LocalityTier::kHostLink:
      return host_link_bw;
  }
  return 0.0;
}

std::vector<std::string> validate_cluster(const ClusterSpec& c) {
  std::vector<std::string> problems;
  if (c.num_nodes < 1) problems.push_back("num_nodes must be >= 1");
  if (c.devices_per_node < 1) problems.push_back("devices_per_node must be >= 1");
  if (c.device_memory_bytes < 1) problems.push_back("device_memory_bytes must be >= 1");
  const std::pair<const char*, double> bws[] = {
      {"intra_device", c.intra_device_bw},
      {"intra_node", c.intra_node_bw},
      {"inter_node", c.inter_node_bw},
      {"host_link", c.host_link_bw}};
  for (auto [name, bw] : bws) {
    if (!(bw > 0.0)) problems.push_back(std::string(name) + " bandwidth must be > 0");
  }
  if (c.intra_device_bw < c.intra_node_bw || c.intra_node_bw < c.inter_node_bw) {
    problems.push_back(
        "tier bandwidths must be ordered intra_device >= intra_node >= inter_node");
  }
  return problems;
}

LocalityTier tier_between(const ClusterSpec& cluster, std::span<const int> src,
                          std::span<const int> dst) {
  for (int a : src) {
    if (std::find(dst.begin(), dst.end(), a) != dst.end()) {
      return LocalityTier::kIntraDevice;
    }
  }
  int node = -1;
  for (auto set : {src, dst}) {
    for (int d : set) {
      int n = cluster.node_of(d);
      if (node >= 0 && n != node) return LocalityTier::kInterNode;
      node = n;
    }
  }
  return LocalityTier::kIntraNode;
}

}  // namespace flowplan

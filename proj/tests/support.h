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

// Instance builders and seeded random generators shared by the tests.

#ifndef FLOWPLAN_TESTS_SUPPORT_H_
#define FLOWPLAN_TESTS_SUPPORT_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "flowplan/cluster.h"
#include "flowplan/graph.h"
#include "flowplan/profile.h"

namespace flowplan::testing {

struct Instance {
  WorkflowGraph graph;
  ClusterSpec cluster;
  ProfileTable profiles;
  std::string label;
};

class ProfileBuilder {
 public:
  ProfileBuilder& point(const std::string& worker, int devices, int64_t batch,
                        double time_s, int64_t memory_bytes);
  ProfileBuilder& switching(const std::string& worker, double onload_s, double offload_s);
  // time = fixed + per_item * batch / devices at every (batch, devices) listed.
  ProfileBuilder& linear(const std::string& worker, std::vector<int> devices,
                         std::vector<int64_t> batches, double fixed, double per_item,
                         int64_t memory_bytes);
  ProfileTable build() const;

 private:
  std::vector<ProfilePoint> points_;
  std::map<std::string, SwitchCost> switches_;
};

WorkerSpec worker(const std::string& id, const std::string& kind = "compute",
                  int min_devices = 1, bool chunking = true);
DataEdge edge(const std::string& src, const std::string& dst, int64_t payload = 0);

ClusterSpec cluster(int nodes, int per_node, int64_t memory = int64_t{1} << 40,
                    double intra = 1e11, double inter = 1e10, double host = 1e10);

struct RandomShape {
  int max_workers = 5;
  int max_devices = 8;
  std::vector<int64_t> batches{1, 2, 3, 4, 6, 8};
  double cycle_probability = 0.0;  // chance of one back edge
  bool zero_transfer = false;
  bool zero_switch = false;
};

// Connected workflow, cluster and monotone profiles drawn from `rng`.
Instance random_instance(std::mt19937_64& rng, const RandomShape& shape = {});

}  // namespace flowplan::testing

#endif  // FLOWPLAN_TESTS_SUPPORT_H_

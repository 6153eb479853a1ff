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

#include "support.h"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace flowplan::testing {

ProfileBuilder& ProfileBuilder::point(const std::string& worker, int devices,
                                      int64_t batch, double time_s,
                                      int64_t memory_bytes) {
  points_.push_back({worker, devices, batch, time_s, memory_bytes});
  return *this;
}

ProfileBuilder& ProfileBuilder::switching(const std::string& worker, double onload_s,
                                          double offload_s) {
  switches_[worker] = {onload_s, offload_s};
  return *this;
}

ProfileBuilder& ProfileBuilder::linear(const std::string& worker, std::vector<int> devices,
                                       std::vector<int64_t> batches, double fixed,
                                       double per_item, int64_t memory_bytes) {
  for (int n : devices) {
    for (int64_t b : batches) {
      point(worker, n, b, fixed + per_item * static_cast<double>(b) / n, memory_bytes);
    }
  }
  return *this;
}

ProfileTable ProfileBuilder::build() const { return fit_profile(points_, switches_).table; }

WorkerSpec worker(const std::string& id, const std::string& kind, int min_devices,
                  bool chunking) {
  WorkerSpec w;
  w.id = id;
  w.kind = kind;
  w.min_devices = min_devices;
  w.supports_chunking = chunking;
  return w;
}

DataEdge edge(const std::string& src, const std::string& dst, int64_t payload) {
  DataEdge e;
  e.src = src;
  e.dst = dst;
  e.unit_payload_bytes = payload;
  return e;
}

ClusterSpec cluster(int nodes, int per_node, int64_t memory, double intra, double inter,
                    double host) {
  ClusterSpec c;
  c.num_nodes = nodes;
  c.devices_per_node = per_node;
  c.device_memory_bytes = memory;
  c.intra_node_bw = intra;
  c.inter_node_bw = inter;
  c.host_link_bw = host;
  return c;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

Instance random_instance(std::mt19937_64& rng, const RandomShape& shape) {
  Instance inst;
  const int k = pick(rng, 1, shape.max_workers);
  const int64_t batch = shape.batches[pick(rng, 0, static_cast<int>(shape.batches.size()) - 1)];
  inst.graph.total_batch = batch;

  const int devices = pick(rng, 1, shape.max_devices);
  int nodes = 1;
  if (devices % 2 == 0 && devices >= 4 && pick(rng, 0, 2) == 0) nodes = 2;
  inst.cluster = cluster(nodes, devices / nodes, int64_t{1} << 40, 1e9 * uniform(rng, 1, 4),
                         1e8 * uniform(rng, 1, 4), 1e8 * uniform(rng, 1, 4));

  for (int i = 0; i < k; ++i) {
    WorkerSpec w = worker("w" + std::to_string(i), pick(rng, 0, 3) == 0 ? "generation" : "compute",
                          pick(rng, 0, 3) == 0 ? 2 : 1, pick(rng, 0, 4) != 0);
    if (pick(rng, 0, 3) == 0) w.weight_sync_group = "g" + std::to_string(pick(rng, 0, 1));
    inst.graph.workers.push_back(w);
  }
  auto add_edge = [&](int a, int b) {
    DataEdge e = edge("w" + std::to_string(a), "w" + std::to_string(b),
                      shape.zero_transfer ? 0 : pick(rng, 0, 4) * 250000);
    e.offload_to_host = !shape.zero_transfer && pick(rng, 0, 7) == 0;
    inst.graph.edges.push_back(e);
  };
  for (int j = 1; j < k; ++j) {
    add_edge(pick(rng, 0, j - 1), j);
    for (int i = 0; i < j; ++i) {
      if (pick(rng, 0, 3) == 0) add_edge(i, j);
    }
  }
  if (k >= 2 && uniform(rng, 0, 1) < shape.cycle_probability) {
    const int b = pick(rng, 1, k - 1);
    add_edge(b, pick(rng, 0, b - 1));
    for (auto& w : inst.graph.workers) w.cycle_steps = pick(rng, 1, 3);
  }
  // Parallel edge duplicates are harmless but keep ids unique per pair.
  std::sort(inst.graph.edges.begin(), inst.graph.edges.end(),
            [](const DataEdge& a, const DataEdge& b) {
              return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
            });
  inst.graph.edges.erase(std::unique(inst.graph.edges.begin(), inst.graph.edges.end(),
                                     [](const DataEdge& a, const DataEdge& b) {
                                       return a.src == b.src && a.dst == b.dst;
                                     }),
                         inst.graph.edges.end());

  std::vector<int64_t> batch_points{1};
  if (batch > 1) batch_points.push_back(batch);
  if (batch > 3) batch_points.push_back(batch / 2);
  std::sort(batch_points.begin(), batch_points.end());

  ProfileBuilder pb;
  int64_t biggest = 0;
  for (const auto& w : inst.graph.workers) {
    const double fixed = uniform(rng, 0.05, 1.0);
    const double per_item = uniform(rng, 0.1, 2.0);
    const double scaling = uniform(rng, 0.2, 1.0);
    const int64_t weights = pick(rng, 1, 16) * (int64_t{1} << 28);
    const int64_t activations = pick(rng, 0, 8) * (int64_t{1} << 26);
    const bool sharded = pick(rng, 0, 1) == 0;
    std::vector<int> counts;
    for (int n : {1, 2, 4, 8}) {
      if (n <= devices && (n == 1 || pick(rng, 0, 1) == 0)) counts.push_back(n);
    }
    if (pick(rng, 0, 4) == 0 && counts.size() > 1) counts.erase(counts.begin());
    for (int n : counts) {
      for (int64_t b : batch_points) {
        const double t = fixed + per_item * static_cast<double>(b) * std::pow(n, -scaling);
        const int64_t mem = (sharded ? weights / n : weights) + activations * b / n;
        pb.point(w.id, n, b, t, mem);
        biggest = std::max(biggest, mem);
      }
    }
    if (!shape.zero_switch && pick(rng, 0, 2) != 0) {
      pb.switching(w.id, uniform(rng, 0.0, 0.5), uniform(rng, 0.0, 0.5));
    } else if (shape.zero_switch) {
      pb.switching(w.id, 0.0, 0.0);
    }
  }
  inst.profiles = pb.build();
  // Occasionally tight enough to rule some placements out.
  inst.cluster.device_memory_bytes =
      pick(rng, 0, 3) == 0 ? biggest * 3 / 4 : biggest * 4;
  inst.label = "k=" + std::to_string(k) + " N=" + std::to_string(devices) +
               " M=" + std::to_string(batch);
  return inst;
}

}  // namespace flowplan::testing

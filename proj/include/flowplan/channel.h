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

// Data channels between a producer and its consumers: a FIFO of weighted
// items plus the policy that spreads them over consumer ranks.

#ifndef FLOWPLAN_CHANNEL_H_
#define FLOWPLAN_CHANNEL_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flowplan {

struct ChannelItem {
  int64_t payload_bytes = 0;
  double weight = 1.0;
  int64_t producer_chunk = 0;
};

struct ChannelAssignment {
  int64_t producer_chunk = 0;
  double weight = 0.0;
  int consumer = 0;
};

struct ChannelState {
  std::string id;
  std::deque<ChannelItem> queue;
  bool offload_to_host = false;
  std::map<int, double> load;  // accumulated weight per consumer
  std::vector<ChannelAssignment> log;
  std::vector<std::string> notes;  // policy fallbacks
  int64_t enqueued = 0;
  int64_t dequeued = 0;

  void push(ChannelItem item);
};

// Sees the queue (front = next item), the consumer ids and their loads in
// the same order; returns the chosen consumer id.
using CustomBalancer = std::function<std::optional<int>(
    const std::deque<ChannelItem>& queue, const std::vector<int>& consumers,
    const std::vector<double>& loads)>;

struct BalancePolicy {
  CustomBalancer custom;  // empty: least accumulated weight, ties to lowest id
};

// Drains up to `count` items (all when negative) in FIFO order and returns the
// consumer id picked for each. Throws Error when `consumers` is empty.
std::vector<int> assign_to_consumer(ChannelState& channel,
                                    const std::vector<int>& consumers,
                                    const BalancePolicy& policy = {},
                                    int64_t count = -1);

}  // namespace flowplan

#endif  // FLOWPLAN_CHANNEL_H_

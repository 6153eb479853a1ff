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

#include "flowplan/channel.h"

#include <algorithm>

#include "flowplan/error.h"

namespace flowplan {

void ChannelState::push(ChannelItem item) {
  queue.push_back(item);
  ++enqueued;
}

namespace {

int least_loaded(const std::vector<int>& consumers, const std::vector<double>& loads) {
  size_t best = 0;
  for (size_t i = 1; i < consumers.size(); ++i) {
    if (loads[i] < loads[best] || (loads[i] == loads[best] && consumers[i] < consumers[best])) {
      best = i;
    }
  }
  return consumers[best];
}

}  // namespace

std::vector<int> assign_to_consumer(ChannelState& channel,
                                    const std::vector<int>& consumers,
                                    const BalancePolicy& policy, int64_t count) {
  if (consumers.empty()) throw Error("channel " + channel.id + " has no consumers");
  std::vector<int> out;
  std::vector<double> loads(consumers.size());
  while (!channel.queue.empty() && (count < 0 || static_cast<int64_t>(out.size()) < count)) {
    for (size_t i = 0; i < consumers.size(); ++i) loads[i] = channel.load[consumers[i]];
    int chosen = least_loaded(consumers, loads);
    if (policy.custom) {
      const std::optional<int> pick = policy.custom(channel.queue, consumers, loads);
      if (pick && std::find(consumers.begin(), consumers.end(), *pick) != consumers.end()) {
        chosen = *pick;
      } else {
        channel.notes.push_back("custom policy returned " +
                                (pick ? std::to_string(*pick) : std::string("nothing")) +
                                "; fell back to least-loaded consumer " +
                                std::to_string(chosen));
      }
    }
    const ChannelItem item = channel.queue.front();
    channel.queue.pop_front();
    ++channel.dequeued;
    channel.load[chosen] += item.weight;
    channel.log.push_back({item.producer_chunk, item.weight, chosen});
    out.push_back(chosen);
  }
  return out;
}

}  // namespace flowplan

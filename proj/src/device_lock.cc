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

#include "flowplan/device_lock.h"

#include <algorithm>

#include "flowplan/error.h"

namespace flowplan {

DeviceLockManager::DeviceLockManager(int devices) : holder_(devices, -1) {}

int64_t DeviceLockManager::request(std::vector<int> devices, int rank, double time,
                                   std::string worker) {
  std::sort(devices.begin(), devices.end());
  devices.erase(std::unique(devices.begin(), devices.end()), devices.end());
  for (int d : devices) {
    if (d < 0 || d >= static_cast<int>(holder_.size())) {
      throw Error("lock request for unknown device " + std::to_string(d));
    }
  }
  const int64_t id = next_id_++;
  waiting_.emplace(Priority{rank, time, id},
                   LockRequest{id, std::move(devices), rank, time, std::move(worker)});
  return id;
}

std::vector<int64_t> DeviceLockManager::grant() {
  std::vector<int64_t> out;
  std::vector<bool> reserved(holder_.size(), false);
  for (auto it = waiting_.begin(); it != waiting_.end();) {
    const auto& devs = it->second.devices;
    const bool free = std::all_of(devs.begin(), devs.end(), [&](int d) {
      return holder_[d] < 0 && !reserved[d];
    });
    if (free) {
      for (int d : devs) holder_[d] = it->second.id;
      out.push_back(it->second.id);
      held_.emplace(it->second.id, std::move(it->second));
      it = waiting_.erase(it);
    } else {
      for (int d : devs) reserved[d] = true;
      ++it;
    }
  }
  return out;
}

void DeviceLockManager::release(int64_t id) {
  auto it = held_.find(id);
  if (it == held_.end()) throw Error("release of a lock that is not held");
  for (int d : it->second.devices) holder_[d] = -1;
  held_.erase(it);
}

std::optional<std::string> DeviceLockManager::holder(int device) const {
  const int64_t id = holder_.at(device);
  if (id < 0) return std::nullopt;
  return held_.at(id).worker;
}

}  // namespace flowplan

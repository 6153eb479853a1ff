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

// Exclusive multi-device claims. A request is granted all at once or not
// at all; waiting requests are served by (topological rank, request time,
// arrival), and a waiting request reserves its devices against anything
// behind it so it cannot starve.

#ifndef FLOWPLAN_DEVICE_LOCK_H_
#define FLOWPLAN_DEVICE_LOCK_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace flowplan {

struct LockRequest {
  int64_t id = 0;
  std::vector<int> devices;
  int rank = 0;
  double request_time = 0.0;
  std::string worker;
};

class DeviceLockManager {
 public:
  explicit DeviceLockManager(int devices);

  int64_t request(std::vector<int> devices, int rank, double time, std::string worker);
  // Grants everything that can run now; ids in priority order.
  std::vector<int64_t> grant();
  void release(int64_t id);

  std::optional<std::string> holder(int device) const;
  const LockRequest& granted(int64_t id) const { return held_.at(id); }
  size_t waiting() const { return waiting_.size(); }
  size_t held() const { return held_.size(); }

 private:
  using Priority = std::tuple<int, double, int64_t>;
  std::vector<int64_t> holder_;  // -1 when free
  std::map<Priority, LockRequest> waiting_;
  std::map<int64_t, LockRequest> held_;
  int64_t next_id_ = 0;
};

}  // namespace flowplan

#endif  // FLOWPLAN_DEVICE_LOCK_H_

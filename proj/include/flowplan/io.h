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

// JSON readers and writers for workflow, profile, cluster, workload,
// schedule and trace files. Every file carries "format_version": 1.

#ifndef FLOWPLAN_IO_H_
#define FLOWPLAN_IO_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowplan/cluster.h"
#include "flowplan/graph.h"
#include "flowplan/profile.h"
#include "flowplan/schedule.h"
#include "flowplan/simulator.h"
#include "flowplan/workload.h"

namespace flowplan {

inline constexpr int kFormatVersion = 1;

struct ParseOptions {
  bool strict = false;  // unknown fields and a missing format_version fail
  std::vector<std::string>* warnings = nullptr;
};

// All readers throw ParseError with "<source>: <json pointer>: <problem>".
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

WorkflowGraph parse_workflow(const std::string& text, const std::string& source,
                             const ParseOptions& options = {});

struct ProfileData {
  std::vector<ProfilePoint> points;
  std::map<std::string, SwitchCost> switches;
};
ProfileData parse_profiles(const std::string& text, const std::string& source,
                           const ParseOptions& options = {});

ClusterSpec parse_cluster(const std::string& text, const std::string& source,
                          const ParseOptions& options = {});

Workload parse_workload(const std::string& text, const std::string& source,
                        const ParseOptions& options = {});

struct ScheduleDocument {
  std::string mode;
  int64_t total_batch = 0;
  int num_devices = 0;
  ScheduleEstimate estimate;
  SchedulePtr schedule;  // null for an infeasible result
};

std::string schedule_to_json(const ScheduleDocument& doc);
ScheduleDocument parse_schedule(const std::string& text, const std::string& source,
                                const ParseOptions& options = {});

std::string trace_to_json(const SimTrace& trace, const UtilizationReport& utilization,
                          const EstimateCheck& check);

}  // namespace flowplan

#endif  // FLOWPLAN_IO_H_

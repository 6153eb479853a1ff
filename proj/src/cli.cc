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

#include "flowplan/cli.h"

#include <cmath>
#include <functional>
#include <future>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowplan/error.h"
#include "flowplan/io.h"
#include "flowplan/scheduler.h"
#include "flowplan/simulator.h"

namespace flowplan {
namespace {

struct RunConfig {
  std::string workflow, profiles, cluster, schedule, workload, out;
  std::string mode = "auto";
  int64_t batch = 0;  // 0: keep the workflow's total_batch
  uint64_t seed = 0;
  bool strict_profiles = false;
  bool strict = false;
  int max_oracle_nodes = 6;
  int max_oracle_devices = 8;
  int granularity_cap = 8;
  double tail_fraction = 0.0;
  double tail_ratio = 10.0;
};

// Domain outcome that maps to exit status 1.
struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Inputs {
  WorkflowGraph graph;
  ClusterSpec cluster;
  ProfileTable profiles;
  FitReport fit;
  std::vector<std::string> warnings;
};

std::string fmt(double x) {
  if (!std::isfinite(x)) return "inf";
  std::ostringstream ss;
  ss << std::setprecision(6) << x;
  return ss.str();
}

class Command {
 public:
  Command(const RunConfig& cfg, std::ostream& out, std::ostream& err)
      : cfg_(cfg), out_(out), err_(err) {}

  int validate() {
    ParseOptions opts = parse_options();
    WorkflowGraph graph = read_workflow(opts);
    ValidationReport report = validate_graph(graph);
    int problems = static_cast<int>(report.violations.size());
    for (const auto& v : report.violations) out_ << "violation [" << v.code << "] " << v.message << "\n";
    if (!cfg_.profiles.empty()) {
      const ProfileData data = parse_profiles(read_file(cfg_.profiles), cfg_.profiles, opts);
      const FitResult fit = fit_profile(data.points, data.switches);
      out_ << "profiles: " << data.points.size() << " sample(s), " << fit.report.cleanups
           << " cleanup(s), " << fit.report.duplicates << " duplicate(s)\n";
      for (const auto& m : fit.report.messages) out_ << "  " << m << "\n";
      for (const auto& w : graph.workers) {
        if (!fit.table.has_worker(w.id)) {
          out_ << "violation [missing-profile] worker \"" << w.id << "\" has no profile samples\n";
          ++problems;
        }
      }
    }
    if (!cfg_.cluster.empty()) {
      const ClusterSpec c = parse_cluster(read_file(cfg_.cluster), cfg_.cluster, opts);
      out_ << "cluster: " << c.num_nodes << " node(s) x " << c.devices_per_node
           << " device(s), " << c.device_memory_bytes << " bytes per device\n";
    }
    flush_warnings(opts);
    if (problems == 0) {
      out_ << "ok: " << graph.workers.size() << " worker(s), " << graph.edges.size()
           << " edge(s), total_batch " << graph.total_batch << "\n";
      return kExitOk;
    }
    out_ << problems << " violation(s)\n";
    return kExitInfeasible;
  }

  int schedule() {
    Inputs in = load();
    const ScheduleResult r = plan(cfg_.mode, in);
    ScheduleDocument doc{cfg_.mode, in.graph.total_batch, in.cluster.total_devices(),
                         r.estimate, r.schedule};
    if (!cfg_.out.empty()) write_file(cfg_.out, schedule_to_json(doc));
    out_ << "mode: " << cfg_.mode << "\n";
    if (!r.schedule) {
      out_ << "infeasible: " << r.estimate.binding_constraint << "\n";
      return kExitInfeasible;
    }
    out_ << "schedule: " << to_string(*r.schedule) << "\n";
    out_ << "estimated iteration time: " << fmt(r.estimate.total_time_s) << " s\n";
    int64_t peak = 0;
    for (const auto& [d, b] : r.estimate.peak_memory_by_device) peak = std::max(peak, b);
    out_ << "peak device memory: " << peak << " bytes\n";
    if (!cfg_.out.empty()) out_ << "wrote " << cfg_.out << "\n";
    return kExitOk;
  }

  int simulate_cmd() {
    Inputs in = load();
    ParseOptions opts = parse_options();
    const ScheduleDocument doc = parse_schedule(read_file(cfg_.schedule), cfg_.schedule, opts);
    flush_warnings(opts);
    if (!doc.schedule) throw Infeasible(cfg_.schedule + ": schedule file holds no feasible plan");
    if (doc.total_batch != in.graph.total_batch) {
      throw ParseError(cfg_.schedule + ": total_batch " + std::to_string(doc.total_batch) +
                       " does not match the workflow's " +
                       std::to_string(in.graph.total_batch));
    }
    if (doc.num_devices != in.cluster.total_devices()) {
      throw ParseError(cfg_.schedule + ": num_devices " + std::to_string(doc.num_devices) +
                       " does not match the cluster's " +
                       std::to_string(in.cluster.total_devices()));
    }
    const Workload wl = workload(in);
    SimTrace trace;
    try {
      trace = simulate(*doc.schedule, in.graph, in.cluster, in.profiles, wl);
    } catch (const StructuralError& e) {
      throw ParseError(cfg_.schedule + ": " + e.what());
    }
    CostModel model(in.graph, in.cluster, in.profiles, options());
    const ScheduleEstimate est = to_estimate(evaluate_schedule(*doc.schedule, model));
    const EstimateCheck check = verify_estimate(*doc.schedule, est, trace);
    UtilizationReport util;
    if (!trace.events.empty()) util = compute_utilization(trace, in.cluster);
    if (!cfg_.out.empty()) write_file(cfg_.out, trace_to_json(trace, util, check));
    out_ << "makespan: " << fmt(trace.makespan_s) << " s\n";
    out_ << "estimate: " << fmt(est.total_time_s) << " s\n";
    out_ << "estimate gap: " << std::fixed << std::setprecision(6) << check.gap
         << std::defaultfloat << "\n";
    out_ << "mean device busy: " << fmt(util.mean_busy) << "\n";
    out_ << "idle tail fraction: " << fmt(util.idle_tail_fraction) << "\n";
    return report_safety(trace);
  }

  int compare() {
    Inputs in = load();
    const Workload wl = workload(in);
    struct Leg {
      std::string mode;
      ScheduleResult result;
      std::optional<SimTrace> trace;
    };
    auto run_leg = [&](const std::string& mode) {
      Leg leg;
      leg.mode = mode;
      leg.result = plan(mode, in);
      if (leg.result.schedule) {
        leg.trace = simulate(*leg.result.schedule, in.graph, in.cluster, in.profiles, wl);
      }
      return leg;
    };
    std::vector<std::future<Leg>> futures;
    for (const char* mode : {"auto", "collocated", "disaggregated"}) {
      futures.push_back(std::async(std::launch::async, run_leg, std::string(mode)));
    }
    std::vector<Leg> legs;
    for (auto& f : futures) legs.push_back(f.get());

    const Leg& col = legs[1];
    const double base = col.trace ? col.trace->makespan_s : kInfiniteTime;
    std::ostringstream table;
    table << std::left << std::setw(15) << "mode" << std::setw(14) << "estimated_s"
          << std::setw(14) << "simulated_s" << std::setw(10) << "speedup" << "schedule\n";
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    int feasible = 0;
    int unsafe = 0;
    for (const Leg& leg : legs) {
      nlohmann::ordered_json row;
      row["mode"] = leg.mode;
      row["feasible"] = leg.result.schedule != nullptr;
      if (!leg.result.schedule) {
        table << std::setw(15) << leg.mode << "infeasible: "
              << leg.result.estimate.binding_constraint << "\n";
        row["binding_constraint"] = leg.result.estimate.binding_constraint;
        rows.push_back(std::move(row));
        continue;
      }
      ++feasible;
      const double sim = leg.trace->makespan_s;
      const double speedup = std::isfinite(base) ? base / sim : kInfiniteTime;
      if (!leg.trace->violations.empty() || leg.trace->event_cap_hit ||
          !mutual_exclusion_violations(*leg.trace).empty()) {
        ++unsafe;
      }
      table << std::setw(15) << leg.mode << std::setw(14) << fmt(leg.result.estimate.total_time_s)
            << std::setw(14) << fmt(sim) << std::setw(10)
            << (std::isfinite(speedup) ? fmt(speedup) : "-") << to_string(*leg.result.schedule)
            << "\n";
      row["estimate_s"] = leg.result.estimate.total_time_s;
      row["simulated_s"] = sim;
      row["speedup_vs_collocated"] =
          std::isfinite(speedup) ? nlohmann::ordered_json(speedup) : nlohmann::ordered_json();
      row["schedule"] = to_string(*leg.result.schedule);
      rows.push_back(std::move(row));
    }
    out_ << table.str();
    if (!cfg_.out.empty()) {
      nlohmann::ordered_json j;
      j["format_version"] = kFormatVersion;
      j["seed"] = cfg_.seed;
      j["rows"] = std::move(rows);
      write_file(cfg_.out, j.dump(2) + "\n");
    }
    if (feasible == 0) {
      err_ << "no mode produced a feasible schedule\n";
      return kExitInfeasible;
    }
    const double auto_est = legs[0].result.estimate.total_time_s;
    for (size_t i = 1; i < legs.size(); ++i) {
      if (legs[i].result.schedule && auto_est > legs[i].result.estimate.total_time_s) {
        err_ << "auto estimate " << fmt(auto_est) << " exceeds " << legs[i].mode << " estimate "
             << fmt(legs[i].result.estimate.total_time_s) << "\n";
        return kExitInfeasible;
      }
    }
    if (unsafe > 0) {
      err_ << unsafe << " simulation(s) reported violations\n";
      return kExitInfeasible;
    }
    return kExitOk;
  }

  int oracle() {
    Inputs in = load();
    OracleLimits limits{cfg_.max_oracle_nodes, cfg_.max_oracle_devices};
    const int nodes = condense_cycles(in.graph).size();
    if (nodes > limits.max_nodes || in.cluster.total_devices() > limits.max_devices) {
      throw SizeError("instance has " + std::to_string(nodes) + " condensed node(s) and " +
                      std::to_string(in.cluster.total_devices()) +
                      " device(s); oracle limits are " + std::to_string(limits.max_nodes) +
                      " and " + std::to_string(limits.max_devices));
    }
    MemoStats stats;
    const ScheduleResult fast = find_schedule(in.graph, in.cluster, in.profiles, options(), &stats);
    int64_t visited = 0;
    const ScheduleResult slow =
        brute_force_schedule(in.graph, in.cluster, in.profiles, options(), limits, &visited);
    const double a = fast.estimate.total_time_s;
    const double b = slow.estimate.total_time_s;
    bool agree = fast.estimate.feasible == slow.estimate.feasible;
    if (agree && fast.estimate.feasible) agree = std::fabs(a - b) <= 1e-9 * std::fabs(b);
    out_ << "search: " << fmt(a) << " s (" << stats.subproblems << " subproblems, "
         << stats.hits << " memo hits)\n";
    out_ << "exhaustive: " << fmt(b) << " s (" << visited << " plans)\n";
    if (agree) {
      out_ << "agree\n";
      return kExitOk;
    }
    out_ << "DISAGREE\n";
    out_ << "  search:     " << (fast.schedule ? to_string(*fast.schedule) : "infeasible") << "\n";
    out_ << "  exhaustive: " << (slow.schedule ? to_string(*slow.schedule) : "infeasible") << "\n";
    return kExitInfeasible;
  }

 private:
  ParseOptions parse_options() {
    ParseOptions o;
    o.strict = cfg_.strict;
    o.warnings = &warnings_;
    return o;
  }

  void flush_warnings(const ParseOptions&) {
    for (const auto& w : warnings_) err_ << "warning: " << w << "\n";
    warnings_.clear();
  }

  SchedulerOptions options() const {
    SchedulerOptions o;
    o.strict_profiles = cfg_.strict_profiles;
    o.granularity_cap = cfg_.granularity_cap;
    return o;
  }

  WorkflowGraph read_workflow(const ParseOptions& opts) {
    WorkflowGraph g = parse_workflow(read_file(cfg_.workflow), cfg_.workflow, opts);
    if (cfg_.batch > 0) g.total_batch = cfg_.batch;
    return g;
  }

  Inputs load() {
    ParseOptions opts = parse_options();
    Inputs in;
    in.graph = read_workflow(opts);
    const ProfileData data = parse_profiles(read_file(cfg_.profiles), cfg_.profiles, opts);
    in.cluster = parse_cluster(read_file(cfg_.cluster), cfg_.cluster, opts);
    flush_warnings(opts);
    const ValidationReport report = validate_graph(in.graph);
    if (!report.ok()) {
      std::string msg = cfg_.workflow + ": invalid workflow";
      for (const auto& v : report.violations) msg += "\n  [" + v.code + "] " + v.message;
      throw Infeasible(msg);
    }
    FitResult fit = fit_profile(data.points, data.switches);
    for (const auto& w : in.graph.workers) {
      if (!fit.table.has_worker(w.id)) {
        throw ParseError(cfg_.profiles + ": no samples for worker \"" + w.id + "\"");
      }
    }
    in.profiles = std::move(fit.table);
    in.fit = std::move(fit.report);
    return in;
  }

  ScheduleResult plan(const std::string& mode, const Inputs& in) const {
    if (mode == "collocated") {
      return forced_mode_schedule(in.graph, in.cluster, in.profiles, ForcedMode::kCollocated,
                                  options());
    }
    if (mode == "disaggregated") {
      return forced_mode_schedule(in.graph, in.cluster, in.profiles,
                                  ForcedMode::kDisaggregated, options());
    }
    return find_schedule(in.graph, in.cluster, in.profiles, options());
  }

  Workload workload(const Inputs& in) {
    if (!cfg_.workload.empty()) {
      ParseOptions opts = parse_options();
      Workload wl = parse_workload(read_file(cfg_.workload), cfg_.workload, opts);
      flush_warnings(opts);
      return wl;
    }
    if (cfg_.tail_fraction > 0.0) {
      return sample_longtail_workload(in.graph, in.graph.total_batch,
                                      {1.0, cfg_.tail_ratio, cfg_.tail_fraction}, cfg_.seed);
    }
    Workload wl;
    wl.seed = cfg_.seed;
    return wl;
  }

  int report_safety(const SimTrace& trace) {
    int status = kExitOk;
    for (const auto& v : trace.violations) {
      err_ << "memory violation: " << v << "\n";
      status = kExitInfeasible;
    }
    for (const auto& v : mutual_exclusion_violations(trace)) {
      err_ << "mutual exclusion violation: " << v << "\n";
      status = kExitInfeasible;
    }
    if (trace.event_cap_hit) {
      err_ << "event cap reached after " << trace.events_processed << " events\n";
      status = kExitInfeasible;
    }
    return status;
  }

  const RunConfig& cfg_;
  std::ostream& out_;
  std::ostream& err_;
  std::vector<std::string> warnings_;
};

void add_inputs(CLI::App* cmd, RunConfig& cfg, bool need_all) {
  cmd->add_option("--workflow", cfg.workflow, "Workflow file")->required()->check(CLI::ExistingFile);
  auto* p = cmd->add_option("--profiles", cfg.profiles, "Profile file")->check(CLI::ExistingFile);
  auto* c = cmd->add_option("--cluster", cfg.cluster, "Cluster file")->check(CLI::ExistingFile);
  if (need_all) {
    p->required();
    c->required();
  }
  cmd->add_option("--batch", cfg.batch, "Override total_batch")->check(CLI::PositiveNumber);
  cmd->add_flag("--strict", cfg.strict, "Reject unknown fields and missing format_version");
}

void add_planning(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_flag("--strict-profiles", cfg.strict_profiles,
                "Treat device counts without measurements as infeasible");
  cmd->add_option("--granularity-cap", cfg.granularity_cap,
                  "Largest number of chunk sizes tried per pipeline")
      ->check(CLI::PositiveNumber);
}

void add_workload(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--seed", cfg.seed, "Seed for generated workloads");
  cmd->add_option("--workload", cfg.workload, "Workload file")->check(CLI::ExistingFile);
  cmd->add_option("--tail-fraction", cfg.tail_fraction,
                  "Share of generation items that take the tail latency")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--tail-ratio", cfg.tail_ratio, "Tail latency over body latency")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"flowplan: schedule and simulate multi-worker training workflows"};
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "Check workflow, profile and cluster files");
  add_inputs(validate, cfg, false);

  auto* schedule = app.add_subcommand("schedule", "Plan a workflow on a cluster");
  add_inputs(schedule, cfg, true);
  add_planning(schedule, cfg);
  schedule->add_option("--mode", cfg.mode, "auto, collocated or disaggregated")
      ->check(CLI::IsMember({"auto", "collocated", "disaggregated"}));
  schedule->add_option("--out", cfg.out, "Schedule file to write");

  auto* simulate = app.add_subcommand("simulate", "Execute a schedule file in simulation");
  add_inputs(simulate, cfg, true);
  add_planning(simulate, cfg);
  add_workload(simulate, cfg);
  simulate->add_option("--schedule", cfg.schedule, "Schedule file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", cfg.out, "Trace file to write");

  auto* compare = app.add_subcommand("compare", "Plan and simulate every mode");
  add_inputs(compare, cfg, true);
  add_planning(compare, cfg);
  add_workload(compare, cfg);
  compare->add_option("--out", cfg.out, "Comparison file to write");

  auto* oracle = app.add_subcommand("oracle", "Check the search against exhaustive enumeration");
  add_inputs(oracle, cfg, true);
  add_planning(oracle, cfg);
  oracle->add_option("--max-oracle-nodes", cfg.max_oracle_nodes, "Condensed node limit")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--max-oracle-devices", cfg.max_oracle_devices, "Device limit")
      ->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  Command cmd(cfg, out, err);
  try {
    if (*validate) return cmd.validate();
    if (*schedule) return cmd.schedule();
    if (*simulate) return cmd.simulate_cmd();
    if (*compare) return cmd.compare();
    if (*oracle) return cmd.oracle();
  } catch (const Infeasible& e) {
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace flowplan

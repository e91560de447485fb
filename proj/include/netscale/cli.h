/* Copyright 2026 The Netscale Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "netscale/autoscaler.h"
#include "netscale/flow_set.h"
#include "netscale/planner.h"
#include "netscale/simulator.h"
#include "netscale/topology.h"
#include "netscale/trace.h"

namespace netscale {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitFailure = 2,
};

// Everything a simulate or compare run needs. Refs are preset names or
// file paths; the trace ref is "burst", "poisson" or a JSONL file.
struct ExperimentConfig {
  std::string topology = "cluster-B";
  int logical_host_gpus = 0;  // 0 keeps physical hosts
  std::string models = "llama2-7b";
  std::string trace = "burst";
  TraceParams trace_params;
  std::vector<Strategy> strategies = {Strategy::kBlitzLive};
  std::optional<double> ttft_slo_ms;
  std::optional<double> tbt_slo_ms;
  uint64_t seed = 1;
  std::string out = "out";
  SimConfig sim;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing fields keep their defaults.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct ResolvedExperiment {
  NetworkTopology topology;
  std::vector<ModelSpec> models;
  std::vector<Request> trace;
};

ResolvedExperiment resolve_experiment(const ExperimentConfig& config);

// A scale-request document resolved against a topology.
struct ScaleRequestDoc {
  ScaleRequest request;
  FlowSet flows;
};

// {"model": name | {...}, "sources": [...], "targets": [...], "flows": [...]}.
// Sources are {"kind": "host_memory"|"ssd", "host": h} or
// {"kind": "instance", "id": i, "gpus": [...]}; targets are {"id", "gpus"}.
ScaleRequestDoc parse_scale_request(const nlohmann::json& doc, const NetworkTopology& topo,
                                    const std::vector<ModelSpec>& registry);

// Greedy plan vs exhaustive forest on the grouped and pruned request.
struct PlanOracleReport {
  double greedy_s = 0.0;
  double optimal_s = 0.0;
  bool uniform = false;
  bool pass = false;

  nlohmann::json to_json() const;
};

PlanOracleReport check_plan_oracle(const ScaleRequest& request, const NetworkTopology& topo,
                                   const FlowSet& flows, double efficiency);

// Parses `args` (without the program name) and runs one subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netscale

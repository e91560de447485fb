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
#include <string>
#include <vector>

#include "json.hpp"
#include "netscale/autoscaler.h"
#include "netscale/metrics.h"
#include "netscale/model.h"
#include "netscale/pipeline.h"
#include "netscale/topology.h"
#include "netscale/trace.h"

namespace netscale {

struct SimConfig {
  Strategy strategy = Strategy::kBlitzLive;
  uint64_t seed = 0;

  double control_interval_ms = 100.0;
  // Trailing window for load averages.
  double window_s = 1.0;
  double scale_down_timeout_s = 2.0;
  // Scale bounds as fractions of the profiled per-instance capacity.
  double upper_fraction = 0.8;
  double lower_fraction = 0.3;

  int batch_token_budget = 2000;
  double scale_command_ms = 5.0;
  // Rate reserved for each prefill -> decode KVCache flow.
  double kv_flow_gbps = 25.0;
  int decode_max_running = 128;
  int initial_prefill = 1;
  int initial_decode = 1;
  int max_planned_batches = 16;

  int cache_slots_per_host = 4;
  double keep_alive_s = 300.0;
  PipelineOptions pipeline;
  // Replaces every scale-up load with a fixed stop-the-world delay.
  std::optional<double> load_time_override_s;
  // Absolute prefill bounds in tokens/s; replaces the profiled fractions.
  std::optional<ScalePolicy> prefill_policy;
  // Requests unfinished this long after the last arrival are rejected.
  double drain_limit_s = 600.0;

  void validate() const;
  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& j);
};

// Offline capacity profile of one instance under the simulator's cost model.
struct CapacityProfile {
  double prefill_tokens_per_s = 0.0;
  int decode_sequences = 0;
  double decode_tokens_per_s = 0.0;
};

// Runs a saturated single-instance replay of the trace's prompt mix.
CapacityProfile profile_capacity(const ModelSpec& model, const std::vector<Request>& trace,
                                 const SimConfig& config);

struct SimResult {
  Strategy strategy = Strategy::kBlitzLive;
  std::vector<RequestRecord> records;
  MetricSeries metrics;
  int64_t arrived = 0;
  int64_t completed = 0;
  int64_t rejected = 0;
  int64_t cache_hits = 0;
  int64_t cache_misses = 0;
  int max_cache_copies = 0;
  // Peak host copies of any single model.
  int max_model_host_copies = 0;
  // Fewest parameter sources any model had at a control tick.
  int min_model_sources = 0;
  int64_t causality_checks = 0;
  double gpu_utilization = 0.0;
  double gpu_seconds = 0.0;

  double ttft_p50() const { return percentile(metrics.ttft_ms, 50); }
  double ttft_p99() const { return percentile(metrics.ttft_ms, 99); }
  double tbt_p99() const { return percentile(metrics.tbt_ms, 99); }

  nlohmann::json summary() const;
  // time_ms,throughput_tokens,gpus_active,cache_copies
  std::string timeline_csv() const;
};

// Deterministic: identical inputs give identical results. Throws
// Error(kInvalidArgument) on malformed traces and Error(kInvariant) when an
// accounting invariant breaks.
SimResult run_simulation(const NetworkTopology& topo, const std::vector<ModelSpec>& models,
                         const std::vector<Request>& trace, const SimConfig& config);

}  // namespace netscale

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

#include <limits>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace netscale {

// Which clock bounds a batch's prefix by the layers loaded so far. Source
// work is the wall time at which batch i starts its suffix; target work is
// the target's own busy time.
enum class C3Clock { kSourceWork, kTargetWork };

std::string_view to_string(C3Clock clock);
C3Clock parse_c3_clock(std::string_view text);

struct PipelineOptions {
  // Layers resident when execution starts.
  int first_layer_offset = 1;
  C3Clock clock = C3Clock::kSourceWork;
  // Solver deadline; on expiry the best-effort split is returned.
  double deadline_ms = 50.0;
};

struct PipelineSplit {
  int target_layers = 0;  // T_i, prefix on the new instance
  int source_layers = 0;  // S_i, suffix on the overloaded instance

  bool operator==(const PipelineSplit&) const = default;
};

struct PipelineConfig {
  int num_layers = 0;
  double time_l = 0.0;
  PipelineOptions options;
  std::vector<double> weights;
  std::vector<PipelineSplit> splits;
  double objective = 0.0;
  // False when the solver hit its deadline.
  bool optimal = true;

  int batches() const { return static_cast<int>(splits.size()); }
  nlohmann::json to_json() const;
};

// min(L, offset + floor(t / time_l)); L when time_l is 0.
int layers_loaded_at(double t, int layers, double time_l, int offset);

// sum_i w_i * S_i * (N - i + 1) / N, i.e. the weighted mean of suffix prefix sums.
double pipeline_objective(const std::vector<PipelineSplit>& splits,
                          const std::vector<double>& weights = {});

// Mean source finish time when the source waits for each batch's prefix.
// Equals pipeline_objective for configurations satisfying the dependency rule.
double realized_objective(const std::vector<PipelineSplit>& splits,
                          const std::vector<double>& weights = {});

// Checks T+S=L, the dependency rule and the load limit. Returns the first
// violated index (1-based batch), or 0 when feasible.
int first_violation(const std::vector<PipelineSplit>& splits, int layers,
                    double time_l, const PipelineOptions& options = {});

PipelineConfig configure_pipeline(int batches, int layers, double time_l,
                                  std::vector<double> weights = {},
                                  const PipelineOptions& options = {});

PipelineConfig best_effort_pipeline(int batches, int layers, double time_l,
                                    const PipelineOptions& options = {});

// Exhaustive enumeration of T in [0..L]^N; small inputs only.
PipelineConfig brute_force_pipeline(int batches, int layers, double time_l,
                                    std::vector<double> weights = {},
                                    const PipelineOptions& options = {});

// Token-proportional weights normalized by the median batch size.
std::vector<double> token_weights(const std::vector<double>& batch_tokens);

// Layer k (1-based) becomes available at (k - offset) * time_l; the first
// `offset` layers at 0. Infinite time_l means no further loads.
std::vector<double> uniform_layer_load_times(int layers, double time_l, int offset);

struct LayerExec {
  int batch = 0;  // 1-based
  int layer = 0;  // 1-based
  bool on_target = false;
  double start = 0.0;
  double end = 0.0;
};

struct ZigzagTimeline {
  std::vector<LayerExec> execs;
  std::vector<double> prefix_done;  // per batch, target side
  std::vector<double> finish;       // per batch, source side
  // Splits actually executed; prefixes shrink when layers never arrive.
  std::vector<PipelineSplit> realized;
  // Batches that waited in the pending queue.
  std::vector<int> delayed;
  double average_latency = 0.0;

  nlohmann::json to_json() const;
};

// Event-driven rehearsal in layer-execution units. The target runs one
// layer at a time in FIFO priority; a batch whose next layer is missing
// waits in the pending queue until a load event. The source runs suffixes
// FCFS once the prefix is done.
ZigzagTimeline zigzag_schedule(const std::vector<PipelineSplit>& splits,
                               const std::vector<double>& layer_load_times);

// Completed batches per unit time with k layers resident and a backlog of
// `batches` (k, L-k) batches, measured over the second half of completions.
double steady_throughput(int layers, int loaded, int batches = 400);

}  // namespace netscale

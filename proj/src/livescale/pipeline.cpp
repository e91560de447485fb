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

#include "netscale/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "netscale/common.h"

namespace netscale {

using nlohmann::json;

namespace {

constexpr double kEps = 1e-9;

std::vector<double> resolve_weights(std::vector<double> weights, int batches) {
  if (weights.empty()) return std::vector<double>(batches, 1.0);
  if (static_cast<int>(weights.size()) != batches) {
    fail(ErrorCode::kInvalidArgument, "expected " + std::to_string(batches) + " weights, got " +
                                          std::to_string(weights.size()));
  }
  for (double w : weights) {
    if (!(w > 0.0)) fail(ErrorCode::kInvalidArgument, "weights must be positive");
  }
  return weights;
}

void check_inputs(int batches, int layers, double time_l, const PipelineOptions& options) {
  if (batches < 1) fail(ErrorCode::kInvalidArgument, "need at least one batch");
  if (layers < 1) fail(ErrorCode::kInvalidArgument, "need at least one layer");
  if (!(time_l >= 0.0)) fail(ErrorCode::kInvalidArgument, "time_l must be >= 0");
  if (options.first_layer_offset < 0) {
    fail(ErrorCode::kInvalidArgument, "first layer offset must be >= 0");
  }
}

// Load limit for batch i given the prefix sum P of earlier target layers.
bool load_ok(int target, int i, long prefix, int layers, double time_l,
             const PipelineOptions& options) {
  if (time_l <= 0.0) return true;
  double clock = options.clock == C3Clock::kSourceWork
                     ? static_cast<double>(static_cast<long>(i - 1) * layers - prefix)
                     : static_cast<double>(prefix);
  if (std::isinf(time_l)) return target <= options.first_layer_offset;
  return time_l * (target - options.first_layer_offset) <= clock + kEps;
}

}  // namespace

std::string_view to_string(C3Clock clock) {
  return clock == C3Clock::kSourceWork ? "source" : "target";
}

C3Clock parse_c3_clock(std::string_view text) {
  if (text == "source") return C3Clock::kSourceWork;
  if (text == "target") return C3Clock::kTargetWork;
  fail(ErrorCode::kInvalidArgument, "unknown C3 clock '" + std::string(text) + "'");
}

json PipelineConfig::to_json() const {
  json splits_json = json::array();
  for (const auto& s : splits) splits_json.push_back({s.target_layers, s.source_layers});
  return {{"layers", num_layers},
          {"batches", batches()},
          {"time_l", time_l},
          {"offset", options.first_layer_offset},
          {"clock", std::string(to_string(options.clock))},
          {"weights", weights},
          {"splits", splits_json},
          {"objective", objective},
          {"optimal", optimal}};
}

int layers_loaded_at(double t, int layers, double time_l, int offset) {
  if (time_l <= 0.0) return layers;
  if (std::isinf(time_l)) return std::min(layers, offset);
  double loads = std::floor(t / time_l + kEps);
  return static_cast<int>(std::min<double>(layers, offset + loads));
}

double pipeline_objective(const std::vector<PipelineSplit>& splits,
                          const std::vector<double>& weights) {
  const int n = static_cast<int>(splits.size());
  if (n == 0) return 0.0;
  auto w = resolve_weights(weights, n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    total += w[i] * splits[i].source_layers * (n - i);
  }
  return total / n;
}

double realized_objective(const std::vector<PipelineSplit>& splits,
                          const std::vector<double>& weights) {
  const int n = static_cast<int>(splits.size());
  if (n == 0) return 0.0;
  auto w = resolve_weights(weights, n);
  double end = 0.0;
  double prefix = 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    prefix += w[i] * splits[i].target_layers;
    double start = i == 0 ? 0.0 : std::max(end, prefix);
    end = start + w[i] * splits[i].source_layers;
    total += end;
  }
  return total / n;
}

int first_violation(const std::vector<PipelineSplit>& splits, int layers,
                    double time_l, const PipelineOptions& options) {
  long prefix_t = 0;
  long prefix_s = 0;
  for (size_t k = 0; k < splits.size(); ++k) {
    int i = static_cast<int>(k) + 1;
    const auto& s = splits[k];
    if (s.target_layers < 0 || s.source_layers < 0 ||
        s.target_layers + s.source_layers != layers) {
      return i;
    }
    if (i > 1 && prefix_t + s.target_layers > prefix_s) return i;
    if (!load_ok(s.target_layers, i, prefix_t, layers, time_l, options)) return i;
    prefix_t += s.target_layers;
    prefix_s += s.source_layers;
  }
  return 0;
}

PipelineConfig best_effort_pipeline(int batches, int layers, double time_l,
                                    const PipelineOptions& options) {
  check_inputs(batches, layers, time_l, options);
  PipelineConfig cfg;
  cfg.num_layers = layers;
  cfg.time_l = time_l;
  cfg.options = options;
  cfg.weights.assign(batches, 1.0);
  double start = 0.0;
  for (int i = 0; i < batches; ++i) {
    int loaded = layers_loaded_at(start, layers, time_l, options.first_layer_offset);
    int t = std::min(loaded, layers / 2);
    cfg.splits.push_back({t, layers - t});
    start += t;
  }
  cfg.objective = realized_objective(cfg.splits);
  return cfg;
}

PipelineConfig configure_pipeline(int batches, int layers, double time_l,
                                  std::vector<double> weights,
                                  const PipelineOptions& options) {
  check_inputs(batches, layers, time_l, options);
  auto w = resolve_weights(std::move(weights), batches);
  auto started = std::chrono::steady_clock::now();

  const long max_prefix = static_cast<long>(batches) * layers;
  const double inf = std::numeric_limits<double>::infinity();
  // cost[i][P]: best objective numerator over the first i batches with
  // sum of T equal to P; choice[i][P] is T_i on that path.
  std::vector<std::vector<double>> cost(batches + 1, std::vector<double>(max_prefix + 1, inf));
  std::vector<std::vector<int>> choice(batches + 1, std::vector<int>(max_prefix + 1, -1));
  cost[0][0] = 0.0;
  for (int i = 1; i <= batches; ++i) {
    double elapsed = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - started).count();
    if (elapsed > options.deadline_ms) {
      PipelineConfig fallback = best_effort_pipeline(batches, layers, time_l, options);
      fallback.optimal = false;
      return fallback;
    }
    for (long p = 0; p <= max_prefix; ++p) {
      if (cost[i - 1][p] == inf) continue;
      for (int t = layers; t >= 0; --t) {
        if (i > 1 && p + t > static_cast<long>(i - 1) * layers - p) continue;
        if (!load_ok(t, i, p, layers, time_l, options)) continue;
        double c = cost[i - 1][p] + w[i - 1] * (layers - t) * (batches - i + 1);
        if (c < cost[i][p + t] - kEps) {
          cost[i][p + t] = c;
          choice[i][p + t] = t;
        }
      }
    }
  }
  long best_p = -1;
  for (long p = 0; p <= max_prefix; ++p) {
    if (cost[batches][p] == inf) continue;
    if (best_p < 0 || cost[batches][p] < cost[batches][best_p] - kEps) best_p = p;
  }
  if (best_p < 0) fail(ErrorCode::kInvariant, "pipeline has no feasible split");

  PipelineConfig cfg;
  cfg.num_layers = layers;
  cfg.time_l = time_l;
  cfg.options = options;
  cfg.weights = w;
  cfg.splits.resize(batches);
  long p = best_p;
  for (int i = batches; i >= 1; --i) {
    int t = choice[i][p];
    cfg.splits[i - 1] = {t, layers - t};
    p -= t;
  }
  cfg.objective = pipeline_objective(cfg.splits, w);
  if (int bad = first_violation(cfg.splits, layers, time_l, options)) {
    fail(ErrorCode::kInvariant, "solver produced infeasible batch " + std::to_string(bad));
  }
  return cfg;
}

PipelineConfig brute_force_pipeline(int batches, int layers, double time_l,
                                    std::vector<double> weights,
                                    const PipelineOptions& options) {
  check_inputs(batches, layers, time_l, options);
  auto w = resolve_weights(std::move(weights), batches);
  PipelineConfig best;
  best.num_layers = layers;
  best.time_l = time_l;
  best.options = options;
  best.weights = w;
  std::vector<PipelineSplit> cur(batches, {0, layers});
  bool found = false;
  while (true) {
    if (first_violation(cur, layers, time_l, options) == 0) {
      double obj = pipeline_objective(cur, w);
      if (!found || obj < best.objective - kEps) {
        best.splits = cur;
        best.objective = obj;
        found = true;
      }
    }
    int i = 0;
    while (i < batches) {
      if (++cur[i].target_layers <= layers) {
        cur[i].source_layers = layers - cur[i].target_layers;
        break;
      }
      cur[i] = {0, layers};
      ++i;
    }
    if (i == batches) break;
  }
  return best;
}

std::vector<double> token_weights(const std::vector<double>& batch_tokens) {
  if (batch_tokens.empty()) return {};
  std::vector<double> sorted = batch_tokens;
  std::sort(sorted.begin(), sorted.end());
  size_t mid = sorted.size() / 2;
  double median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  if (!(median > 0.0)) fail(ErrorCode::kInvalidArgument, "batch tokens must be positive");
  std::vector<double> w;
  for (double t : batch_tokens) w.push_back(t / median);
  return w;
}

std::vector<double> uniform_layer_load_times(int layers, double time_l, int offset) {
  std::vector<double> times(layers);
  for (int k = 1; k <= layers; ++k) {
    if (k <= offset || time_l <= 0.0) {
      times[k - 1] = 0.0;
    } else {
      times[k - 1] = std::isinf(time_l) ? time_l : (k - offset) * time_l;
    }
  }
  return times;
}

json ZigzagTimeline::to_json() const {
  json execs_json = json::array();
  for (const auto& e : execs) {
    execs_json.push_back({{"batch", e.batch},
                          {"layer", e.layer},
                          {"instance", e.on_target ? "target" : "source"},
                          {"start", e.start},
                          {"end", e.end}});
  }
  json splits_json = json::array();
  for (const auto& s : realized) splits_json.push_back({s.target_layers, s.source_layers});
  return {{"execs", execs_json},
          {"prefix_done", prefix_done},
          {"finish", finish},
          {"realized_splits", splits_json},
          {"delayed", delayed},
          {"average_latency", average_latency}};
}

ZigzagTimeline zigzag_schedule(const std::vector<PipelineSplit>& splits,
                               const std::vector<double>& layer_load_times) {
  const int n = static_cast<int>(splits.size());
  const int layers = static_cast<int>(layer_load_times.size());
  ZigzagTimeline tl;
  tl.realized = splits;
  tl.prefix_done.assign(n, 0.0);
  tl.finish.assign(n, 0.0);
  if (n == 0) return tl;
  for (const auto& s : splits) {
    if (s.target_layers + s.source_layers != layers || s.target_layers < 0 ||
        s.source_layers < 0) {
      fail(ErrorCode::kInvalidArgument, "split does not cover the model's layers");
    }
  }
  std::vector<int> done(n, 0);
  std::vector<bool> was_delayed(n, false);
  double now = 0.0;
  while (true) {
    int pick = -1;
    bool remaining = false;
    for (int i = 0; i < n; ++i) {
      if (done[i] >= tl.realized[i].target_layers) continue;
      remaining = true;
      if (layer_load_times[done[i]] <= now + kEps) {
        pick = i;
        break;
      }
      was_delayed[i] = true;
    }
    if (!remaining) break;
    if (pick >= 0) {
      tl.execs.push_back({pick + 1, done[pick] + 1, true, now, now + 1.0});
      now += 1.0;
      if (++done[pick] == tl.realized[pick].target_layers) tl.prefix_done[pick] = now;
      continue;
    }
    double next = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (done[i] < tl.realized[i].target_layers) next = std::min(next, layer_load_times[done[i]]);
    }
    if (std::isinf(next)) {
      // Nothing more will load: remaining prefixes shrink to what ran.
      for (int i = 0; i < n; ++i) {
        if (done[i] < tl.realized[i].target_layers) {
          tl.realized[i] = {done[i], layers - done[i]};
          if (done[i] == 0) continue;
          for (const auto& e : tl.execs) {
            if (e.batch == i + 1 && e.on_target) tl.prefix_done[i] = e.end;
          }
        }
      }
      break;
    }
    now = next;
  }
  double source_free = 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double t = std::max(source_free, tl.prefix_done[i]);
    for (int k = tl.realized[i].target_layers + 1; k <= layers; ++k) {
      tl.execs.push_back({i + 1, k, false, t, t + 1.0});
      t += 1.0;
    }
    tl.finish[i] = t;
    source_free = t;
    total += t;
    if (was_delayed[i]) tl.delayed.push_back(i + 1);
  }
  tl.average_latency = total / n;
  return tl;
}

double steady_throughput(int layers, int loaded, int batches) {
  if (loaded < 0 || loaded > layers) fail(ErrorCode::kInvalidArgument, "loaded layers out of range");
  if (batches < 4) fail(ErrorCode::kInvalidArgument, "need at least 4 batches");
  std::vector<PipelineSplit> splits(batches, {loaded, layers - loaded});
  auto tl = zigzag_schedule(splits, uniform_layer_load_times(
                                        layers, std::numeric_limits<double>::infinity(), loaded));
  int half = batches / 2;
  double span = tl.finish[batches - 1] - tl.finish[half - 1];
  return (batches - half) / span;
}

}  // namespace netscale

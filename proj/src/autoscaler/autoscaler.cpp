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

#include "netscale/autoscaler.h"

#include <cmath>

#include "netscale/common.h"

namespace netscale {

using nlohmann::json;

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kBlitzLive:
      return "blitz-live";
    case Strategy::kBlitzStop:
      return "blitz-stop";
    case Strategy::kSllm:
      return "sllm";
    case Strategy::kAllCache:
      return "allcache";
    case Strategy::kStatic:
      return "static";
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  for (Strategy s : all_strategies()) {
    if (to_string(s) == text) return s;
  }
  fail(ErrorCode::kInvalidArgument, "unknown strategy '" + std::string(text) + "'");
}

std::vector<Strategy> all_strategies() {
  return {Strategy::kBlitzLive, Strategy::kBlitzStop, Strategy::kSllm, Strategy::kAllCache,
          Strategy::kStatic};
}

void ScalePolicy::validate() const {
  if (!(upper_bound > 0.0)) fail(ErrorCode::kInvalidArgument, "upper_bound must be > 0");
  if (!(lower_bound >= 0.0) || !(lower_bound < upper_bound)) {
    fail(ErrorCode::kInvalidArgument, "need 0 <= lower_bound < upper_bound");
  }
  if (!(scale_down_timeout_s > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "scale_down_timeout_s must be > 0");
  }
}

json ScalePolicy::to_json() const {
  return {{"upper_bound", upper_bound},
          {"lower_bound", lower_bound},
          {"scale_down_timeout_s", scale_down_timeout_s},
          {"strategy", std::string(to_string(strategy))}};
}

ScalePolicy ScalePolicy::from_json(const json& j) {
  ScalePolicy p;
  try {
    p.upper_bound = j.at("upper_bound").get<double>();
    p.lower_bound = j.at("lower_bound").get<double>();
    p.scale_down_timeout_s = j.value("scale_down_timeout_s", 2.0);
    p.strategy = parse_strategy(j.value("strategy", std::string("blitz-live")));
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("bad policy document: ") + e.what());
  }
  p.validate();
  return p;
}

void LoadMetrics::validate() const {
  if (!(window_s > 0.0)) fail(ErrorCode::kInvalidArgument, "window must be > 0");
  if (tokens_per_second < 0.0 || kvcache_usage < 0.0) {
    fail(ErrorCode::kInvalidArgument, "load metrics must be non-negative");
  }
}

int should_scale_up(const LoadMetrics& metrics, const ScalePolicy& policy,
                    int current_instances) {
  metrics.validate();
  policy.validate();
  double capacity = policy.upper_bound * std::max(0, current_instances);
  if (metrics.tokens_per_second <= capacity) return 0;
  return static_cast<int>(
      std::ceil((metrics.tokens_per_second - capacity) / policy.upper_bound - 1e-9));
}

int should_scale_down(const std::vector<LoadSample>& history, const ScalePolicy& policy,
                      int current_instances, int min_instances, bool has_queued) {
  policy.validate();
  if (history.empty() || current_instances <= 0) return 0;
  double threshold = policy.lower_bound * current_instances;
  double latest = history.back().time_s;
  double streak_start = latest;
  bool covered = false;
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->tokens_per_second >= threshold) break;
    streak_start = it->time_s;
    if (latest - streak_start >= policy.scale_down_timeout_s - 1e-9) {
      covered = true;
      break;
    }
  }
  if (!covered) return 0;
  double load = history.back().tokens_per_second;
  int needed = static_cast<int>(std::ceil(load / policy.upper_bound - 1e-9));
  needed = std::max(needed, min_instances);
  if (has_queued) needed = std::max(needed, 1);
  return std::max(0, current_instances - needed);
}

double baseline_load_time(Strategy strategy, const ModelSpec& model,
                          const NetworkTopology& topo, int host, bool cache_hit,
                          double efficiency) {
  const HostSpec& h = topo.host(host);
  switch (strategy) {
    case Strategy::kAllCache:
      return transfer_seconds(model.lane_bytes(), h.host_gpu_gbps, efficiency);
    case Strategy::kSllm:
      return transfer_seconds(model.lane_bytes(),
                              cache_hit ? h.host_gpu_gbps : h.ssd_gpu_gbps, efficiency);
    default:
      break;
  }
  fail(ErrorCode::kInvalidArgument,
       "no baseline load path for strategy " + std::string(to_string(strategy)));
}

}  // namespace netscale

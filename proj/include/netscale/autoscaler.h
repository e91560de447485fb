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

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "netscale/model.h"
#include "netscale/topology.h"

namespace netscale {

enum class Strategy { kBlitzLive, kBlitzStop, kSllm, kAllCache, kStatic };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);
std::vector<Strategy> all_strategies();

struct ScalePolicy {
  // Tokens per second one instance should carry before more are added.
  double upper_bound = 0.0;
  double lower_bound = 0.0;
  double scale_down_timeout_s = 2.0;
  Strategy strategy = Strategy::kBlitzLive;

  void validate() const;
  nlohmann::json to_json() const;
  static ScalePolicy from_json(const nlohmann::json& j);
};

struct LoadMetrics {
  double window_s = 1.0;
  double tokens_per_second = 0.0;
  double kvcache_usage = 0.0;

  void validate() const;
};

struct LoadSample {
  double time_s = 0.0;
  double tokens_per_second = 0.0;
};

// Instances to add so the group's capacity covers the window average.
int should_scale_up(const LoadMetrics& metrics, const ScalePolicy& policy,
                    int current_instances);

// Instances to retire. Nonzero only when every sample of the trailing
// `scale_down_timeout_s` (ending at the latest sample) is below the lower
// bound. Keeps `min_instances`, and one instance while requests are queued.
int should_scale_down(const std::vector<LoadSample>& history, const ScalePolicy& policy,
                      int current_instances, int min_instances = 1, bool has_queued = false);

// Seconds for one stop-the-world instance load from the host cache or the
// local SSD. Only the sllm and allcache strategies load this way.
double baseline_load_time(Strategy strategy, const ModelSpec& model,
                          const NetworkTopology& topo, int host, bool cache_hit,
                          double efficiency);

}  // namespace netscale

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
#include <string>
#include <vector>

#include "json.hpp"
#include "netscale/common.h"

namespace netscale {

// Per-request outcome. `token_times` holds every emitted token, the first
// one included.
struct RequestRecord {
  int64_t id = 0;
  std::string model;
  SimTime arrival_us = 0;
  int prompt_tokens = 0;
  int output_tokens = 0;
  std::vector<SimTime> token_times;
  bool rejected = false;

  bool completed() const {
    return !rejected && static_cast<int>(token_times.size()) >= output_tokens;
  }
};

struct Slo {
  double ttft_ms = 0.0;
  double tbt_ms = 0.0;
};

// Throws Error(kInvalidArgument) when the request has no first token.
double compute_ttft(const RequestRecord& r);
// Gaps between successive tokens, in ms.
std::vector<double> compute_tbt(const RequestRecord& r);
bool meets_slo(const RequestRecord& r, const Slo& slo);
// Fraction of records meeting `slo`; rejected requests count as misses and
// an empty set is 1.
double slo_attainment(const std::vector<RequestRecord>& records, const Slo& slo);

// Nearest-rank percentile, p in [0, 100]. 0 for empty input.
double percentile(std::vector<double> values, double p);

struct TimelineRow {
  double time_ms = 0.0;
  double throughput_tokens = 0.0;
  int gpus_active = 0;
  int cache_copies = 0;
};

struct ScaleEvent {
  double time_ms = 0.0;
  std::string kind;  // scale-up, scale-down, mutate, live-pair, reload
  std::string model;
  std::string role;
  int instance = -1;
  std::vector<int> gpus;
  double load_ms = 0.0;
  std::string source;

  nlohmann::json to_json() const;
};

struct MetricSeries {
  std::vector<double> ttft_ms;
  std::vector<double> tbt_ms;
  double slo_attainment = 1.0;
  std::vector<TimelineRow> timeline;
  std::vector<ScaleEvent> scale_events;
};

}  // namespace netscale

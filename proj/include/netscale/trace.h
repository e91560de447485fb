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
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "netscale/common.h"

namespace netscale {

struct Request {
  int64_t id = 0;
  SimTime arrival_us = 0;
  int prompt_tokens = 1;
  int output_tokens = 1;
  // Empty means the first registered model.
  std::string model;

  bool operator==(const Request&) const = default;
};

enum class TraceKind { kPoisson, kBurst, kReplay };

std::string_view to_string(TraceKind kind);
TraceKind parse_trace_kind(std::string_view text);

struct TraceParams {
  double rate_per_s = 10.0;
  double duration_s = 60.0;
  int prompt_min = 128;
  int prompt_max = 1024;
  int output_min = 16;
  int output_max = 256;
  // Burst shape: the rate ramps from base to base * multiplier over
  // `burst_ramp_s`, holds for `burst_hold_s`, then returns to base.
  double burst_multiplier = 5.0;
  double burst_start_s = 20.0;
  double burst_ramp_s = 2.0;
  double burst_hold_s = 10.0;
  std::string model;
  std::string path;  // replay file

  void validate() const;
};

// Instantaneous arrival rate of the burst shape at time `t_s`.
double burst_rate_at(const TraceParams& params, double t_s);

// Deterministic for a given seed. Replay reads `params.path`.
std::vector<Request> generate_trace(TraceKind kind, const TraceParams& params, uint64_t seed);

// Line-delimited records {"arrival_ms", "prompt_tokens", "output_tokens",
// optional "model"}. Throws Error(kInvalidArgument) on malformed lines or
// out-of-order arrivals.
std::vector<Request> read_trace(std::istream& in, const std::string& default_model = "");
std::vector<Request> load_trace_file(const std::string& path,
                                     const std::string& default_model = "");
void write_trace(std::ostream& out, const std::vector<Request>& trace);

}  // namespace netscale

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

#include "netscale/trace.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

namespace netscale {

using nlohmann::json;

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::kPoisson:
      return "poisson";
    case TraceKind::kBurst:
      return "burst";
    case TraceKind::kReplay:
      return "replay";
  }
  return "?";
}

TraceKind parse_trace_kind(std::string_view text) {
  if (text == "poisson") return TraceKind::kPoisson;
  if (text == "burst") return TraceKind::kBurst;
  if (text == "replay" || text == "replay-file") return TraceKind::kReplay;
  fail(ErrorCode::kInvalidArgument, "unknown trace kind '" + std::string(text) + "'");
}

void TraceParams::validate() const {
  if (!(rate_per_s > 0.0)) fail(ErrorCode::kInvalidArgument, "rate must be > 0");
  if (!(duration_s >= 0.0)) fail(ErrorCode::kInvalidArgument, "duration must be >= 0");
  if (prompt_min < 1 || prompt_max < prompt_min) {
    fail(ErrorCode::kInvalidArgument, "need 1 <= prompt_min <= prompt_max");
  }
  if (output_min < 1 || output_max < output_min) {
    fail(ErrorCode::kInvalidArgument, "need 1 <= output_min <= output_max");
  }
  if (!(burst_multiplier >= 1.0)) fail(ErrorCode::kInvalidArgument, "burst multiplier must be >= 1");
  if (burst_ramp_s < 0.0 || burst_hold_s < 0.0) {
    fail(ErrorCode::kInvalidArgument, "burst durations must be >= 0");
  }
}

double burst_rate_at(const TraceParams& p, double t) {
  double peak = p.rate_per_s * p.burst_multiplier;
  double rel = t - p.burst_start_s;
  if (rel < 0.0) return p.rate_per_s;
  if (rel < p.burst_ramp_s) return p.rate_per_s + (peak - p.rate_per_s) * rel / p.burst_ramp_s;
  if (rel < p.burst_ramp_s + p.burst_hold_s) return peak;
  return p.rate_per_s;
}

std::vector<Request> generate_trace(TraceKind kind, const TraceParams& params, uint64_t seed) {
  if (kind == TraceKind::kReplay) {
    if (params.path.empty()) fail(ErrorCode::kInvalidArgument, "replay trace needs a path");
    return load_trace_file(params.path, params.model);
  }
  params.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> prompt(params.prompt_min, params.prompt_max);
  std::uniform_int_distribution<int> output(params.output_min, params.output_max);
  double max_rate = kind == TraceKind::kBurst ? params.rate_per_s * params.burst_multiplier
                                              : params.rate_per_s;
  std::exponential_distribution<double> gap(max_rate);

  std::vector<Request> trace;
  double t = 0.0;
  while (true) {
    t += gap(rng);
    if (t >= params.duration_s) break;
    // Thinning against the peak rate keeps one code path for both kinds.
    double accept = kind == TraceKind::kBurst ? burst_rate_at(params, t) / max_rate : 1.0;
    if (unit(rng) >= accept) continue;
    Request r;
    r.id = static_cast<int64_t>(trace.size());
    r.arrival_us = sec_to_us(t);
    r.prompt_tokens = prompt(rng);
    r.output_tokens = output(rng);
    r.model = params.model;
    trace.push_back(r);
  }
  return trace;
}

std::vector<Request> read_trace(std::istream& in, const std::string& default_model) {
  std::vector<Request> trace;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Request r;
    try {
      json j = json::parse(line);
      r.arrival_us = ms_to_us(j.at("arrival_ms").get<double>());
      r.prompt_tokens = j.at("prompt_tokens").get<int>();
      r.output_tokens = j.at("output_tokens").get<int>();
      r.model = j.value("model", default_model);
    } catch (const json::exception& e) {
      fail(ErrorCode::kInvalidArgument,
           "trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (r.prompt_tokens < 1 || r.output_tokens < 1) {
      fail(ErrorCode::kInvalidArgument,
           "trace line " + std::to_string(line_no) + ": token counts must be >= 1");
    }
    if (r.arrival_us < 0 || (!trace.empty() && r.arrival_us < trace.back().arrival_us)) {
      fail(ErrorCode::kInvalidArgument,
           "trace line " + std::to_string(line_no) + ": arrivals must be sorted and >= 0");
    }
    r.id = static_cast<int64_t>(trace.size());
    trace.push_back(r);
  }
  return trace;
}

std::vector<Request> load_trace_file(const std::string& path, const std::string& default_model) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kNotFound, "cannot open trace '" + path + "'");
  return read_trace(in, default_model);
}

void write_trace(std::ostream& out, const std::vector<Request>& trace) {
  for (const auto& r : trace) {
    json j = {{"arrival_ms", us_to_ms(r.arrival_us)},
              {"prompt_tokens", r.prompt_tokens},
              {"output_tokens", r.output_tokens}};
    if (!r.model.empty()) j["model"] = r.model;
    out << j.dump() << "\n";
  }
}

}  // namespace netscale

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

#include "netscale/metrics.h"

#include <algorithm>
#include <cmath>

namespace netscale {

double compute_ttft(const RequestRecord& r) {
  if (r.token_times.empty()) {
    fail(ErrorCode::kInvalidArgument, "request " + std::to_string(r.id) + " has no first token");
  }
  return us_to_ms(r.token_times.front() - r.arrival_us);
}

std::vector<double> compute_tbt(const RequestRecord& r) {
  std::vector<double> gaps;
  for (size_t i = 1; i < r.token_times.size(); ++i) {
    gaps.push_back(us_to_ms(r.token_times[i] - r.token_times[i - 1]));
  }
  return gaps;
}

bool meets_slo(const RequestRecord& r, const Slo& slo) {
  if (!r.completed()) return false;
  if (compute_ttft(r) > slo.ttft_ms) return false;
  for (double gap : compute_tbt(r)) {
    if (gap > slo.tbt_ms) return false;
  }
  return true;
}

double slo_attainment(const std::vector<RequestRecord>& records, const Slo& slo) {
  if (records.empty()) return 1.0;
  size_t ok = std::count_if(records.begin(), records.end(),
                            [&](const RequestRecord& r) { return meets_slo(r, slo); });
  return static_cast<double>(ok) / records.size();
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double rank = std::ceil(p / 100.0 * values.size());
  size_t idx = static_cast<size_t>(std::clamp(rank, 1.0, static_cast<double>(values.size())));
  return values[idx - 1];
}

nlohmann::json ScaleEvent::to_json() const {
  nlohmann::json j = {{"time_ms", time_ms}, {"kind", kind}, {"model", model}};
  if (!role.empty()) j["role"] = role;
  if (instance >= 0) j["instance"] = instance;
  if (!gpus.empty()) j["gpus"] = gpus;
  if (load_ms > 0.0) j["load_ms"] = load_ms;
  if (!source.empty()) j["source"] = source;
  return j;
}

}  // namespace netscale

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
#include <string_view>
#include <vector>

#include "json.hpp"

namespace netscale {

// A layer-uniform model and the cost model of serving it on one instance.
struct ModelSpec {
  std::string name;
  int num_layers = 1;
  double bytes_per_layer = 0.0;
  // GPUs per instance; each GPU holds and loads 1/tp_degree of the bytes.
  int tp_degree = 1;

  double prefill_slo_ms = 0.0;
  double tbt_slo_ms = 0.0;

  // Token-linear step costs: alpha + beta * batch_tokens.
  double prefill_alpha_ms = 0.0;
  double prefill_beta_ms = 0.0;
  double decode_alpha_ms = 0.0;
  double decode_beta_ms = 0.0;

  // KVCache shipped from prefill to decode per prompt token.
  double kv_bytes_per_token = 0.0;

  double total_bytes() const { return bytes_per_layer * num_layers; }
  // Bytes one GPU of an instance receives.
  double lane_bytes() const { return total_bytes() / tp_degree; }
  double lane_layer_bytes() const { return bytes_per_layer / tp_degree; }

  double prefill_ms(double batch_tokens) const {
    return prefill_alpha_ms + prefill_beta_ms * batch_tokens;
  }
  double decode_ms(double batch_tokens) const {
    return decode_alpha_ms + decode_beta_ms * batch_tokens;
  }

  void validate() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);

  bool operator==(const ModelSpec&) const = default;
};

// Bundled models: "llama2-7b" and "llama2-70b". Cost coefficients are
// calibrated assumptions; sizes and SLOs are the published values.
ModelSpec model_preset(std::string_view name);
std::vector<ModelSpec> load_model_registry(const nlohmann::json& doc);
// A preset name, a registry file path, or a comma-separated list of presets.
std::vector<ModelSpec> resolve_models(const std::string& spec);

}  // namespace netscale

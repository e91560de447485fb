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

#include "netscale/model.h"

#include <fstream>
#include <sstream>

#include "netscale/common.h"

namespace netscale {

using nlohmann::json;

void ModelSpec::validate() const {
  auto bad = [this](const std::string& msg) {
    fail(ErrorCode::kInvalidArgument, "model '" + name + "': " + msg);
  };
  if (name.empty()) fail(ErrorCode::kInvalidArgument, "model needs a name");
  if (num_layers < 1) bad("num_layers must be >= 1");
  if (tp_degree < 1) bad("tp_degree must be >= 1");
  if (!(bytes_per_layer > 0.0)) bad("bytes_per_layer must be positive");
  if (prefill_slo_ms < 0.0 || tbt_slo_ms < 0.0) bad("negative SLO");
  if (prefill_alpha_ms < 0.0 || prefill_beta_ms < 0.0 || decode_alpha_ms < 0.0 ||
      decode_beta_ms < 0.0) {
    bad("negative cost coefficient");
  }
  if (prefill_alpha_ms + prefill_beta_ms <= 0.0) bad("prefill cost must be positive");
  if (decode_alpha_ms + decode_beta_ms <= 0.0) bad("decode cost must be positive");
  if (kv_bytes_per_token < 0.0) bad("negative kv_bytes_per_token");
}

json ModelSpec::to_json() const {
  return {{"name", name},
          {"num_layers", num_layers},
          {"bytes_per_layer", bytes_per_layer},
          {"tp_degree", tp_degree},
          {"prefill_slo_ms", prefill_slo_ms},
          {"tbt_slo_ms", tbt_slo_ms},
          {"prefill_alpha_ms", prefill_alpha_ms},
          {"prefill_beta_ms", prefill_beta_ms},
          {"decode_alpha_ms", decode_alpha_ms},
          {"decode_beta_ms", decode_beta_ms},
          {"kv_bytes_per_token", kv_bytes_per_token}};
}

ModelSpec ModelSpec::from_json(const json& j) {
  ModelSpec m;
  try {
    if (j.contains("preset")) m = model_preset(j.at("preset").get<std::string>());
    m.name = j.value("name", m.name);
    m.num_layers = j.value("num_layers", m.num_layers);
    if (j.contains("total_bytes")) {
      m.bytes_per_layer = j.at("total_bytes").get<double>() / m.num_layers;
    }
    m.bytes_per_layer = j.value("bytes_per_layer", m.bytes_per_layer);
    m.tp_degree = j.value("tp_degree", m.tp_degree);
    m.prefill_slo_ms = j.value("prefill_slo_ms", m.prefill_slo_ms);
    m.tbt_slo_ms = j.value("tbt_slo_ms", m.tbt_slo_ms);
    m.prefill_alpha_ms = j.value("prefill_alpha_ms", m.prefill_alpha_ms);
    m.prefill_beta_ms = j.value("prefill_beta_ms", m.prefill_beta_ms);
    m.decode_alpha_ms = j.value("decode_alpha_ms", m.decode_alpha_ms);
    m.decode_beta_ms = j.value("decode_beta_ms", m.decode_beta_ms);
    m.kv_bytes_per_token = j.value("kv_bytes_per_token", m.kv_bytes_per_token);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed model record: ") + e.what());
  }
  m.validate();
  return m;
}

ModelSpec model_preset(std::string_view name) {
  ModelSpec m;
  if (name == "llama2-7b") {
    m.name = "llama2-7b";
    m.num_layers = 32;
    m.bytes_per_layer = 14e9 / 32;
    m.tp_degree = 1;
    m.prefill_slo_ms = 450;
    m.tbt_slo_ms = 150;
    // ~2.9 ms per layer for a 2000-token batch, i.e. six layer executions
    // per 200 Gbps layer load.
    m.prefill_alpha_ms = 5.0;
    m.prefill_beta_ms = 0.045;
    m.decode_alpha_ms = 30.0;
    m.decode_beta_ms = 0.2;
    m.kv_bytes_per_token = 160e3;
    return m;
  }
  if (name == "llama2-70b") {
    m.name = "llama2-70b";
    m.num_layers = 80;
    m.bytes_per_layer = 140e9 / 80;
    m.tp_degree = 4;
    m.prefill_slo_ms = 1250;
    m.tbt_slo_ms = 200;
    m.prefill_alpha_ms = 15.0;
    m.prefill_beta_ms = 0.12;
    m.decode_alpha_ms = 45.0;
    m.decode_beta_ms = 0.3;
    m.kv_bytes_per_token = 320e3;
    return m;
  }
  fail(ErrorCode::kNotFound, "unknown model preset '" + std::string(name) + "'");
}

std::vector<ModelSpec> load_model_registry(const json& doc) {
  const json& list = doc.is_object() && doc.contains("models") ? doc.at("models") : doc;
  if (!list.is_array()) fail(ErrorCode::kInvalidArgument, "model registry must be a list");
  std::vector<ModelSpec> models;
  for (const auto& j : list) {
    models.push_back(j.is_string() ? model_preset(j.get<std::string>()) : ModelSpec::from_json(j));
  }
  if (models.empty()) fail(ErrorCode::kInvalidArgument, "model registry is empty");
  for (size_t i = 0; i < models.size(); ++i) {
    for (size_t k = i + 1; k < models.size(); ++k) {
      if (models[i].name == models[k].name) {
        fail(ErrorCode::kInvalidArgument, "duplicate model '" + models[i].name + "'");
      }
    }
  }
  return models;
}

std::vector<ModelSpec> resolve_models(const std::string& spec) {
  std::ifstream in(spec);
  if (in) {
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      fail(ErrorCode::kInvalidArgument, "malformed model registry '" + spec + "': " + e.what());
    }
    return load_model_registry(doc);
  }
  json names = json::array();
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) names.push_back(item);
  return load_model_registry(names);
}

}  // namespace netscale

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

#include "netscale/param_pool.h"

#include <algorithm>

namespace netscale {

using nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kPrefill:
      return "prefill";
    case Role::kDecode:
      return "decode";
    case Role::kColocated:
      return "colocated";
  }
  return "?";
}

std::string SourceRef::to_string() const {
  if (is_host_memory()) return "(" + std::to_string(host) + ",_)";
  std::string gpu = gpus.empty() ? "?" : std::to_string(gpus.front());
  return "(" + std::to_string(host) + "," + gpu + ")";
}

ParameterPool ParameterPool::init(const std::vector<ModelSpec>& models,
                                  const NetworkTopology& topo, PoolOptions options) {
  if (options.slots_per_host < 0) {
    fail(ErrorCode::kInvalidArgument, "slots_per_host must be >= 0");
  }
  ParameterPool pool;
  pool.options_ = options;
  for (const auto& h : topo.hosts()) pool.host_ids_.push_back(h.host_id);
  for (const auto& m : models) {
    if (pool.entries_.count(m.name)) {
      fail(ErrorCode::kInvalidArgument, "duplicate model '" + m.name + "'");
    }
    pool.entries_[m.name];
  }
  switch (options.policy) {
    case CachePolicy::kOneCopy: {
      size_t capacity = pool.host_ids_.size() * static_cast<size_t>(options.slots_per_host);
      if (models.size() > capacity) {
        fail(ErrorCode::kCapacityExceeded, "host caches cannot hold one copy per model");
      }
      size_t cursor = 0;
      for (const auto& m : models) {
        // Round-robin, skipping hosts whose slots are used up.
        while (pool.cached_on_host(pool.host_ids_[cursor % pool.host_ids_.size()]) >=
               options.slots_per_host) {
          ++cursor;
        }
        pool.entries_[m.name].caches[pool.host_ids_[cursor % pool.host_ids_.size()]] = kPinned;
        ++cursor;
      }
      break;
    }
    case CachePolicy::kAllHosts:
      for (const auto& m : models) {
        for (int h : pool.host_ids_) pool.entries_[m.name].caches[h] = kPinned;
      }
      break;
    case CachePolicy::kKeepAlive:
      break;
  }
  return pool;
}

ParameterPool::Entry& ParameterPool::entry(const std::string& model) {
  auto it = entries_.find(model);
  if (it == entries_.end()) fail(ErrorCode::kNotFound, "unknown model '" + model + "'");
  return it->second;
}

const ParameterPool::Entry& ParameterPool::entry(const std::string& model) const {
  auto it = entries_.find(model);
  if (it == entries_.end()) fail(ErrorCode::kNotFound, "unknown model '" + model + "'");
  return it->second;
}

bool ParameterPool::has_model(const std::string& model) const {
  return entries_.count(model) > 0;
}

std::vector<std::string> ParameterPool::models() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::vector<SourceRef> ParameterPool::sources_for(const std::string& model) const {
  const Entry& e = entry(model);
  std::vector<SourceRef> out;
  for (const auto& inst : e.instances) out.push_back({inst.host, inst.id, inst.gpus});
  for (const auto& [host, expiry] : e.caches) {
    out.push_back({host, SourceRef::kHostMemory, {}});
  }
  return out;
}

std::vector<SourceRef> ParameterPool::sources_for(const std::string& model,
                                                  const NetworkTopology& topo,
                                                  const FlowSet& flows) const {
  auto refs = sources_for(model);
  auto bw = [&](const SourceRef& r) {
    if (r.is_host_memory()) return outcast_bandwidth(topo, NodeId::host_memory(r.host), flows);
    double b = std::numeric_limits<double>::infinity();
    for (int g : r.gpus) b = std::min(b, outcast_bandwidth(topo, NodeId::gpu(g), flows));
    return b;
  };
  std::stable_sort(refs.begin(), refs.end(), [&](const SourceRef& a, const SourceRef& b) {
    if (a.is_host_memory() != b.is_host_memory()) return !a.is_host_memory();
    return bw(a) > bw(b);
  });
  return refs;
}

std::vector<PoolEvent> ParameterPool::on_deploy(const std::string& model,
                                                const InstanceRef& instance,
                                                SimTime now) {
  (void)now;
  Entry& e = entry(model);
  if (instance.gpus.empty()) fail(ErrorCode::kInvalidArgument, "instance has no GPUs");
  for (const auto& [name, other] : entries_) {
    for (const auto& inst : other.instances) {
      if (inst.id == instance.id) {
        fail(ErrorCode::kInvalidArgument,
             "instance " + std::to_string(instance.id) + " already deployed");
      }
    }
  }
  e.instances.push_back(instance);
  if (options_.policy == CachePolicy::kKeepAlive) e.caches[instance.host] = kPinned;
  return {};
}

int ParameterPool::pick_reload_host(int preferred) const {
  auto has_slot = [&](int h) { return cached_on_host(h) < options_.slots_per_host; };
  if (std::find(host_ids_.begin(), host_ids_.end(), preferred) != host_ids_.end() &&
      has_slot(preferred)) {
    return preferred;
  }
  int best = -1;
  for (int h : host_ids_) {
    if (!has_slot(h)) continue;
    if (best < 0 || cached_on_host(h) < cached_on_host(best)) best = h;
  }
  return best;
}

std::vector<PoolEvent> ParameterPool::on_reclaim(const std::string& model,
                                                 int instance_id, SimTime now) {
  Entry& e = entry(model);
  auto it = std::find_if(e.instances.begin(), e.instances.end(),
                         [&](const InstanceRef& r) { return r.id == instance_id; });
  if (it == e.instances.end()) {
    fail(ErrorCode::kNotFound, "instance " + std::to_string(instance_id) +
                                   " does not hold '" + model + "'");
  }
  std::vector<PoolEvent> events;
  int host = it->host;
  if (options_.policy == CachePolicy::kKeepAlive) {
    bool other_on_host = std::any_of(e.instances.begin(), e.instances.end(),
                                     [&](const InstanceRef& r) {
                                       return r.id != instance_id && r.host == host;
                                     });
    if (!other_on_host) e.caches[host] = now + options_.keep_alive_us;
  } else if (e.instances.size() == 1 && e.caches.empty()) {
    int target = pick_reload_host(host);
    if (target < 0) {
      fail(ErrorCode::kCapacityExceeded,
           "no host can take the last copy of '" + model + "'");
    }
    e.caches[target] = kPinned;
    events.push_back({PoolEvent::Kind::kReload, model, target});
  }
  e.instances.erase(it);
  return events;
}

void ParameterPool::evict_cache(const std::string& model, int host) {
  Entry& e = entry(model);
  auto it = e.caches.find(host);
  if (it == e.caches.end()) {
    fail(ErrorCode::kNotFound, "'" + model + "' not cached on host " + std::to_string(host));
  }
  if (options_.policy != CachePolicy::kKeepAlive && e.instances.empty() &&
      e.caches.size() == 1) {
    fail(ErrorCode::kInvariant, "evicting the last copy of '" + model + "'");
  }
  e.caches.erase(it);
}

bool ParameterPool::cache_hit(const std::string& model, int host, SimTime now) const {
  const Entry& e = entry(model);
  auto it = e.caches.find(host);
  return it != e.caches.end() && it->second > now;
}

void ParameterPool::touch(const std::string& model, int host, SimTime now) {
  Entry& e = entry(model);
  auto& expiry = e.caches[host];
  if (expiry != kPinned) expiry = std::max(expiry, now + options_.keep_alive_us);
}

void ParameterPool::expire(SimTime now) {
  for (auto& [name, e] : entries_) {
    std::erase_if(e.caches, [&](const auto& kv) { return kv.second <= now; });
  }
}

int ParameterPool::gpu_copies(const std::string& model) const {
  return static_cast<int>(entry(model).instances.size());
}

int ParameterPool::host_copies(const std::string& model, SimTime now) const {
  const Entry& e = entry(model);
  return static_cast<int>(std::count_if(e.caches.begin(), e.caches.end(),
                                        [&](const auto& kv) { return kv.second > now; }));
}

int ParameterPool::total_host_copies(SimTime now) const {
  int total = 0;
  for (const auto& [name, e] : entries_) total += host_copies(name, now);
  return total;
}

int ParameterPool::cached_on_host(int host) const {
  int count = 0;
  for (const auto& [name, e] : entries_) count += e.caches.count(host) ? 1 : 0;
  return count;
}

void ParameterPool::check_invariants(SimTime now) const {
  for (const auto& [name, e] : entries_) {
    if (options_.policy == CachePolicy::kKeepAlive) continue;  // SSD backs every model
    int host = host_copies(name, now);
    if (e.instances.empty() && host == 0) {
      fail(ErrorCode::kInvariant, "model '" + name + "' has no parameter source");
    }
    if (options_.policy == CachePolicy::kOneCopy && host > 1) {
      fail(ErrorCode::kInvariant, "model '" + name + "' has more than one host copy");
    }
  }
}

json ParameterPool::to_json() const {
  json doc = json::object();
  for (const auto& [name, e] : entries_) {
    json instances = json::array();
    for (const auto& inst : e.instances) {
      instances.push_back({{"id", inst.id}, {"host", inst.host}, {"gpus", inst.gpus}});
    }
    json caches = json::array();
    for (const auto& [host, expiry] : e.caches) {
      json c = {{"host", host}};
      if (expiry != kPinned) c["expires_us"] = expiry;
      caches.push_back(c);
    }
    doc[name] = {{"instances", instances}, {"host_caches", caches}};
  }
  return doc;
}

}  // namespace netscale

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

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "netscale/common.h"
#include "netscale/flow_set.h"
#include "netscale/instance.h"
#include "netscale/model.h"
#include "netscale/topology.h"

namespace netscale {

enum class CachePolicy {
  // One host-memory copy per model cluster-wide, pinned.
  kOneCopy,
  // Host copies kept for a window after last use; misses go to SSD.
  kKeepAlive,
  // Every host caches every model.
  kAllHosts,
};

struct PoolOptions {
  CachePolicy policy = CachePolicy::kOneCopy;
  // Host cache capacity in model copies.
  int slots_per_host = 4;
  SimTime keep_alive_us = 300 * kUsPerSec;
};

// Where parameters can be read from: a serving instance, or host memory when
// `instance` is kHostMemory.
struct SourceRef {
  static constexpr int kHostMemory = -1;

  int host = 0;
  int instance = kHostMemory;
  std::vector<int> gpus;

  bool is_host_memory() const { return instance == kHostMemory; }
  std::string to_string() const;

  bool operator==(const SourceRef&) const = default;
};

struct PoolEvent {
  enum class Kind { kReload, kEvict };
  Kind kind = Kind::kReload;
  std::string model;
  int host = 0;

  bool operator==(const PoolEvent&) const = default;
};

class ParameterPool {
 public:
  // Spreads one host copy of each model round-robin over hosts (kOneCopy),
  // every host (kAllHosts), or none (kKeepAlive). Throws kCapacityExceeded
  // when host slots cannot hold one copy per model.
  static ParameterPool init(const std::vector<ModelSpec>& models,
                            const NetworkTopology& topo, PoolOptions options = {});

  const PoolOptions& options() const { return options_; }
  bool has_model(const std::string& model) const;
  std::vector<std::string> models() const;

  // GPU instances first (deploy order), then host caches (host order).
  std::vector<SourceRef> sources_for(const std::string& model) const;
  // Same partition, each part ordered by descending outcast bandwidth.
  std::vector<SourceRef> sources_for(const std::string& model,
                                     const NetworkTopology& topo,
                                     const FlowSet& flows) const;

  std::vector<PoolEvent> on_deploy(const std::string& model,
                                   const InstanceRef& instance, SimTime now = 0);
  // Reclaiming the last copy first reloads it into a host cache: the
  // instance's host if it has a free slot, otherwise the least-loaded host.
  std::vector<PoolEvent> on_reclaim(const std::string& model, int instance_id,
                                    SimTime now = 0);
  // Drops a host copy. Under kOneCopy this requires a GPU copy to remain.
  void evict_cache(const std::string& model, int host);

  bool cache_hit(const std::string& model, int host, SimTime now) const;
  // Records use of the host copy (keep-alive mode), creating it if needed.
  void touch(const std::string& model, int host, SimTime now);
  void expire(SimTime now);

  int gpu_copies(const std::string& model) const;
  int host_copies(const std::string& model, SimTime now = 0) const;
  int total_host_copies(SimTime now = 0) const;
  int cached_on_host(int host) const;

  // Throws Error(kInvariant) if a model lost its last copy or holds more
  // than one host copy under kOneCopy.
  void check_invariants(SimTime now = 0) const;

  nlohmann::json to_json() const;
  bool operator==(const ParameterPool& other) const {
    return entries_ == other.entries_;
  }

 private:
  static constexpr SimTime kPinned = std::numeric_limits<SimTime>::max();

  struct Entry {
    std::vector<InstanceRef> instances;
    // host -> expiry time; kPinned for copies without a deadline.
    std::map<int, SimTime> caches;
    bool operator==(const Entry&) const = default;
  };

  Entry& entry(const std::string& model);
  const Entry& entry(const std::string& model) const;
  int pick_reload_host(int preferred) const;

  PoolOptions options_;
  std::vector<int> host_ids_;
  std::map<std::string, Entry> entries_;
};

}  // namespace netscale

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

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "netscale/flow_set.h"
#include "netscale/instance.h"
#include "netscale/model.h"
#include "netscale/param_pool.h"
#include "netscale/topology.h"

namespace netscale {

// A parameter holder or receiver. Instances move one lane per GPU; host
// memory and SSD feed every lane from the host's node.
struct Endpoint {
  enum class Kind { kHostMemory, kSsd, kInstance };

  Kind kind = Kind::kInstance;
  int id = -1;  // instance id, -1 for host memory and SSD
  int host = 0;
  std::vector<int> gpus;

  static Endpoint instance(const InstanceRef& ref) {
    return {Kind::kInstance, ref.id, ref.host, ref.gpus};
  }
  static Endpoint host_memory(int host) { return {Kind::kHostMemory, -1, host, {}}; }
  static Endpoint ssd(int host) { return {Kind::kSsd, -1, host, {}}; }

  bool is_instance() const { return kind == Kind::kInstance; }
  // Node carrying lane `lane` of the transfer.
  NodeId lane_node(int lane) const;
  // "inst:3", "mem:0", "ssd:1".
  std::string name() const;

  bool operator==(const Endpoint&) const = default;
};

constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Bandwidths below are per lane, i.e. what each GPU of the target receives.
struct PlanSource {
  Endpoint endpoint;
  double outcast_gbps = 0.0;
};

struct PlanTarget {
  Endpoint endpoint;
  double incast_gbps = 0.0;
  // Caps what the target can forward once it holds parameters.
  double outcast_gbps = kUnbounded;
};

struct ScaleRequest {
  ModelSpec model;
  std::vector<PlanSource> sources;
  std::vector<PlanTarget> targets;
  // Used when pruning removes every source.
  std::vector<PlanSource> fallback_sources;
};

struct PlanEdge {
  Endpoint from;
  Endpoint to;
  double gbps = 0.0;
  LinkKind kind = LinkKind::kRdma;
};

struct ScalePlan {
  std::vector<PlanEdge> edges;
  // Root-to-leaf paths as edge indices.
  std::vector<std::vector<size_t>> chains;
  // Chain member name -> NVLink siblings it broadcasts to.
  std::map<std::string, std::vector<Endpoint>> nvlink_fanout;
  double nvlink_gbps = 0.0;

  bool empty() const { return edges.empty() && nvlink_fanout.empty(); }
  // Every target of the plan, chain members first in edge order.
  std::vector<Endpoint> targets() const;
  // Index of the edge entering `name`, if any.
  std::optional<size_t> inbound_edge(const std::string& name) const;
  // Edges from the root to `name`; empty for roots and fanout siblings.
  std::vector<size_t> path_to(const std::string& name) const;
  nlohmann::json to_json() const;
};

struct PlanEstimate {
  std::map<std::string, double> per_target_completion;  // seconds
  std::vector<double> bottleneck_gbps;                  // per chain

  double max_completion() const;
  nlohmann::json to_json() const;
};

struct GroupedTargets {
  std::vector<PlanTarget> representatives;
  std::map<std::string, std::vector<Endpoint>> fanout;
};

// Per-lane link capacity between two endpoints; nullopt when unreachable.
using LinkCapFn =
    std::function<std::optional<double>(const Endpoint&, const Endpoint&)>;

LinkCapFn unbounded_links();
LinkCapFn topology_links(const NetworkTopology& topo);
LinkKind edge_link_kind(const NetworkTopology& topo, const Endpoint& from,
                        const Endpoint& to);

// Keeps the highest-incast member of each NVLink domain and records the
// rest as its fanout. Targets outside NVLink domains pass through.
GroupedTargets group_targets(const std::vector<PlanTarget>& targets,
                             const NetworkTopology& topo);

// Drops instance sources that send serving traffic. When nothing survives,
// returns `fallback`, or the input if there is no fallback.
std::vector<PlanSource> prune_sources(const std::vector<PlanSource>& sources,
                                      const FlowSet& flows,
                                      const std::vector<PlanSource>& fallback = {});

// Greedy chain construction over already grouped and pruned inputs.
ScalePlan build_chains(const std::vector<PlanSource>& sources,
                       const std::vector<PlanTarget>& targets,
                       const LinkCapFn& links);

// Grouping, pruning and chain construction.
ScalePlan generate_plan(const ScaleRequest& request, const NetworkTopology& topo,
                        const FlowSet& flows);

// Builds a request from explicit sources; bandwidths read from `flows`.
// Host-memory and SSD sources double as the fallback.
ScaleRequest make_scale_request(const ModelSpec& model, const std::vector<Endpoint>& sources,
                                const std::vector<InstanceRef>& targets,
                                const NetworkTopology& topo, const FlowSet& flows);
// Builds a request from the pool's sources.
ScaleRequest make_scale_request(const ModelSpec& model, const ParameterPool& pool,
                                const std::vector<InstanceRef>& targets,
                                const NetworkTopology& topo, const FlowSet& flows);

PlanEstimate estimate_completion(const ScalePlan& plan, const ModelSpec& model,
                                 double efficiency = 1.0);

// Store-and-forward arrival time (seconds) of each layer at `name`.
std::vector<double> layer_arrival_seconds(const ScalePlan& plan,
                                          const ModelSpec& model,
                                          const std::string& name,
                                          double efficiency = 1.0);

bool plan_is_interference_free(const ScalePlan& plan, const NetworkTopology& topo,
                               const FlowSet& flows);

// Exhaustive search over forests under the serial-forwarding time model.
// Returns the optimal max completion in seconds; meant for small inputs.
double oracle_max_completion(const std::vector<PlanSource>& sources,
                             const std::vector<PlanTarget>& targets,
                             const ModelSpec& model, const LinkCapFn& links,
                             double efficiency = 1.0);

}  // namespace netscale

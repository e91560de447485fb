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

#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "netscale/topology.h"

namespace netscale {

enum class FlowLabel { kKvCache, kScale, kActivation };

std::string_view to_string(FlowLabel label);
FlowLabel parse_flow_label(std::string_view text);

// KVCache and activation traffic belongs to serving; scale traffic does not.
inline bool is_serving(FlowLabel label) { return label != FlowLabel::kScale; }

struct Flow {
  NodeId src;
  NodeId dst;
  double gbps = 0.0;
  FlowLabel label = FlowLabel::kKvCache;

  bool operator==(const Flow&) const = default;
};

// Active flows plus per-direction usage of every port and link they cross.
// A cross-host flow occupies the source port outbound and the destination
// port inbound; an intra-host flow occupies its link (and the host-memory or
// SSD port when one endpoint is not a GPU).
class FlowSet {
 public:
  // Throws Error(kCapacityExceeded) if any crossed direction would overflow,
  // Error(kUnreachable) if no link joins src and dst.
  void add(const NetworkTopology& topo, const Flow& flow);
  // Removes one matching flow. Throws Error(kNotFound) if absent.
  void remove(const NetworkTopology& topo, const Flow& flow);

  const std::vector<Flow>& flows() const { return flows_; }
  bool empty() const { return flows_.empty(); }

  double port_out(int port) const;
  double port_in(int port) const;
  double link_used(NodeId src, NodeId dst) const;

  // True if a serving flow leaves (outbound) or enters (inbound) `node`.
  bool has_serving_out(NodeId node) const;
  bool has_serving_in(NodeId node) const;
  bool has_serving(NodeId node) const {
    return has_serving_out(node) || has_serving_in(node);
  }

  // Re-derives usage from the flow list and checks every capacity.
  void check_invariants(const NetworkTopology& topo) const;

  bool operator==(const FlowSet& other) const { return flows_ == other.flows_; }

 private:
  struct Usage {
    std::map<int, double> out;
    std::map<int, double> in;
    std::map<std::pair<NodeId, NodeId>, double> link;
  };
  static void apply(const NetworkTopology& topo, const Flow& flow,
                    double sign, Usage& usage);
  static void check(const NetworkTopology& topo, const Usage& usage);

  std::vector<Flow> flows_;
  Usage usage_;
};

FlowSet register_flow(const NetworkTopology& topo, FlowSet flows, NodeId src,
                      NodeId dst, double gbps, FlowLabel label);
FlowSet release_flow(const NetworkTopology& topo, FlowSet flows, NodeId src,
                     NodeId dst, double gbps, FlowLabel label);

// Residual outbound/inbound capacity at `node` after registered flows,
// floored at 0. A GPU whose NIC sibling carries serving traffic is capped at
// `shared_nic_fraction` of the NIC. Throws Error(kNotFound) for unknown nodes.
double outcast_bandwidth(const NetworkTopology& topo, NodeId node,
                         const FlowSet& flows);
double incast_bandwidth(const NetworkTopology& topo, NodeId node,
                        const FlowSet& flows);

// Scale-traffic cap imposed at `gpu` by NIC siblings (NIC capacity when no
// sibling serves).
double shared_nic_cap(const NetworkTopology& topo, int gpu,
                      const FlowSet& flows);

// Rate a new scale flow src -> dst could take now: residual link and port
// capacity, with the shared-NIC cap applied to scale traffic.
double available_gbps(const NetworkTopology& topo, const FlowSet& flows,
                      NodeId src, NodeId dst);

}  // namespace netscale

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

#include "netscale/flow_set.h"

#include <algorithm>
#include <cmath>

#include "netscale/common.h"

namespace netscale {

namespace {
constexpr double kCapacityEps = 1e-9;
}

std::string_view to_string(FlowLabel label) {
  switch (label) {
    case FlowLabel::kKvCache:
      return "kvcache";
    case FlowLabel::kScale:
      return "scale";
    case FlowLabel::kActivation:
      return "activation";
  }
  return "?";
}

FlowLabel parse_flow_label(std::string_view text) {
  if (text == "kvcache") return FlowLabel::kKvCache;
  if (text == "scale") return FlowLabel::kScale;
  if (text == "activation") return FlowLabel::kActivation;
  fail(ErrorCode::kInvalidArgument, "unknown flow label '" + std::string(text) + "'");
}

void FlowSet::apply(const NetworkTopology& topo, const Flow& flow, double sign,
                    Usage& usage) {
  if (!topo.has_node(flow.src)) fail(ErrorCode::kNotFound, "unknown node " + flow.src.to_string());
  if (!topo.has_node(flow.dst)) fail(ErrorCode::kNotFound, "unknown node " + flow.dst.to_string());
  if (topo.find_link(flow.src, flow.dst) == nullptr) {
    fail(ErrorCode::kUnreachable,
         "no link " + flow.src.to_string() + " -> " + flow.dst.to_string());
  }
  double rate = sign * flow.gbps;
  usage.link[{flow.src, flow.dst}] += rate;
  bool same_host = topo.host_of(flow.src) == topo.host_of(flow.dst);
  if (!same_host || flow.src.kind != NodeKind::kGpu) {
    usage.out[topo.port_of(flow.src)] += rate;
  }
  if (!same_host || flow.dst.kind != NodeKind::kGpu) {
    usage.in[topo.port_of(flow.dst)] += rate;
  }
}

void FlowSet::check(const NetworkTopology& topo, const Usage& usage) {
  for (const auto& [port, used] : usage.out) {
    if (used > topo.port_capacity(port) + kCapacityEps) {
      fail(ErrorCode::kCapacityExceeded,
           "outbound capacity exceeded on port " + std::to_string(port));
    }
  }
  for (const auto& [port, used] : usage.in) {
    if (used > topo.port_capacity(port) + kCapacityEps) {
      fail(ErrorCode::kCapacityExceeded,
           "inbound capacity exceeded on port " + std::to_string(port));
    }
  }
  for (const auto& [key, used] : usage.link) {
    const DirectedLink* link = topo.find_link(key.first, key.second);
    if (used > link->gbps + kCapacityEps) {
      fail(ErrorCode::kCapacityExceeded, "link capacity exceeded on " +
                                             key.first.to_string() + " -> " +
                                             key.second.to_string());
    }
  }
}

void FlowSet::add(const NetworkTopology& topo, const Flow& flow) {
  if (!(flow.gbps > 0.0) || !std::isfinite(flow.gbps)) {
    fail(ErrorCode::kInvalidArgument, "flow rate must be positive");
  }
  Usage next = usage_;
  apply(topo, flow, 1.0, next);
  check(topo, next);
  usage_ = std::move(next);
  flows_.push_back(flow);
}

void FlowSet::remove(const NetworkTopology& topo, const Flow& flow) {
  auto it = std::find_if(flows_.begin(), flows_.end(), [&](const Flow& f) {
    return f.src == flow.src && f.dst == flow.dst && f.label == flow.label &&
           std::abs(f.gbps - flow.gbps) <= kCapacityEps;
  });
  if (it == flows_.end()) {
    fail(ErrorCode::kNotFound, "no such flow " + flow.src.to_string() + " -> " +
                                   flow.dst.to_string());
  }
  flows_.erase(it);
  // Rebuild from scratch so add/remove pairs leave no floating-point residue.
  Usage fresh;
  for (const auto& f : flows_) apply(topo, f, 1.0, fresh);
  usage_ = std::move(fresh);
}

double FlowSet::port_out(int port) const {
  auto it = usage_.out.find(port);
  return it == usage_.out.end() ? 0.0 : it->second;
}

double FlowSet::port_in(int port) const {
  auto it = usage_.in.find(port);
  return it == usage_.in.end() ? 0.0 : it->second;
}

double FlowSet::link_used(NodeId src, NodeId dst) const {
  auto it = usage_.link.find({src, dst});
  return it == usage_.link.end() ? 0.0 : it->second;
}

bool FlowSet::has_serving_out(NodeId node) const {
  return std::any_of(flows_.begin(), flows_.end(), [&](const Flow& f) {
    return f.src == node && is_serving(f.label);
  });
}

bool FlowSet::has_serving_in(NodeId node) const {
  return std::any_of(flows_.begin(), flows_.end(), [&](const Flow& f) {
    return f.dst == node && is_serving(f.label);
  });
}

void FlowSet::check_invariants(const NetworkTopology& topo) const {
  Usage fresh;
  for (const auto& f : flows_) apply(topo, f, 1.0, fresh);
  check(topo, fresh);
}

FlowSet register_flow(const NetworkTopology& topo, FlowSet flows, NodeId src,
                      NodeId dst, double gbps, FlowLabel label) {
  flows.add(topo, {src, dst, gbps, label});
  return flows;
}

FlowSet release_flow(const NetworkTopology& topo, FlowSet flows, NodeId src,
                     NodeId dst, double gbps, FlowLabel label) {
  flows.remove(topo, {src, dst, gbps, label});
  return flows;
}

double shared_nic_cap(const NetworkTopology& topo, int gpu, const FlowSet& flows) {
  int nic = topo.nic_of(gpu);
  double cap = topo.port_capacity(nic);
  for (int sibling : topo.nic_members(nic)) {
    if (sibling != gpu && flows.has_serving(NodeId::gpu(sibling))) {
      return cap * topo.options().shared_nic_fraction;
    }
  }
  return cap;
}

double outcast_bandwidth(const NetworkTopology& topo, NodeId node,
                         const FlowSet& flows) {
  int port = topo.port_of(node);
  double residual = topo.port_capacity(port) - flows.port_out(port);
  if (node.kind == NodeKind::kGpu) {
    residual = std::min(residual, shared_nic_cap(topo, node.index, flows));
  }
  return std::max(0.0, residual);
}

double incast_bandwidth(const NetworkTopology& topo, NodeId node,
                        const FlowSet& flows) {
  int port = topo.port_of(node);
  double residual = topo.port_capacity(port) - flows.port_in(port);
  if (node.kind == NodeKind::kGpu) {
    residual = std::min(residual, shared_nic_cap(topo, node.index, flows));
  }
  return std::max(0.0, residual);
}

double available_gbps(const NetworkTopology& topo, const FlowSet& flows,
                      NodeId src, NodeId dst) {
  const DirectedLink* link = topo.find_link(src, dst);
  if (link == nullptr) {
    fail(ErrorCode::kUnreachable, "no link " + src.to_string() + " -> " + dst.to_string());
  }
  double avail = link->gbps - flows.link_used(src, dst);
  bool same_host = topo.host_of(src) == topo.host_of(dst);
  auto scale_used = [&](NodeId node, bool out) {
    double used = 0.0;
    for (const auto& f : flows.flows()) {
      if (f.label == FlowLabel::kScale && (out ? f.src : f.dst) == node) used += f.gbps;
    }
    return used;
  };
  if (!same_host || src.kind != NodeKind::kGpu) {
    int port = topo.port_of(src);
    avail = std::min(avail, topo.port_capacity(port) - flows.port_out(port));
    if (src.kind == NodeKind::kGpu) {
      avail = std::min(avail, shared_nic_cap(topo, src.index, flows) - scale_used(src, true));
    }
  }
  if (!same_host || dst.kind != NodeKind::kGpu) {
    int port = topo.port_of(dst);
    avail = std::min(avail, topo.port_capacity(port) - flows.port_in(port));
    if (dst.kind == NodeKind::kGpu) {
      avail = std::min(avail, shared_nic_cap(topo, dst.index, flows) - scale_used(dst, false));
    }
  }
  return std::max(0.0, avail);
}

}  // namespace netscale

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

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace netscale {

enum class NodeKind { kGpu, kHostMemory, kSsd };

// A GPU (global gpu id), or the host-memory / SSD node of a host (host id).
struct NodeId {
  NodeKind kind = NodeKind::kGpu;
  int index = 0;

  static NodeId gpu(int id) { return {NodeKind::kGpu, id}; }
  static NodeId host_memory(int host) { return {NodeKind::kHostMemory, host}; }
  static NodeId ssd(int host) { return {NodeKind::kSsd, host}; }

  // "gpu:3", "mem:0", "ssd:1".
  std::string to_string() const;
  static NodeId parse(std::string_view text);

  auto operator<=>(const NodeId&) const = default;
};

enum class LinkKind { kNvlink, kRdma, kPcie, kSsd };

std::string_view to_string(LinkKind kind);
LinkKind parse_link_kind(std::string_view text);

struct HostSpec {
  int host_id = 0;
  std::vector<int> gpu_ids;
  double host_gpu_gbps = 0.0;
  double ssd_gpu_gbps = 0.0;
  // GPUs attached to the same NIC. Covers every GPU of the host once.
  std::vector<std::vector<int>> nic_groups;

  bool operator==(const HostSpec&) const = default;
};

struct DirectedLink {
  NodeId src;
  NodeId dst;
  double gbps = 0.0;
  LinkKind kind = LinkKind::kRdma;

  bool operator==(const DirectedLink&) const = default;
};

// GPU-to-GPU fabric inside a host. kNvlink builds one full-mesh NVLink
// domain per host; kPcie builds plain PCIe links.
struct IntraFabric {
  LinkKind kind = LinkKind::kPcie;
  double gbps = 0.0;

  bool operator==(const IntraFabric&) const = default;
};

struct TopologyOptions {
  // Nominal-to-achieved bandwidth factor used by transfer-time estimates.
  double efficiency = 0.8;
  // Cap on scale traffic at a GPU whose NIC sibling carries serving flows.
  double shared_nic_fraction = 0.5;

  bool operator==(const TopologyOptions&) const = default;
};

class NetworkTopology {
 public:
  NetworkTopology(std::string name, std::vector<HostSpec> hosts,
                  std::optional<IntraFabric> intra,
                  std::optional<double> inter_gbps,
                  TopologyOptions options = {});

  const std::string& name() const { return name_; }
  const std::vector<HostSpec>& hosts() const { return hosts_; }
  const std::optional<IntraFabric>& intra() const { return intra_; }
  const std::optional<double>& inter_gbps() const { return inter_gbps_; }
  const TopologyOptions& options() const { return options_; }
  void set_options(const TopologyOptions& options);

  const std::vector<DirectedLink>& links() const { return links_; }
  const DirectedLink* find_link(NodeId src, NodeId dst) const;

  int gpu_count() const { return static_cast<int>(gpu_host_.size()); }
  std::vector<int> all_gpus() const;
  bool has_node(NodeId node) const;
  // Host of a node; throws kNotFound for unknown nodes.
  int host_of(NodeId node) const;
  const HostSpec& host(int host_id) const;

  const std::vector<std::vector<int>>& nvlink_domains() const {
    return nvlink_domains_;
  }
  std::optional<int> nvlink_domain_of(int gpu) const;

  // NIC ports. Every GPU maps to exactly one NIC.
  int nic_of(int gpu) const;
  const std::vector<int>& nic_members(int nic) const;
  double nic_gbps() const;

  // Flow accounting ports: NICs, then one host-memory port and one SSD port
  // per host. Capacity is per direction.
  int port_count() const { return static_cast<int>(port_capacity_.size()); }
  int port_of(NodeId node) const;
  double port_capacity(int port) const { return port_capacity_.at(port); }

  nlohmann::json to_json() const;

  bool operator==(const NetworkTopology& other) const;

 private:
  void validate() const;
  void build();

  std::string name_;
  std::vector<HostSpec> hosts_;
  std::optional<IntraFabric> intra_;
  std::optional<double> inter_gbps_;
  TopologyOptions options_;

  std::vector<DirectedLink> links_;
  std::map<std::pair<NodeId, NodeId>, size_t> link_index_;
  std::map<int, int> gpu_host_;
  std::map<int, size_t> host_index_;
  std::vector<std::vector<int>> nvlink_domains_;
  std::map<int, int> gpu_domain_;
  std::map<int, int> gpu_nic_;
  std::vector<std::vector<int>> nic_members_;
  std::vector<double> port_capacity_;
};

// Parses a topology document. Throws Error(kInvalidArgument) on malformed
// documents, duplicate ids or non-positive bandwidths.
NetworkTopology load_topology(const nlohmann::json& doc);
NetworkTopology load_topology_file(const std::string& path);

// Bundled presets: "cluster-A", "cluster-B" and one per surveyed cloud
// instance type. `spec` may be a preset name or a path to a document.
NetworkTopology load_preset(std::string_view name);
NetworkTopology resolve_topology(const std::string& spec);
std::vector<std::string> preset_names();

// Regroups every host into logical hosts of `gpus_per_host` GPUs along NIC
// boundaries. Each logical host gets its own host-memory and SSD node.
NetworkTopology split_hosts(const NetworkTopology& topo, int gpus_per_host);

}  // namespace netscale

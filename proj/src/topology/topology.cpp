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

#include "netscale/topology.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "netscale/common.h"

namespace netscale {

using nlohmann::json;

std::string NodeId::to_string() const {
  switch (kind) {
    case NodeKind::kGpu:
      return "gpu:" + std::to_string(index);
    case NodeKind::kHostMemory:
      return "mem:" + std::to_string(index);
    case NodeKind::kSsd:
      return "ssd:" + std::to_string(index);
  }
  return "?";
}

NodeId NodeId::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    fail(ErrorCode::kInvalidArgument, "bad node id '" + std::string(text) + "'");
  }
  auto prefix = text.substr(0, colon);
  auto digits = text.substr(colon + 1);
  int index = 0;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || index < 0) {
    fail(ErrorCode::kInvalidArgument, "bad node id '" + std::string(text) + "'");
  }
  if (prefix == "gpu") return gpu(index);
  if (prefix == "mem") return host_memory(index);
  if (prefix == "ssd") return ssd(index);
  fail(ErrorCode::kInvalidArgument, "bad node kind '" + std::string(text) + "'");
}

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::kNvlink:
      return "nvlink";
    case LinkKind::kRdma:
      return "rdma";
    case LinkKind::kPcie:
      return "pcie";
    case LinkKind::kSsd:
      return "ssd";
  }
  return "?";
}

LinkKind parse_link_kind(std::string_view text) {
  if (text == "nvlink") return LinkKind::kNvlink;
  if (text == "rdma") return LinkKind::kRdma;
  if (text == "pcie") return LinkKind::kPcie;
  if (text == "ssd") return LinkKind::kSsd;
  fail(ErrorCode::kInvalidArgument, "unknown link kind '" + std::string(text) + "'");
}

NetworkTopology::NetworkTopology(std::string name, std::vector<HostSpec> hosts,
                                 std::optional<IntraFabric> intra,
                                 std::optional<double> inter_gbps,
                                 TopologyOptions options)
    : name_(std::move(name)),
      hosts_(std::move(hosts)),
      intra_(intra),
      inter_gbps_(inter_gbps),
      options_(options) {
  for (auto& h : hosts_) {
    if (h.nic_groups.empty()) {
      for (int g : h.gpu_ids) h.nic_groups.push_back({g});
    }
  }
  validate();
  build();
}

void NetworkTopology::set_options(const TopologyOptions& options) {
  if (options.efficiency <= 0.0 || options.efficiency > 1.0) {
    fail(ErrorCode::kInvalidArgument, "efficiency must be in (0, 1]");
  }
  if (options.shared_nic_fraction <= 0.0 || options.shared_nic_fraction > 1.0) {
    fail(ErrorCode::kInvalidArgument, "shared_nic_fraction must be in (0, 1]");
  }
  options_ = options;
}

void NetworkTopology::validate() const {
  auto bad = [](const std::string& msg) {
    fail(ErrorCode::kInvalidArgument, msg);
  };
  if (hosts_.empty()) bad("topology has no hosts");
  std::set<int> host_ids;
  std::set<int> gpu_ids;
  for (const auto& h : hosts_) {
    if (!host_ids.insert(h.host_id).second) {
      bad("duplicate host id " + std::to_string(h.host_id));
    }
    if (h.gpu_ids.empty()) bad("host " + std::to_string(h.host_id) + " has no GPUs");
    for (int g : h.gpu_ids) {
      if (g < 0) bad("negative gpu id");
      if (!gpu_ids.insert(g).second) bad("duplicate gpu id " + std::to_string(g));
    }
    if (!(h.host_gpu_gbps > 0.0)) bad("host_gpu_gbps must be positive");
    if (!(h.ssd_gpu_gbps > 0.0)) bad("ssd_gpu_gbps must be positive");
    if (h.ssd_gpu_gbps > h.host_gpu_gbps) {
      bad("ssd_gpu_gbps exceeds host_gpu_gbps on host " + std::to_string(h.host_id));
    }
    std::multiset<int> covered;
    for (const auto& group : h.nic_groups) {
      if (group.empty()) bad("empty nic group");
      covered.insert(group.begin(), group.end());
    }
    std::multiset<int> expected(h.gpu_ids.begin(), h.gpu_ids.end());
    if (covered != expected) {
      bad("nic_groups must cover every GPU of host " + std::to_string(h.host_id) +
          " exactly once");
    }
  }
  if (intra_ && !(intra_->gbps > 0.0)) bad("intra gbps must be positive");
  if (intra_ && intra_->kind != LinkKind::kNvlink && intra_->kind != LinkKind::kPcie) {
    bad("intra kind must be nvlink or pcie");
  }
  if (inter_gbps_ && !(*inter_gbps_ > 0.0)) bad("inter gbps must be positive");
  if (hosts_.size() > 1 && !inter_gbps_) bad("multi-host topology needs inter gbps");
  if (options_.efficiency <= 0.0 || options_.efficiency > 1.0) {
    bad("efficiency must be in (0, 1]");
  }
  if (options_.shared_nic_fraction <= 0.0 || options_.shared_nic_fraction > 1.0) {
    bad("shared_nic_fraction must be in (0, 1]");
  }
}

void NetworkTopology::build() {
  for (size_t i = 0; i < hosts_.size(); ++i) {
    const auto& h = hosts_[i];
    host_index_[h.host_id] = i;
    for (int g : h.gpu_ids) gpu_host_[g] = h.host_id;
    for (const auto& group : h.nic_groups) {
      int nic = static_cast<int>(nic_members_.size());
      nic_members_.push_back(group);
      for (int g : group) gpu_nic_[g] = nic;
    }
    if (intra_ && intra_->kind == LinkKind::kNvlink && h.gpu_ids.size() > 1) {
      int domain = static_cast<int>(nvlink_domains_.size());
      nvlink_domains_.push_back(h.gpu_ids);
      for (int g : h.gpu_ids) gpu_domain_[g] = domain;
    }
  }

  // Ports: NICs, then host memory per host, then SSD per host.
  double nic_cap = inter_gbps_.value_or(0.0);
  port_capacity_.assign(nic_members_.size(), nic_cap);
  for (const auto& h : hosts_) port_capacity_.push_back(h.host_gpu_gbps);
  for (const auto& h : hosts_) {
    port_capacity_.push_back(h.ssd_gpu_gbps * static_cast<double>(h.gpu_ids.size()));
  }

  auto add = [this](NodeId src, NodeId dst, double gbps, LinkKind kind) {
    link_index_[{src, dst}] = links_.size();
    links_.push_back({src, dst, gbps, kind});
  };
  for (const auto& h : hosts_) {
    NodeId mem = NodeId::host_memory(h.host_id);
    NodeId ssd = NodeId::ssd(h.host_id);
    for (int a : h.gpu_ids) {
      add(mem, NodeId::gpu(a), h.host_gpu_gbps, LinkKind::kPcie);
      add(NodeId::gpu(a), mem, h.host_gpu_gbps, LinkKind::kPcie);
      add(ssd, NodeId::gpu(a), h.ssd_gpu_gbps, LinkKind::kSsd);
      if (!intra_) continue;
      for (int b : h.gpu_ids) {
        if (a != b) add(NodeId::gpu(a), NodeId::gpu(b), intra_->gbps, intra_->kind);
      }
    }
  }
  if (inter_gbps_) {
    for (const auto& ha : hosts_) {
      for (const auto& hb : hosts_) {
        if (ha.host_id == hb.host_id) continue;
        for (int a : ha.gpu_ids) {
          for (int b : hb.gpu_ids) {
            add(NodeId::gpu(a), NodeId::gpu(b), *inter_gbps_, LinkKind::kRdma);
          }
          add(NodeId::host_memory(hb.host_id), NodeId::gpu(a),
              std::min(*inter_gbps_, hb.host_gpu_gbps), LinkKind::kRdma);
          add(NodeId::gpu(a), NodeId::host_memory(hb.host_id),
              std::min(*inter_gbps_, hb.host_gpu_gbps), LinkKind::kRdma);
        }
      }
    }
  }
}

const DirectedLink* NetworkTopology::find_link(NodeId src, NodeId dst) const {
  auto it = link_index_.find({src, dst});
  return it == link_index_.end() ? nullptr : &links_[it->second];
}

std::vector<int> NetworkTopology::all_gpus() const {
  std::vector<int> out;
  out.reserve(gpu_host_.size());
  for (const auto& h : hosts_) out.insert(out.end(), h.gpu_ids.begin(), h.gpu_ids.end());
  return out;
}

bool NetworkTopology::has_node(NodeId node) const {
  if (node.kind == NodeKind::kGpu) return gpu_host_.count(node.index) > 0;
  return host_index_.count(node.index) > 0;
}

int NetworkTopology::host_of(NodeId node) const {
  if (!has_node(node)) fail(ErrorCode::kNotFound, "unknown node " + node.to_string());
  if (node.kind == NodeKind::kGpu) return gpu_host_.at(node.index);
  return node.index;
}

const HostSpec& NetworkTopology::host(int host_id) const {
  auto it = host_index_.find(host_id);
  if (it == host_index_.end()) {
    fail(ErrorCode::kNotFound, "unknown host " + std::to_string(host_id));
  }
  return hosts_[it->second];
}

std::optional<int> NetworkTopology::nvlink_domain_of(int gpu) const {
  auto it = gpu_domain_.find(gpu);
  if (it == gpu_domain_.end()) return std::nullopt;
  return it->second;
}

int NetworkTopology::nic_of(int gpu) const {
  auto it = gpu_nic_.find(gpu);
  if (it == gpu_nic_.end()) fail(ErrorCode::kNotFound, "unknown gpu " + std::to_string(gpu));
  return it->second;
}

const std::vector<int>& NetworkTopology::nic_members(int nic) const {
  return nic_members_.at(nic);
}

double NetworkTopology::nic_gbps() const { return inter_gbps_.value_or(0.0); }

int NetworkTopology::port_of(NodeId node) const {
  int nics = static_cast<int>(nic_members_.size());
  int hosts = static_cast<int>(hosts_.size());
  switch (node.kind) {
    case NodeKind::kGpu:
      return nic_of(node.index);
    case NodeKind::kHostMemory:
      host(node.index);
      return nics + static_cast<int>(host_index_.at(node.index));
    case NodeKind::kSsd:
      host(node.index);
      return nics + hosts + static_cast<int>(host_index_.at(node.index));
  }
  fail(ErrorCode::kNotFound, "unknown node");
}

json NetworkTopology::to_json() const {
  json doc;
  doc["name"] = name_;
  json hosts = json::array();
  for (const auto& h : hosts_) {
    hosts.push_back({{"id", h.host_id},
                     {"gpus", h.gpu_ids},
                     {"host_gpu_gbps", h.host_gpu_gbps},
                     {"ssd_gpu_gbps", h.ssd_gpu_gbps},
                     {"nic_groups", h.nic_groups}});
  }
  doc["hosts"] = hosts;
  if (intra_) {
    doc["intra"] = {{"kind", std::string(to_string(intra_->kind))}, {"gbps", intra_->gbps}};
  }
  if (inter_gbps_) doc["inter"] = {{"gbps", *inter_gbps_}};
  doc["options"] = {{"efficiency", options_.efficiency},
                    {"shared_nic_fraction", options_.shared_nic_fraction}};
  return doc;
}

bool NetworkTopology::operator==(const NetworkTopology& other) const {
  return name_ == other.name_ && hosts_ == other.hosts_ && intra_ == other.intra_ &&
         inter_gbps_ == other.inter_gbps_ && options_ == other.options_;
}

namespace {

double positive_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    fail(ErrorCode::kInvalidArgument, std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

NetworkTopology load_topology(const json& doc) {
  try {
    if (!doc.is_object()) fail(ErrorCode::kInvalidArgument, "topology must be an object");
    if (!doc.contains("hosts") || !doc.at("hosts").is_array()) {
      fail(ErrorCode::kInvalidArgument, "topology needs a 'hosts' array");
    }
    std::vector<HostSpec> hosts;
    int next_gpu = 0;
    for (const auto& jh : doc.at("hosts")) {
      HostSpec h;
      h.host_id = jh.value("id", static_cast<int>(hosts.size()));
      const auto& gpus = jh.at("gpus");
      if (gpus.is_number_integer()) {
        int count = gpus.get<int>();
        if (count <= 0) fail(ErrorCode::kInvalidArgument, "gpu count must be positive");
        for (int i = 0; i < count; ++i) h.gpu_ids.push_back(next_gpu++);
      } else {
        h.gpu_ids = gpus.get<std::vector<int>>();
        for (int g : h.gpu_ids) next_gpu = std::max(next_gpu, g + 1);
      }
      h.host_gpu_gbps = positive_number(jh, "host_gpu_gbps");
      h.ssd_gpu_gbps = positive_number(jh, "ssd_gpu_gbps");
      if (jh.contains("nic_groups")) {
        h.nic_groups = jh.at("nic_groups").get<std::vector<std::vector<int>>>();
      }
      hosts.push_back(std::move(h));
    }
    std::optional<IntraFabric> intra;
    if (doc.contains("intra") && !doc.at("intra").is_null()) {
      const auto& ji = doc.at("intra");
      std::string kind = ji.at("kind").get<std::string>();
      if (kind != "none") intra = IntraFabric{parse_link_kind(kind), positive_number(ji, "gbps")};
    }
    std::optional<double> inter;
    if (doc.contains("inter") && !doc.at("inter").is_null()) {
      inter = positive_number(doc.at("inter"), "gbps");
    }
    TopologyOptions options;
    if (doc.contains("options")) {
      const auto& jo = doc.at("options");
      options.efficiency = jo.value("efficiency", options.efficiency);
      options.shared_nic_fraction = jo.value("shared_nic_fraction", options.shared_nic_fraction);
    }
    return NetworkTopology(doc.value("name", std::string("custom")), std::move(hosts), intra,
                           inter, options);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed topology: ") + e.what());
  }
}

NetworkTopology load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kNotFound, "cannot open topology '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, "malformed topology '" + path + "': " + e.what());
  }
  return load_topology(doc);
}

namespace {

struct PresetRow {
  const char* name;
  int hosts;
  int gpus_per_host;
  std::optional<IntraFabric> intra;
  double inter_gbps;
  double host_gpu_gbps;
  double ssd_gpu_gbps;
  int gpus_per_nic;
};

// Evaluation clusters plus the surveyed cloud instance types. For the cloud
// rows only network and local-SSD bandwidth per GPU and NVLink presence are
// surveyed values; host count, NVLink/PCIe speed and host-GPU bandwidth
// reuse the evaluation-cluster values.
const std::vector<PresetRow>& preset_rows() {
  static const std::vector<PresetRow> rows = {
      {"cluster-A", 4, 8, IntraFabric{LinkKind::kNvlink, 1600.0}, 100.0, 128.0, 10.0, 1},
      {"cluster-B", 2, 8, IntraFabric{LinkKind::kPcie, 256.0}, 100.0, 128.0, 10.0, 2},
      {"a2-ultragpu-8g", 2, 8, IntraFabric{LinkKind::kNvlink, 1600.0}, 12.5, 128.0, 2.58, 1},
      {"p4d.24xlarge", 2, 8, IntraFabric{LinkKind::kNvlink, 1600.0}, 100.0, 128.0, 2.31, 1},
      {"ml.hpcpni2.28xlarge", 2, 8, IntraFabric{LinkKind::kPcie, 256.0}, 100.0, 128.0, 4.0, 1},
      {"p4de.24xlarge", 2, 8, IntraFabric{LinkKind::kNvlink, 1600.0}, 100.0, 128.0, 2.31, 1},
      {"a3-highgpu-8g", 2, 8, IntraFabric{LinkKind::kNvlink, 1600.0}, 100.0, 128.0, 6.09, 1},
      {"a3-megagpu-8g", 2, 8, IntraFabric{LinkKind::kNvlink, 1600.0}, 200.0, 128.0, 6.09, 1},
      {"p5.48xlarge", 2, 8, IntraFabric{LinkKind::kNvlink, 1600.0}, 400.0, 128.0, 9.8, 1},
  };
  return rows;
}

NetworkTopology build_preset(const PresetRow& row) {
  std::vector<HostSpec> hosts;
  int gpu = 0;
  for (int h = 0; h < row.hosts; ++h) {
    HostSpec spec;
    spec.host_id = h;
    spec.host_gpu_gbps = row.host_gpu_gbps;
    spec.ssd_gpu_gbps = row.ssd_gpu_gbps;
    for (int i = 0; i < row.gpus_per_host; ++i) spec.gpu_ids.push_back(gpu++);
    for (size_t i = 0; i < spec.gpu_ids.size(); i += row.gpus_per_nic) {
      std::vector<int> group;
      for (size_t j = i; j < std::min(spec.gpu_ids.size(), i + row.gpus_per_nic); ++j) {
        group.push_back(spec.gpu_ids[j]);
      }
      spec.nic_groups.push_back(group);
    }
    hosts.push_back(std::move(spec));
  }
  return NetworkTopology(row.name, std::move(hosts), row.intra, row.inter_gbps);
}

}  // namespace

NetworkTopology load_preset(std::string_view name) {
  for (const auto& row : preset_rows()) {
    if (name == row.name) return build_preset(row);
  }
  fail(ErrorCode::kNotFound, "unknown topology preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& row : preset_rows()) names.emplace_back(row.name);
  return names;
}

NetworkTopology resolve_topology(const std::string& spec) {
  for (const auto& row : preset_rows()) {
    if (spec == row.name) return build_preset(row);
  }
  return load_topology_file(spec);
}

NetworkTopology split_hosts(const NetworkTopology& topo, int gpus_per_host) {
  if (gpus_per_host < 1) fail(ErrorCode::kInvalidArgument, "gpus_per_host must be >= 1");
  if (!topo.inter_gbps()) fail(ErrorCode::kInvalidArgument, "splitting hosts needs an inter-host fabric");
  std::vector<HostSpec> out;
  for (const auto& h : topo.hosts()) {
    HostSpec cur;
    for (const auto& group : h.nic_groups) {
      if (static_cast<int>(group.size()) > gpus_per_host ||
          gpus_per_host % static_cast<int>(group.size()) != 0) {
        fail(ErrorCode::kInvalidArgument, "logical hosts must align with NIC groups");
      }
      cur.nic_groups.push_back(group);
      cur.gpu_ids.insert(cur.gpu_ids.end(), group.begin(), group.end());
      if (static_cast<int>(cur.gpu_ids.size()) == gpus_per_host) {
        cur.host_id = static_cast<int>(out.size());
        cur.host_gpu_gbps = h.host_gpu_gbps;
        cur.ssd_gpu_gbps = h.ssd_gpu_gbps;
        out.push_back(std::move(cur));
        cur = HostSpec{};
      }
    }
    if (!cur.gpu_ids.empty()) fail(ErrorCode::kInvalidArgument, "host size is not a multiple of gpus_per_host");
  }
  std::optional<IntraFabric> intra;
  if (gpus_per_host > 1) intra = topo.intra();
  return NetworkTopology(topo.name() + "/" + std::to_string(gpus_per_host), std::move(out), intra,
                         topo.inter_gbps(), topo.options());
}

}  // namespace netscale

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

#include "netscale/planner.h"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "netscale/common.h"

namespace netscale {

using nlohmann::json;

namespace {

constexpr double kBwEps = 1e-9;

int lane_count(const Endpoint& a, const Endpoint& b) {
  return static_cast<int>(std::max<size_t>({a.gpus.size(), b.gpus.size(), 1}));
}

json endpoint_json(const Endpoint& e) {
  json j = {{"name", e.name()}, {"host", e.host}};
  if (e.is_instance()) j["gpus"] = e.gpus;
  return j;
}

struct QueueEntry {
  double gbps;
  uint64_t seq;
  size_t holder;
};

// Highest bandwidth first; earlier insertion wins ties.
struct QueueOrder {
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    if (a.gbps != b.gbps) return a.gbps < b.gbps;
    return a.seq > b.seq;
  }
};

}  // namespace

NodeId Endpoint::lane_node(int lane) const {
  switch (kind) {
    case Kind::kHostMemory:
      return NodeId::host_memory(host);
    case Kind::kSsd:
      return NodeId::ssd(host);
    case Kind::kInstance:
      break;
  }
  if (gpus.empty()) fail(ErrorCode::kInvalidArgument, "instance " + name() + " has no GPUs");
  return NodeId::gpu(gpus[static_cast<size_t>(lane) % gpus.size()]);
}

std::string Endpoint::name() const {
  switch (kind) {
    case Kind::kHostMemory:
      return "mem:" + std::to_string(host);
    case Kind::kSsd:
      return "ssd:" + std::to_string(host);
    case Kind::kInstance:
      break;
  }
  return "inst:" + std::to_string(id);
}

std::vector<Endpoint> ScalePlan::targets() const {
  std::vector<Endpoint> out;
  std::set<std::string> seen;
  for (const auto& e : edges) {
    if (seen.insert(e.to.name()).second) out.push_back(e.to);
  }
  for (const auto& [rep, siblings] : nvlink_fanout) {
    for (const auto& s : siblings) {
      if (seen.insert(s.name()).second) out.push_back(s);
    }
  }
  return out;
}

std::optional<size_t> ScalePlan::inbound_edge(const std::string& name) const {
  for (size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].to.name() == name) return i;
  }
  return std::nullopt;
}

std::vector<size_t> ScalePlan::path_to(const std::string& name) const {
  std::vector<size_t> path;
  std::string cur = name;
  while (auto idx = inbound_edge(cur)) {
    path.push_back(*idx);
    cur = edges[*idx].from.name();
    if (path.size() > edges.size()) fail(ErrorCode::kInvariant, "cycle in scale plan");
  }
  std::reverse(path.begin(), path.end());
  return path;
}

json ScalePlan::to_json() const {
  json j;
  j["edges"] = json::array();
  for (const auto& e : edges) {
    j["edges"].push_back({{"from", endpoint_json(e.from)},
                          {"to", endpoint_json(e.to)},
                          {"gbps", e.gbps},
                          {"kind", std::string(to_string(e.kind))}});
  }
  j["chains"] = json::array();
  for (const auto& chain : chains) {
    json names = json::array();
    names.push_back(edges[chain.front()].from.name());
    for (size_t idx : chain) names.push_back(edges[idx].to.name());
    j["chains"].push_back(names);
  }
  j["nvlink_fanout"] = json::object();
  for (const auto& [rep, siblings] : nvlink_fanout) {
    json list = json::array();
    for (const auto& s : siblings) list.push_back(endpoint_json(s));
    j["nvlink_fanout"][rep] = list;
  }
  return j;
}

double PlanEstimate::max_completion() const {
  double worst = 0.0;
  for (const auto& [name, t] : per_target_completion) worst = std::max(worst, t);
  return worst;
}

json PlanEstimate::to_json() const {
  json j;
  j["per_target_completion_s"] = per_target_completion;
  j["bottleneck_gbps"] = bottleneck_gbps;
  j["max_completion_s"] = max_completion();
  return j;
}

LinkCapFn unbounded_links() {
  return [](const Endpoint&, const Endpoint&) -> std::optional<double> {
    return kUnbounded;
  };
}

LinkCapFn topology_links(const NetworkTopology& topo) {
  return [&topo](const Endpoint& from, const Endpoint& to) -> std::optional<double> {
    double cap = kUnbounded;
    for (int lane = 0; lane < lane_count(from, to); ++lane) {
      const DirectedLink* link = topo.find_link(from.lane_node(lane), to.lane_node(lane));
      if (link == nullptr) return std::nullopt;
      cap = std::min(cap, link->gbps);
    }
    return cap;
  };
}

LinkKind edge_link_kind(const NetworkTopology& topo, const Endpoint& from,
                        const Endpoint& to) {
  const DirectedLink* link = topo.find_link(from.lane_node(0), to.lane_node(0));
  if (link == nullptr) {
    fail(ErrorCode::kUnreachable, "no link " + from.name() + " -> " + to.name());
  }
  return link->kind;
}

GroupedTargets group_targets(const std::vector<PlanTarget>& targets,
                             const NetworkTopology& topo) {
  GroupedTargets out;
  // domain -> member indices in input order
  std::map<int, std::vector<size_t>> domains;
  std::vector<std::optional<int>> domain_of(targets.size());
  for (size_t i = 0; i < targets.size(); ++i) {
    const Endpoint& e = targets[i].endpoint;
    if (!e.is_instance() || e.gpus.empty()) continue;
    std::optional<int> d = topo.nvlink_domain_of(e.gpus.front());
    bool whole = d.has_value() && std::all_of(e.gpus.begin(), e.gpus.end(), [&](int g) {
                   return topo.nvlink_domain_of(g) == d;
                 });
    if (whole) {
      domain_of[i] = d;
      domains[*d].push_back(i);
    }
  }
  std::map<int, size_t> rep_of;
  for (const auto& [d, members] : domains) {
    size_t best = members.front();
    for (size_t m : members) {
      if (targets[m].incast_gbps > targets[best].incast_gbps) best = m;
    }
    rep_of[d] = best;
  }
  for (size_t i = 0; i < targets.size(); ++i) {
    if (!domain_of[i]) {
      out.representatives.push_back(targets[i]);
      continue;
    }
    size_t rep = rep_of[*domain_of[i]];
    if (rep == i) {
      out.representatives.push_back(targets[i]);
    } else {
      out.fanout[targets[rep].endpoint.name()].push_back(targets[i].endpoint);
    }
  }
  return out;
}

std::vector<PlanSource> prune_sources(const std::vector<PlanSource>& sources,
                                      const FlowSet& flows,
                                      const std::vector<PlanSource>& fallback) {
  std::vector<PlanSource> kept;
  for (const auto& s : sources) {
    bool serving = false;
    int lanes = std::max<int>(1, static_cast<int>(s.endpoint.gpus.size()));
    for (int lane = 0; lane < lanes; ++lane) {
      serving = serving || flows.has_serving_out(s.endpoint.lane_node(lane));
    }
    if (!serving) kept.push_back(s);
  }
  if (!kept.empty()) return kept;
  return fallback.empty() ? sources : fallback;
}

ScalePlan build_chains(const std::vector<PlanSource>& sources,
                       const std::vector<PlanTarget>& targets,
                       const LinkCapFn& links) {
  if (sources.empty()) fail(ErrorCode::kInvalidArgument, "scale request has no sources");
  if (targets.empty()) fail(ErrorCode::kInvalidArgument, "scale request has no targets");

  std::vector<Endpoint> holders;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueOrder> queue;
  uint64_t seq = 0;
  for (const auto& s : sources) {
    holders.push_back(s.endpoint);
    if (s.outcast_gbps > kBwEps) queue.push({s.outcast_gbps, seq++, holders.size() - 1});
  }

  std::vector<size_t> order(targets.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return targets[a].incast_gbps > targets[b].incast_gbps;
  });

  ScalePlan plan;
  for (size_t ti : order) {
    const PlanTarget& t = targets[ti];
    std::vector<QueueEntry> skipped;
    std::optional<QueueEntry> chosen;
    double cap = 0.0;
    while (!queue.empty()) {
      QueueEntry top = queue.top();
      queue.pop();
      auto c = links(holders[top.holder], t.endpoint);
      if (c && *c > kBwEps) {
        chosen = top;
        cap = *c;
        break;
      }
      skipped.push_back(top);
    }
    for (const auto& e : skipped) queue.push(e);
    if (!chosen) fail(ErrorCode::kUnreachable, "no source can reach " + t.endpoint.name());
    double gbps = std::min({chosen->gbps, t.incast_gbps, cap});
    if (gbps <= kBwEps) {
      fail(ErrorCode::kUnreachable, "target " + t.endpoint.name() + " has no incast bandwidth");
    }
    double residual = chosen->gbps - gbps;
    if (residual > kBwEps) queue.push({residual, seq++, chosen->holder});
    holders.push_back(t.endpoint);
    double forward = std::min(gbps, t.outcast_gbps);
    if (forward > kBwEps) queue.push({forward, seq++, holders.size() - 1});
    plan.edges.push_back({holders[chosen->holder], t.endpoint, gbps, LinkKind::kRdma});
  }

  std::set<std::string> parents;
  for (const auto& e : plan.edges) parents.insert(e.from.name());
  for (const auto& e : plan.edges) {
    if (parents.count(e.to.name())) continue;
    plan.chains.push_back(plan.path_to(e.to.name()));
  }
  return plan;
}

ScalePlan generate_plan(const ScaleRequest& request, const NetworkTopology& topo,
                        const FlowSet& flows) {
  request.model.validate();
  GroupedTargets grouped = group_targets(request.targets, topo);
  auto sources = prune_sources(request.sources, flows, request.fallback_sources);
  ScalePlan plan = build_chains(sources, grouped.representatives, topology_links(topo));
  for (auto& e : plan.edges) e.kind = edge_link_kind(topo, e.from, e.to);
  plan.nvlink_fanout = std::move(grouped.fanout);
  if (topo.intra() && topo.intra()->kind == LinkKind::kNvlink) {
    plan.nvlink_gbps = topo.intra()->gbps;
  }
  return plan;
}

ScaleRequest make_scale_request(const ModelSpec& model, const std::vector<Endpoint>& sources,
                                const std::vector<InstanceRef>& targets,
                                const NetworkTopology& topo, const FlowSet& flows) {
  ScaleRequest req;
  req.model = model;
  auto per_lane = [&](const Endpoint& e, bool out) {
    if (!e.is_instance()) {
      NodeId node = e.lane_node(0);
      double bw = out ? outcast_bandwidth(topo, node, flows)
                      : incast_bandwidth(topo, node, flows);
      return bw / model.tp_degree;
    }
    double bw = kUnbounded;
    for (int g : e.gpus) {
      bw = std::min(bw, out ? outcast_bandwidth(topo, NodeId::gpu(g), flows)
                            : incast_bandwidth(topo, NodeId::gpu(g), flows));
    }
    return bw;
  };
  for (const auto& e : sources) {
    PlanSource s{e, per_lane(e, true)};
    req.sources.push_back(s);
    if (!e.is_instance()) req.fallback_sources.push_back(s);
  }
  for (const auto& inst : targets) {
    Endpoint e = Endpoint::instance(inst);
    req.targets.push_back({e, per_lane(e, false), per_lane(e, true)});
  }
  return req;
}

ScaleRequest make_scale_request(const ModelSpec& model, const ParameterPool& pool,
                                const std::vector<InstanceRef>& targets,
                                const NetworkTopology& topo, const FlowSet& flows) {
  std::vector<Endpoint> sources;
  for (const auto& ref : pool.sources_for(model.name, topo, flows)) {
    sources.push_back(ref.is_host_memory()
                          ? Endpoint::host_memory(ref.host)
                          : Endpoint{Endpoint::Kind::kInstance, ref.instance, ref.host, ref.gpus});
  }
  return make_scale_request(model, sources, targets, topo, flows);
}

PlanEstimate estimate_completion(const ScalePlan& plan, const ModelSpec& model,
                                 double efficiency) {
  PlanEstimate est;
  for (const auto& e : plan.edges) {
    auto path = plan.path_to(e.to.name());
    double b = kUnbounded;
    for (size_t idx : path) b = std::min(b, plan.edges[idx].gbps);
    double bytes = model.lane_bytes() + (path.size() - 1) * model.lane_layer_bytes();
    est.per_target_completion[e.to.name()] = transfer_seconds(bytes, b, efficiency);
  }
  for (const auto& [rep, siblings] : plan.nvlink_fanout) {
    if (siblings.empty()) continue;
    if (plan.nvlink_gbps <= 0.0) fail(ErrorCode::kInvalidArgument, "fanout without NVLink bandwidth");
    auto it = est.per_target_completion.find(rep);
    if (it == est.per_target_completion.end()) {
      fail(ErrorCode::kInvariant, "fanout representative " + rep + " not in plan");
    }
    double t = it->second +
               transfer_seconds(model.lane_bytes(), plan.nvlink_gbps, efficiency);
    for (const auto& s : siblings) est.per_target_completion[s.name()] = t;
  }
  for (const auto& chain : plan.chains) {
    double b = kUnbounded;
    for (size_t idx : chain) b = std::min(b, plan.edges[idx].gbps);
    est.bottleneck_gbps.push_back(b * efficiency);
  }
  return est;
}

std::vector<double> layer_arrival_seconds(const ScalePlan& plan, const ModelSpec& model,
                                          const std::string& name, double efficiency) {
  std::string member = name;
  bool fanout = false;
  if (!plan.inbound_edge(name)) {
    for (const auto& [rep, siblings] : plan.nvlink_fanout) {
      for (const auto& s : siblings) {
        if (s.name() == name) {
          member = rep;
          fanout = true;
        }
      }
    }
    if (!fanout) fail(ErrorCode::kNotFound, name + " is not a target of the plan");
  }
  std::vector<double> arrival(model.num_layers, 0.0);
  auto stage = [&](double gbps) {
    double per_layer = transfer_seconds(model.lane_layer_bytes(), gbps, efficiency);
    double prev = 0.0;
    for (auto& a : arrival) {
      a = std::max(prev, a) + per_layer;
      prev = a;
    }
  };
  for (size_t idx : plan.path_to(member)) stage(plan.edges[idx].gbps);
  if (fanout) stage(plan.nvlink_gbps);
  return arrival;
}

bool plan_is_interference_free(const ScalePlan& plan, const NetworkTopology& topo,
                               const FlowSet& flows) {
  std::map<NodeId, double> out;
  std::map<NodeId, double> in;
  for (const auto& e : plan.edges) {
    for (int lane = 0; lane < lane_count(e.from, e.to); ++lane) {
      NodeId src = e.from.lane_node(lane);
      NodeId dst = e.to.lane_node(lane);
      if (flows.has_serving_out(src) || flows.has_serving_in(dst)) return false;
      bool same_host = topo.host_of(src) == topo.host_of(dst);
      if (!same_host || src.kind != NodeKind::kGpu) out[src] += e.gbps;
      if (!same_host || dst.kind != NodeKind::kGpu) in[dst] += e.gbps;
    }
  }
  for (const auto& [node, used] : out) {
    if (used > outcast_bandwidth(topo, node, flows) + kBwEps) return false;
  }
  for (const auto& [node, used] : in) {
    if (used > incast_bandwidth(topo, node, flows) + kBwEps) return false;
  }
  return true;
}

double oracle_max_completion(const std::vector<PlanSource>& sources,
                             const std::vector<PlanTarget>& targets,
                             const ModelSpec& model, const LinkCapFn& links,
                             double efficiency) {
  const size_t m = sources.size();
  const size_t n = targets.size();
  if (m == 0 || n == 0) fail(ErrorCode::kInvalidArgument, "oracle needs sources and targets");
  const size_t choices = m + n;

  auto endpoint = [&](size_t node) -> const Endpoint& {
    return node < m ? sources[node].endpoint : targets[node - m].endpoint;
  };
  // cap[p][t]: link capacity from node p into target t (0 when unreachable).
  std::vector<std::vector<double>> cap(choices, std::vector<double>(n, 0.0));
  for (size_t p = 0; p < choices; ++p) {
    for (size_t t = 0; t < n; ++t) {
      if (p == m + t) continue;
      auto c = links(endpoint(p), targets[t].endpoint);
      cap[p][t] = c ? *c : 0.0;
    }
  }

  // Work in bytes-over-gbps units; convert at the end.
  double best = kUnbounded;
  std::vector<size_t> parent(n, 0);
  std::vector<int> depth(n);
  std::vector<double> req(n);
  std::vector<double> child_sum(choices);
  std::vector<size_t> by_depth(n);
  while (true) {
    bool ok = true;
    for (size_t t = 0; t < n && ok; ++t) {
      int d = 1;
      size_t cur = parent[t];
      while (cur >= m && d <= static_cast<int>(n)) {
        cur = parent[cur - m];
        ++d;
      }
      if (d > static_cast<int>(n)) ok = false;
      depth[t] = d;
      if (cap[parent[t]][t] <= 0.0) ok = false;
    }
    if (ok) {
      for (size_t t = 0; t < n; ++t) by_depth[t] = t;
      std::sort(by_depth.begin(), by_depth.end(),
                [&](size_t a, size_t b) { return depth[a] > depth[b]; });
      std::fill(child_sum.begin(), child_sum.end(), 0.0);
      std::vector<double> deepest(n, 0.0);
      for (size_t t = 0; t < n; ++t) {
        deepest[t] = model.lane_bytes() + (depth[t] - 1) * model.lane_layer_bytes();
      }
      double worst = 0.0;
      for (size_t t : by_depth) {
        // Subtrees are finished: children have greater depth.
        req[t] = std::max(deepest[t], child_sum[m + t]);
        if (child_sum[m + t] > 0.0) {
          worst = std::max(worst, child_sum[m + t] / targets[t].outcast_gbps);
        }
        double in = std::min(targets[t].incast_gbps, cap[parent[t]][t]);
        worst = std::max(worst, req[t] / in);
        child_sum[parent[t]] += req[t];
        if (parent[t] >= m) {
          deepest[parent[t] - m] = std::max(deepest[parent[t] - m], deepest[t]);
        }
      }
      for (size_t s = 0; s < m; ++s) {
        if (child_sum[s] > 0.0) worst = std::max(worst, child_sum[s] / sources[s].outcast_gbps);
      }
      best = std::min(best, worst);
    }
    size_t i = 0;
    while (i < n) {
      if (++parent[i] < choices) break;
      parent[i] = 0;
      ++i;
    }
    if (i == n) break;
  }
  if (!std::isfinite(best)) return best;
  return best / (efficiency * kBytesPerSecPerGbps);
}

}  // namespace netscale

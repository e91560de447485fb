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

#include "netscale/live_session.h"

#include <algorithm>
#include <set>

#include "netscale/common.h"

namespace netscale {

std::string_view to_string(LivePhase phase) {
  switch (phase) {
    case LivePhase::kIdle:
      return "idle";
    case LivePhase::kLoading:
      return "loading";
    case LivePhase::kPartialServe:
      return "partial-serve";
    case LivePhase::kFullServe:
      return "full-serve";
  }
  return "?";
}

LiveScaleSession LiveScaleSession::start(const InstanceRef& source, const InstanceRef& target,
                                         Role role, int num_layers,
                                         std::deque<int64_t> queued) {
  if (role == Role::kColocated) {
    fail(ErrorCode::kUnsupported, "live scaling of colocated instances is not supported");
  }
  if (num_layers < 1) fail(ErrorCode::kInvalidArgument, "num_layers must be >= 1");
  LiveScaleSession s;
  s.source = source;
  s.target = target;
  s.role = role;
  s.num_layers = num_layers;
  s.source_queue = std::move(queued);
  return s;
}

LiveScaleSession run_transition_protocol(LiveScaleSession s, const LiveEvent& event) {
  auto out_of_order = [&](const std::string& what) {
    fail(ErrorCode::kOutOfOrder,
         what + " in phase " + std::string(to_string(s.phase)));
  };
  switch (event.kind) {
    case LiveEvent::Kind::kLoadStarted:
      if (s.phase != LivePhase::kIdle) out_of_order("LoadStarted");
      s.fifo_queue.insert(s.fifo_queue.end(), s.source_queue.begin(), s.source_queue.end());
      s.source_queue.clear();
      s.phase = LivePhase::kLoading;
      break;
    case LiveEvent::Kind::kLayerLoaded:
      if (s.phase != LivePhase::kLoading && s.phase != LivePhase::kPartialServe) {
        out_of_order("LayerLoaded");
      }
      if (event.layer != s.loaded_layers + 1 || event.layer > s.num_layers) {
        fail(ErrorCode::kOutOfOrder, "layer " + std::to_string(event.layer) +
                                         " loaded after " + std::to_string(s.loaded_layers));
      }
      s.loaded_layers = event.layer;
      s.phase = LivePhase::kPartialServe;
      break;
    case LiveEvent::Kind::kLoadCompleted: {
      if (s.phase != LivePhase::kPartialServe || s.loaded_layers != s.num_layers) {
        out_of_order("LoadCompleted");
      }
      size_t i = 0;
      for (int64_t id : s.pending_queue) s.fifo_queue.push_back(id);
      s.pending_queue.clear();
      for (int64_t id : s.fifo_queue) {
        (i++ % 2 == 0 ? s.source_queue : s.target_queue).push_back(id);
      }
      s.fifo_queue.clear();
      s.phase = LivePhase::kFullServe;
      break;
    }
    case LiveEvent::Kind::kRequestArrival:
      switch (s.phase) {
        case LivePhase::kIdle:
          s.source_queue.push_back(event.request);
          break;
        case LivePhase::kLoading:
        case LivePhase::kPartialServe:
          s.fifo_queue.push_back(event.request);
          break;
        case LivePhase::kFullServe:
          (s.target_queue.size() < s.source_queue.size() ? s.target_queue : s.source_queue)
              .push_back(event.request);
          break;
      }
      break;
  }
  return s;
}

std::vector<LivePair> select_live_pairs(const ScalePlan& plan, const PlanEstimate& estimate,
                                        const std::vector<OverloadedInstance>& overloaded) {
  // Candidates: chain members ordered by (is tail, depth) descending, then
  // chain order.
  struct Candidate {
    Endpoint endpoint;
    size_t depth;
    bool tail;
    size_t order;
  };
  std::vector<Candidate> candidates;
  std::set<std::string> seen;
  size_t order = 0;
  for (const auto& chain : plan.chains) {
    for (size_t pos = chain.size(); pos-- > 0;) {
      const Endpoint& e = plan.edges[chain[pos]].to;
      if (!seen.insert(e.name()).second) continue;
      candidates.push_back({e, pos + 1, pos + 1 == chain.size(), order++});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.tail != b.tail) return a.tail;
                     return a.depth > b.depth;
                   });
  std::vector<LivePair> pairs;
  size_t next = 0;
  for (const auto& o : overloaded) {
    if (next >= candidates.size()) break;
    const Candidate& c = candidates[next];
    auto it = estimate.per_target_completion.find(c.endpoint.name());
    double load = it == estimate.per_target_completion.end() ? 0.0 : it->second;
    if (load <= o.slo_headroom_s) continue;
    pairs.push_back({o.instance, c.endpoint, load});
    ++next;
  }
  return pairs;
}

Mutation mutate_prefill_to_decode(const ServingInstance& instance, int compensation) {
  if (instance.role != Role::kPrefill) {
    fail(ErrorCode::kInvalidArgument, "only prefill instances can become decode instances");
  }
  if (instance.scaling || instance.loaded_layers < instance.num_layers) {
    fail(ErrorCode::kInvalidArgument, "instance is still loading parameters");
  }
  if (compensation < 0) fail(ErrorCode::kInvalidArgument, "negative compensation");
  Mutation m;
  m.instance = instance;
  m.instance.role = Role::kDecode;
  m.compensation_instances = compensation;
  m.model = instance.model;
  return m;
}

ServingInstance mutate_decode_to_prefill(const ServingInstance& instance) {
  if (instance.role != Role::kDecode) {
    fail(ErrorCode::kInvalidArgument, "only decode instances can become prefill instances");
  }
  if (instance.scaling || instance.loaded_layers < instance.num_layers) {
    fail(ErrorCode::kInvalidArgument, "instance is still loading parameters");
  }
  ServingInstance out = instance;
  out.role = Role::kPrefill;
  return out;
}

}  // namespace netscale

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

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "netscale/instance.h"
#include "netscale/planner.h"

namespace netscale {

enum class LivePhase { kIdle, kLoading, kPartialServe, kFullServe };

std::string_view to_string(LivePhase phase);

struct LiveEvent {
  enum class Kind { kLoadStarted, kLayerLoaded, kLoadCompleted, kRequestArrival };
  Kind kind = Kind::kLoadStarted;
  int layer = 0;             // kLayerLoaded
  int64_t request = -1;      // kRequestArrival

  static LiveEvent load_started() { return {Kind::kLoadStarted, 0, -1}; }
  static LiveEvent layer_loaded(int k) { return {Kind::kLayerLoaded, k, -1}; }
  static LiveEvent load_completed() { return {Kind::kLoadCompleted, 0, -1}; }
  static LiveEvent arrival(int64_t id) { return {Kind::kRequestArrival, 0, id}; }
};

// Pairing of an overloaded instance with a partially loaded new one.
struct LiveScaleSession {
  InstanceRef source;
  InstanceRef target;
  Role role = Role::kPrefill;
  int num_layers = 1;
  LivePhase phase = LivePhase::kIdle;
  int loaded_layers = 0;
  // Source-only queue before loading starts; afterwards the source keeps
  // only in-flight work and shares `fifo_queue` with the target.
  std::deque<int64_t> source_queue;
  std::deque<int64_t> fifo_queue;
  std::deque<int64_t> pending_queue;
  // Filled once the shared queue is split at full load.
  std::deque<int64_t> target_queue;

  // Throws kUnsupported for colocated instances.
  static LiveScaleSession start(const InstanceRef& source, const InstanceRef& target,
                                Role role, int num_layers,
                                std::deque<int64_t> queued = {});
};

// Applies one protocol step. Throws Error(kOutOfOrder) on events that do
// not fit the current phase.
LiveScaleSession run_transition_protocol(LiveScaleSession session, const LiveEvent& event);

struct OverloadedInstance {
  InstanceRef instance;
  // Time the instance can wait for a fully loaded replacement before its
  // requests miss the SLO.
  double slo_headroom_s = 0.0;
};

struct LivePair {
  InstanceRef source;
  Endpoint target;
  double load_time_s = 0.0;
};

// Pairs each overloaded instance whose stop-the-world wait would exceed its
// headroom with the deepest unpaired chain member, chain tails first.
std::vector<LivePair> select_live_pairs(const ScalePlan& plan, const PlanEstimate& estimate,
                                        const std::vector<OverloadedInstance>& overloaded);

struct ServingInstance {
  InstanceRef ref;
  std::string model;
  Role role = Role::kPrefill;
  int num_layers = 1;
  int loaded_layers = 1;
  bool scaling = false;
};

struct Mutation {
  ServingInstance instance;
  // Prefill instances to scale in compensation.
  int compensation_instances = 0;
  std::string model;
};

// Flips a fully loaded prefill instance to decode with no parameter traffic.
Mutation mutate_prefill_to_decode(const ServingInstance& instance, int compensation = 1);
ServingInstance mutate_decode_to_prefill(const ServingInstance& instance);

}  // namespace netscale

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

#include "netscale/simulator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <queue>
#include <set>

#include "netscale/flow_set.h"
#include "netscale/live_session.h"
#include "netscale/param_pool.h"
#include "netscale/planner.h"

namespace netscale {

using nlohmann::json;

void SimConfig::validate() const {
  if (!(control_interval_ms > 0.0)) fail(ErrorCode::kInvalidArgument, "control interval must be > 0");
  if (!(window_s > 0.0)) fail(ErrorCode::kInvalidArgument, "window must be > 0");
  if (!(scale_down_timeout_s > 0.0)) fail(ErrorCode::kInvalidArgument, "timeout must be > 0");
  if (!(upper_fraction > 0.0) || !(lower_fraction >= 0.0) || lower_fraction >= upper_fraction) {
    fail(ErrorCode::kInvalidArgument, "need 0 <= lower_fraction < upper_fraction");
  }
  if (batch_token_budget < 1) fail(ErrorCode::kInvalidArgument, "batch budget must be >= 1");
  if (scale_command_ms < 0.0) fail(ErrorCode::kInvalidArgument, "scale command latency must be >= 0");
  if (!(kv_flow_gbps > 0.0)) fail(ErrorCode::kInvalidArgument, "kv flow rate must be > 0");
  if (decode_max_running < 1) fail(ErrorCode::kInvalidArgument, "decode_max_running must be >= 1");
  if (initial_prefill < 1 || initial_decode < 0) {
    fail(ErrorCode::kInvalidArgument, "need >= 1 initial prefill and >= 0 decode instances");
  }
  if (max_planned_batches < 1) fail(ErrorCode::kInvalidArgument, "max_planned_batches must be >= 1");
  if (load_time_override_s && *load_time_override_s < 0.0) {
    fail(ErrorCode::kInvalidArgument, "load time override must be >= 0");
  }
  if (prefill_policy) prefill_policy->validate();
}

json SimConfig::to_json() const {
  json j = {{"strategy", std::string(to_string(strategy))},
            {"seed", seed},
            {"control_interval_ms", control_interval_ms},
            {"window_s", window_s},
            {"scale_down_timeout_s", scale_down_timeout_s},
            {"upper_fraction", upper_fraction},
            {"lower_fraction", lower_fraction},
            {"batch_token_budget", batch_token_budget},
            {"scale_command_ms", scale_command_ms},
            {"kv_flow_gbps", kv_flow_gbps},
            {"decode_max_running", decode_max_running},
            {"initial_prefill", initial_prefill},
            {"initial_decode", initial_decode},
            {"max_planned_batches", max_planned_batches},
            {"cache_slots_per_host", cache_slots_per_host},
            {"keep_alive_s", keep_alive_s},
            {"first_layer_offset", pipeline.first_layer_offset},
            {"c3_clock", std::string(to_string(pipeline.clock))},
            {"drain_limit_s", drain_limit_s}};
  if (load_time_override_s) j["load_time_override_s"] = *load_time_override_s;
  if (prefill_policy) j["prefill_policy"] = prefill_policy->to_json();
  return j;
}

SimConfig SimConfig::from_json(const json& j) {
  SimConfig c;
  try {
    c.strategy = parse_strategy(j.value("strategy", std::string(to_string(c.strategy))));
    c.seed = j.value("seed", c.seed);
    c.control_interval_ms = j.value("control_interval_ms", c.control_interval_ms);
    c.window_s = j.value("window_s", c.window_s);
    c.scale_down_timeout_s = j.value("scale_down_timeout_s", c.scale_down_timeout_s);
    c.upper_fraction = j.value("upper_fraction", c.upper_fraction);
    c.lower_fraction = j.value("lower_fraction", c.lower_fraction);
    c.batch_token_budget = j.value("batch_token_budget", c.batch_token_budget);
    c.scale_command_ms = j.value("scale_command_ms", c.scale_command_ms);
    c.kv_flow_gbps = j.value("kv_flow_gbps", c.kv_flow_gbps);
    c.decode_max_running = j.value("decode_max_running", c.decode_max_running);
    c.initial_prefill = j.value("initial_prefill", c.initial_prefill);
    c.initial_decode = j.value("initial_decode", c.initial_decode);
    c.max_planned_batches = j.value("max_planned_batches", c.max_planned_batches);
    c.cache_slots_per_host = j.value("cache_slots_per_host", c.cache_slots_per_host);
    c.keep_alive_s = j.value("keep_alive_s", c.keep_alive_s);
    c.pipeline.first_layer_offset = j.value("first_layer_offset", c.pipeline.first_layer_offset);
    c.pipeline.clock = parse_c3_clock(j.value("c3_clock", std::string("source")));
    c.drain_limit_s = j.value("drain_limit_s", c.drain_limit_s);
    if (j.contains("load_time_override_s")) {
      c.load_time_override_s = j.at("load_time_override_s").get<double>();
    }
    if (j.contains("prefill_policy")) c.prefill_policy = ScalePolicy::from_json(j.at("prefill_policy"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("bad simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

CapacityProfile profile_capacity(const ModelSpec& model, const std::vector<Request>& trace,
                                 const SimConfig& config) {
  std::vector<int> prompts;
  for (const auto& r : trace) {
    if (r.model.empty() || r.model == model.name) prompts.push_back(r.prompt_tokens);
  }
  if (prompts.empty()) prompts.push_back(config.batch_token_budget);
  // Saturated replay: one instance drains a backlog of the trace's prompts.
  const size_t kBatches = 256;
  size_t next = 0;
  double tokens = 0.0;
  double ms = 0.0;
  for (size_t b = 0; b < kBatches; ++b) {
    double batch = 0.0;
    while (true) {
      int p = prompts[next % prompts.size()];
      if (batch > 0.0 && batch + p > config.batch_token_budget) break;
      batch += p;
      ++next;
    }
    tokens += batch;
    ms += model.prefill_ms(batch);
  }
  CapacityProfile cap;
  cap.prefill_tokens_per_s = tokens / ms * 1000.0;
  int n = config.decode_max_running;
  if (model.tbt_slo_ms > 0.0) {
    while (n > 1 && model.decode_ms(n) > 0.5 * model.tbt_slo_ms) --n;
  }
  cap.decode_sequences = n;
  cap.decode_tokens_per_s = n * 1000.0 / model.decode_ms(n);
  return cap;
}

json SimResult::summary() const {
  json events = json::array();
  for (const auto& e : metrics.scale_events) events.push_back(e.to_json());
  double mean_ttft = 0.0;
  for (double t : metrics.ttft_ms) mean_ttft += t;
  if (!metrics.ttft_ms.empty()) mean_ttft /= metrics.ttft_ms.size();
  int64_t lookups = cache_hits + cache_misses;
  return {{"strategy", std::string(to_string(strategy))},
          {"requests", {{"arrived", arrived}, {"completed", completed}, {"rejected", rejected}}},
          {"ttft_ms", {{"p50", ttft_p50()}, {"p99", ttft_p99()}, {"mean", mean_ttft}}},
          {"tbt_ms", {{"p50", percentile(metrics.tbt_ms, 50)}, {"p99", tbt_p99()}}},
          {"slo_attainment", metrics.slo_attainment},
          {"gpu_utilization", gpu_utilization},
          {"gpu_seconds", gpu_seconds},
          {"cache",
           {{"hits", cache_hits},
            {"misses", cache_misses},
            {"miss_rate", lookups ? static_cast<double>(cache_misses) / lookups : 0.0},
            {"max_copies", max_cache_copies},
            {"max_model_host_copies", max_model_host_copies}}},
          {"min_model_sources", min_model_sources},
          {"causality_checks", causality_checks},
          {"scale_events", events}};
}

std::string SimResult::timeline_csv() const {
  std::string out = "time_ms,throughput_tokens,gpus_active,cache_copies\n";
  char line[128];
  for (const auto& row : metrics.timeline) {
    std::snprintf(line, sizeof(line), "%.1f,%.0f,%d,%d\n", row.time_ms, row.throughput_tokens,
                  row.gpus_active, row.cache_copies);
    out += line;
  }
  return out;
}

namespace {

// Lower value runs first among events at the same time.
enum class EventKind : int {
  kLayerLoaded = 0,
  kTransferDone,
  kKvDone,
  kPrefillDone,
  kPairBatchDone,
  kInstanceFree,
  kPairDispatch,
  kDecodeStep,
  kArrival,
  kControlTick,
};

struct Event {
  SimTime time;
  EventKind kind;
  uint64_t seq;
  int64_t a;
  int64_t b;
};

struct EventLater {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    if (x.kind != y.kind) return x.kind > y.kind;
    return x.seq > y.seq;
  }
};

enum class InstState { kLoading, kServing, kRetired };

struct Inst {
  int id = 0;
  int model = 0;
  Role role = Role::kPrefill;
  std::vector<int> gpus;
  int host = 0;
  InstState state = InstState::kLoading;
  SimTime started_at = 0;
  int loaded_layers = 0;
  std::vector<SimTime> layer_ready;

  // prefill
  std::deque<int64_t> queue;
  int64_t queued_tokens = 0;
  int64_t inflight_tokens = 0;
  bool busy = false;
  SimTime busy_until = 0;

  // decode
  std::vector<int64_t> running;
  std::deque<int64_t> waiting;
  int incoming = 0;
  bool stepping = false;

  int pair = -1;
  int relays = 0;
  std::vector<Flow> scale_flows;
  std::vector<int> relay_sources;

  InstanceRef ref() const { return {id, host, gpus}; }
};

struct Pair {
  int source = 0;
  int target = 0;
  int model = 0;
  LiveScaleSession session;
  PipelineConfig config;
  int planned_index = 0;
  SimTime target_free = 0;
  SimTime source_free = 0;
  SimTime next_dispatch = 0;
  int64_t fifo_tokens = 0;
  bool dispatch_pending = false;
  bool active = true;
};

struct ReqState {
  int model = 0;
  int generated = 0;
  bool done = false;
};

struct ModelState {
  ModelSpec spec;
  Slo slo;
  CapacityProfile cap;
  ScalePolicy prefill_policy;
  ScalePolicy decode_policy;
  std::deque<int64_t> prefill_backlog;
  std::deque<int64_t> decode_backlog;
  std::deque<std::pair<SimTime, int64_t>> window;
  int64_t window_tokens = 0;
  std::vector<LoadSample> prefill_history;
  std::vector<LoadSample> decode_history;
};

CachePolicy cache_policy_for(Strategy s) {
  switch (s) {
    case Strategy::kSllm:
      return CachePolicy::kKeepAlive;
    case Strategy::kAllCache:
      return CachePolicy::kAllHosts;
    default:
      return CachePolicy::kOneCopy;
  }
}

bool is_blitz(Strategy s) { return s == Strategy::kBlitzLive || s == Strategy::kBlitzStop; }

class Simulation {
 public:
  Simulation(const NetworkTopology& topo, const std::vector<ModelSpec>& models,
             const std::vector<Request>& trace, const SimConfig& config)
      : topo_(topo), trace_(trace), config_(config) {
    config_.validate();
    if (models.empty()) fail(ErrorCode::kInvalidArgument, "no models to simulate");
    for (size_t i = 0; i < trace_.size(); ++i) {
      const Request& r = trace_[i];
      if (r.prompt_tokens < 1 || r.output_tokens < 1) {
        fail(ErrorCode::kInvalidArgument, "request " + std::to_string(r.id) + " has no tokens");
      }
      if (r.arrival_us < 0 || (i > 0 && r.arrival_us < trace_[i - 1].arrival_us)) {
        fail(ErrorCode::kInvalidArgument, "trace is not sorted by arrival");
      }
    }
    for (const auto& m : models) {
      m.validate();
      ModelState ms;
      ms.spec = m;
      ms.slo = {m.prefill_slo_ms, m.tbt_slo_ms};
      ms.cap = profile_capacity(m, trace_, config_);
      ms.prefill_policy = {config_.upper_fraction * ms.cap.prefill_tokens_per_s,
                           config_.lower_fraction * ms.cap.prefill_tokens_per_s,
                           config_.scale_down_timeout_s, config_.strategy};
      if (config_.prefill_policy) {
        ms.prefill_policy = *config_.prefill_policy;
        ms.prefill_policy.strategy = config_.strategy;
      }
      ms.decode_policy = {config_.upper_fraction * ms.cap.decode_tokens_per_s,
                          config_.lower_fraction * ms.cap.decode_tokens_per_s,
                          config_.scale_down_timeout_s, config_.strategy};
      model_index_[m.name] = static_cast<int>(models_.size());
      models_.push_back(std::move(ms));
    }
    reqs_.resize(trace_.size());
    for (size_t i = 0; i < trace_.size(); ++i) {
      const std::string& name = trace_[i].model;
      if (name.empty()) continue;
      auto it = model_index_.find(name);
      if (it == model_index_.end()) {
        fail(ErrorCode::kInvalidArgument, "trace references unknown model '" + name + "'");
      }
      reqs_[i].model = it->second;
    }
    records_.resize(trace_.size());
    for (size_t i = 0; i < trace_.size(); ++i) {
      records_[i].id = trace_[i].id;
      records_[i].model = models_[reqs_[i].model].spec.name;
      records_[i].arrival_us = trace_[i].arrival_us;
      records_[i].prompt_tokens = trace_[i].prompt_tokens;
      records_[i].output_tokens = trace_[i].output_tokens;
    }
    for (int g : topo_.all_gpus()) free_gpus_.insert(g);
    efficiency_ = topo_.options().efficiency;
    interval_us_ = ms_to_us(config_.control_interval_ms);
  }

  SimResult run() {
    std::vector<ModelSpec> specs;
    for (const auto& m : models_) specs.push_back(m.spec);
    PoolOptions po;
    po.policy = cache_policy_for(config_.strategy);
    po.slots_per_host = config_.cache_slots_per_host;
    po.keep_alive_us = sec_to_us(config_.keep_alive_s);
    pool_ = ParameterPool::init(specs, topo_, po);

    for (int m = 0; m < static_cast<int>(models_.size()); ++m) {
      for (int k = 0; k < config_.initial_prefill; ++k) deploy_initial(m, Role::kPrefill);
      for (int k = 0; k < config_.initial_decode; ++k) deploy_initial(m, Role::kDecode);
    }
    rebuild_kv_flows();

    for (size_t i = 0; i < trace_.size(); ++i) {
      push(trace_[i].arrival_us, EventKind::kArrival, static_cast<int64_t>(i));
    }
    if (!trace_.empty()) push(interval_us_, EventKind::kControlTick);
    result_.min_model_sources = min_sources();

    while (!events_.empty()) {
      Event e = events_.top();
      events_.pop();
      now_ = e.time;
      dispatch(e);
      if (stopped_) break;
    }
    return finish();
  }

 private:
  void push(SimTime t, EventKind kind, int64_t a = 0, int64_t b = 0) {
    events_.push({t, kind, seq_++, a, b});
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::kArrival:
        on_arrival(e.a);
        break;
      case EventKind::kPrefillDone:
        on_prefill_done(static_cast<int>(e.a), e.b);
        break;
      case EventKind::kPairBatchDone:
        deliver_first_tokens(take_batch(e.b));
        break;
      case EventKind::kInstanceFree:
        on_instance_free(static_cast<int>(e.a));
        break;
      case EventKind::kPairDispatch:
        on_pair_dispatch(static_cast<int>(e.a));
        break;
      case EventKind::kKvDone:
        on_kv_done(e.a, static_cast<int>(e.b));
        break;
      case EventKind::kDecodeStep:
        on_decode_step(static_cast<int>(e.a));
        break;
      case EventKind::kLayerLoaded:
        on_layer_loaded(static_cast<int>(e.a), static_cast<int>(e.b));
        break;
      case EventKind::kTransferDone:
        on_load_done(static_cast<int>(e.a));
        break;
      case EventKind::kControlTick:
        on_control_tick();
        break;
    }
  }

  // ---- placement ----

  std::vector<int> pick_gpus(int model) {
    const int tp = models_[model].spec.tp_degree;
    std::map<int, std::vector<int>> free_by_host;
    for (int g : free_gpus_) free_by_host[topo_.host_of(NodeId::gpu(g))].push_back(g);
    int best_host = -1;
    auto better = [&](int h, int cur) {
      if (cur < 0) return true;
      size_t fh = free_by_host[h].size();
      size_t fc = free_by_host[cur].size();
      if (config_.strategy == Strategy::kSllm) {
        bool hh = pool_.cache_hit(models_[model].spec.name, h, now_);
        bool hc = pool_.cache_hit(models_[model].spec.name, cur, now_);
        if (hh != hc) return hh;
      }
      if (is_blitz(config_.strategy)) return fh > fc;
      return false;
    };
    for (auto& [h, gpus] : free_by_host) {
      if (static_cast<int>(gpus.size()) < tp) continue;
      if (better(h, best_host)) best_host = h;
    }
    if (best_host < 0) return {};
    std::vector<int> cands = free_by_host[best_host];
    if (is_blitz(config_.strategy)) {
      // Prefer GPUs whose NIC siblings are idle.
      auto shared = [&](int g) {
        int nic = topo_.nic_of(g);
        int busy = 0;
        for (int s : topo_.nic_members(nic)) busy += (s != g && !free_gpus_.count(s)) ? 1 : 0;
        return busy;
      };
      std::stable_sort(cands.begin(), cands.end(),
                       [&](int x, int y) { return shared(x) < shared(y); });
    }
    cands.resize(tp);
    std::sort(cands.begin(), cands.end());
    return cands;
  }

  int new_instance(int model, Role role, const std::vector<int>& gpus) {
    Inst inst;
    inst.id = static_cast<int>(insts_.size());
    inst.model = model;
    inst.role = role;
    inst.gpus = gpus;
    inst.host = topo_.host_of(NodeId::gpu(gpus.front()));
    inst.started_at = now_;
    for (int g : gpus) free_gpus_.erase(g);
    insts_.push_back(inst);
    return inst.id;
  }

  void deploy_initial(int model, Role role) {
    auto gpus = pick_gpus(model);
    if (gpus.empty()) fail(ErrorCode::kCapacityExceeded, "not enough GPUs for initial instances");
    int id = new_instance(model, role, gpus);
    Inst& inst = insts_[id];
    inst.state = InstState::kServing;
    inst.loaded_layers = models_[model].spec.num_layers;
    pool_.on_deploy(models_[model].spec.name, inst.ref(), now_);
  }

  // ---- serving path ----

  void on_arrival(int64_t r) {
    ModelState& ms = models_[reqs_[r].model];
    ms.window.push_back({now_, trace_[r].prompt_tokens});
    ms.window_tokens += trace_[r].prompt_tokens;
    ++result_.arrived;
    route_prefill(r);
  }

  void route_prefill(int64_t r) {
    const int model = reqs_[r].model;
    const int64_t tokens = trace_[r].prompt_tokens;
    int best_inst = -1;
    int best_pair = -1;
    int64_t best_load = 0;
    int best_key = 0;
    auto consider = [&](int64_t load, int key, int inst, int pair) {
      if ((best_inst < 0 && best_pair < 0) || load < best_load ||
          (load == best_load && key < best_key)) {
        best_load = load;
        best_key = key;
        best_inst = inst;
        best_pair = pair;
      }
    };
    for (const auto& inst : insts_) {
      if (inst.model != model || inst.role != Role::kPrefill) continue;
      if (inst.state != InstState::kServing || inst.pair >= 0) continue;
      consider(inst.queued_tokens + inst.inflight_tokens, inst.id, inst.id, -1);
    }
    for (size_t p = 0; p < pairs_.size(); ++p) {
      const Pair& pr = pairs_[p];
      if (!pr.active || pr.model != model) continue;
      consider(pr.fifo_tokens, pr.source, -1, static_cast<int>(p));
    }
    if (best_pair >= 0) {
      Pair& pr = pairs_[best_pair];
      pr.session = run_transition_protocol(std::move(pr.session), LiveEvent::arrival(r));
      pr.fifo_tokens += tokens;
      schedule_pair(best_pair, std::max(now_, pr.next_dispatch));
      return;
    }
    if (best_inst < 0) {
      models_[model].prefill_backlog.push_back(r);
      return;
    }
    Inst& inst = insts_[best_inst];
    inst.queue.push_back(r);
    inst.queued_tokens += tokens;
    dispatch_prefill(best_inst);
  }

  std::vector<int64_t> form_batch(std::deque<int64_t>& queue, int64_t& queued_tokens,
                                  int64_t& batch_tokens) {
    std::vector<int64_t> batch;
    batch_tokens = 0;
    while (!queue.empty()) {
      int64_t t = trace_[queue.front()].prompt_tokens;
      if (!batch.empty() && batch_tokens + t > config_.batch_token_budget) break;
      batch.push_back(queue.front());
      batch_tokens += t;
      queued_tokens -= t;
      queue.pop_front();
    }
    return batch;
  }

  int64_t store_batch(std::vector<int64_t> batch) {
    int64_t id = next_batch_++;
    batches_[id] = std::move(batch);
    return id;
  }

  std::vector<int64_t> take_batch(int64_t id) {
    auto it = batches_.find(id);
    if (it == batches_.end()) fail(ErrorCode::kInvariant, "unknown batch");
    auto batch = std::move(it->second);
    batches_.erase(it);
    return batch;
  }

  void dispatch_prefill(int i) {
    Inst& inst = insts_[i];
    if (inst.state != InstState::kServing || inst.role != Role::kPrefill) return;
    if (inst.busy || inst.pair >= 0 || inst.queue.empty()) return;
    int64_t tokens = 0;
    auto batch = form_batch(inst.queue, inst.queued_tokens, tokens);
    SimTime exec = ms_to_us(models_[inst.model].spec.prefill_ms(static_cast<double>(tokens)));
    inst.busy = true;
    inst.busy_until = now_ + exec;
    inst.inflight_tokens = tokens;
    busy_gpu_us_ += static_cast<double>(exec) * inst.gpus.size();
    push(now_ + exec, EventKind::kPrefillDone, i, store_batch(std::move(batch)));
  }

  void on_prefill_done(int i, int64_t batch_id) {
    Inst& inst = insts_[i];
    deliver_first_tokens(take_batch(batch_id));
    inst.inflight_tokens = 0;
    if (inst.pair >= 0) return;
    if (now_ >= inst.busy_until) inst.busy = false;
    dispatch_prefill(i);
  }

  void on_instance_free(int i) {
    Inst& inst = insts_[i];
    if (inst.pair >= 0 || now_ < inst.busy_until) return;
    inst.busy = false;
    dispatch_prefill(i);
  }

  void deliver_first_tokens(const std::vector<int64_t>& batch) {
    for (int64_t r : batch) {
      records_[r].token_times.push_back(now_);
      reqs_[r].generated = 1;
      interval_tokens_ += trace_[r].prompt_tokens + 1;
      if (trace_[r].output_tokens <= 1) {
        complete(r);
      } else {
        send_to_decode(r);
      }
    }
  }

  void send_to_decode(int64_t r) {
    const int model = reqs_[r].model;
    int best = -1;
    size_t best_load = 0;
    for (const auto& inst : insts_) {
      if (inst.model != model || inst.role != Role::kDecode) continue;
      if (inst.state != InstState::kServing) continue;
      size_t load = inst.running.size() + inst.waiting.size() + inst.incoming;
      if (best < 0 || load < best_load) {
        best = inst.id;
        best_load = load;
      }
    }
    if (best < 0) {
      models_[model].decode_backlog.push_back(r);
      return;
    }
    const ModelSpec& spec = models_[model].spec;
    double bytes = trace_[r].prompt_tokens * spec.kv_bytes_per_token;
    SimTime t = sec_to_us(transfer_seconds(bytes, config_.kv_flow_gbps, efficiency_));
    ++insts_[best].incoming;
    push(now_ + t, EventKind::kKvDone, r, best);
  }

  void on_kv_done(int64_t r, int d) {
    Inst& inst = insts_[d];
    --inst.incoming;
    inst.waiting.push_back(r);
    if (!inst.stepping) start_step(d);
  }

  void start_step(int d) {
    Inst& inst = insts_[d];
    while (!inst.waiting.empty() &&
           static_cast<int>(inst.running.size()) < config_.decode_max_running) {
      inst.running.push_back(inst.waiting.front());
      inst.waiting.pop_front();
    }
    if (inst.running.empty()) {
      inst.stepping = false;
      return;
    }
    inst.stepping = true;
    SimTime step = ms_to_us(models_[inst.model].spec.decode_ms(static_cast<double>(inst.running.size())));
    busy_gpu_us_ += static_cast<double>(step) * inst.gpus.size();
    push(now_ + step, EventKind::kDecodeStep, d);
  }

  void on_decode_step(int d) {
    Inst& inst = insts_[d];
    std::vector<int64_t> still;
    for (int64_t r : inst.running) {
      records_[r].token_times.push_back(now_);
      ++interval_tokens_;
      if (++reqs_[r].generated >= trace_[r].output_tokens) {
        complete(r);
      } else {
        still.push_back(r);
      }
    }
    inst.running = std::move(still);
    start_step(d);
  }

  void complete(int64_t r) {
    if (reqs_[r].done) fail(ErrorCode::kInvariant, "request completed twice");
    reqs_[r].done = true;
    ++result_.completed;
  }

  // ---- live pairs ----

  void schedule_pair(int p, SimTime at) {
    Pair& pr = pairs_[p];
    if (pr.dispatch_pending || !pr.active) return;
    pr.dispatch_pending = true;
    push(at, EventKind::kPairDispatch, p);
  }

  void on_pair_dispatch(int p) {
    Pair& pr = pairs_[p];
    pr.dispatch_pending = false;
    if (!pr.active || pr.session.fifo_queue.empty()) return;
    if (now_ < pr.next_dispatch) {
      schedule_pair(p, pr.next_dispatch);
      return;
    }
    Inst& tgt = insts_[pr.target];
    Inst& src = insts_[pr.source];
    const ModelSpec& spec = models_[pr.model].spec;
    const int layers = spec.num_layers;
    int64_t tokens = 0;
    auto batch = form_batch(pr.session.fifo_queue, pr.fifo_tokens, tokens);
    double layer_us = ms_to_us(spec.prefill_ms(static_cast<double>(tokens))) /
                      static_cast<double>(layers);

    int loaded = 0;
    while (loaded < layers && tgt.layer_ready[loaded] <= now_) ++loaded;
    int prefix = 0;
    if (loaded > 0) {
      if (pr.planned_index < pr.config.batches()) {
        prefix = pr.config.splits[pr.planned_index++].target_layers;
      } else {
        prefix = std::min(loaded, layers / 2);
      }
    }
    double t = static_cast<double>(std::max(now_, pr.target_free));
    for (int j = 0; j < prefix; ++j) {
      double start = std::max(t, static_cast<double>(tgt.layer_ready[j]));
      if (start < static_cast<double>(tgt.layer_ready[j])) {
        fail(ErrorCode::kInvariant, "layer executed before it was loaded");
      }
      ++result_.causality_checks;
      t = start + layer_us;
    }
    SimTime prefix_end = static_cast<SimTime>(std::ceil(t));
    SimTime src_start = std::max(pr.source_free, prefix_end);
    SimTime src_end = src_start + static_cast<SimTime>(std::ceil(layer_us * (layers - prefix)));
    if (prefix > 0) pr.target_free = prefix_end;
    if (prefix < layers) pr.source_free = src_end;
    busy_gpu_us_ += layer_us * prefix * tgt.gpus.size() + layer_us * (layers - prefix) * src.gpus.size();

    SimTime done = prefix < layers ? src_end : prefix_end;
    push(done, EventKind::kPairBatchDone, p, store_batch(std::move(batch)));
    SimTime prefix_len = static_cast<SimTime>(std::ceil(layer_us * prefix));
    pr.next_dispatch = std::max({pr.target_free, pr.source_free - prefix_len, now_ + 1});
    if (!pr.session.fifo_queue.empty()) schedule_pair(p, pr.next_dispatch);
  }

  void start_pair(int source, int target) {
    Inst& src = insts_[source];
    Inst& tgt = insts_[target];
    const ModelSpec& spec = models_[src.model].spec;
    Pair pr;
    pr.source = source;
    pr.target = target;
    pr.model = src.model;
    pr.session = LiveScaleSession::start(src.ref(), tgt.ref(), Role::kPrefill, spec.num_layers,
                                         src.queue);
    pr.session = run_transition_protocol(std::move(pr.session), LiveEvent::load_started());
    pr.fifo_tokens = src.queued_tokens;
    src.queue.clear();
    src.queued_tokens = 0;
    pr.source_free = src.busy ? src.busy_until : now_;
    pr.target_free = now_;
    pr.next_dispatch = now_;

    const int layers = spec.num_layers;
    double batch_ms = spec.prefill_ms(config_.batch_token_budget);
    double layer_exec_ms = batch_ms / layers;
    SimTime first = tgt.layer_ready.front();
    SimTime last = tgt.layer_ready.back();
    double layer_load_ms = layers > 1 ? us_to_ms(last - first) / (layers - 1)
                                      : us_to_ms(first - now_);
    double time_l = layer_load_ms / layer_exec_ms;
    int planned = static_cast<int>(std::ceil(us_to_ms(last - now_) / batch_ms));
    planned = std::clamp(planned, 1, config_.max_planned_batches);
    pr.config = configure_pipeline(planned, layers, time_l, {}, config_.pipeline);

    int p = static_cast<int>(pairs_.size());
    src.pair = p;
    tgt.pair = p;
    pairs_.push_back(std::move(pr));
    log_event("live-pair", src.model, Role::kPrefill, target, tgt.gpus, 0.0,
              "inst:" + std::to_string(source));
    schedule_pair(p, now_);
  }

  void end_pair(int p) {
    Pair& pr = pairs_[p];
    pr.session = run_transition_protocol(std::move(pr.session), LiveEvent::load_completed());
    pr.active = false;
    Inst& src = insts_[pr.source];
    Inst& tgt = insts_[pr.target];
    for (Inst* inst : {&src, &tgt}) {
      auto& q = inst == &src ? pr.session.source_queue : pr.session.target_queue;
      for (int64_t r : q) {
        inst->queue.push_back(r);
        inst->queued_tokens += trace_[r].prompt_tokens;
      }
      inst->pair = -1;
      SimTime free_at = inst == &src ? pr.source_free : pr.target_free;
      inst->busy = free_at > now_ || (inst == &src && src.busy_until > now_);
      inst->busy_until = std::max(free_at, inst == &src ? src.busy_until : SimTime{0});
      if (inst->busy) {
        push(inst->busy_until, EventKind::kInstanceFree, inst->id);
      }
    }
    pr.session.source_queue.clear();
    pr.session.target_queue.clear();
    pr.fifo_tokens = 0;
    dispatch_prefill(src.id);
    dispatch_prefill(tgt.id);
  }

  // ---- scaling ----

  void log_event(const std::string& kind, int model, Role role, int instance,
                 const std::vector<int>& gpus, double load_ms, const std::string& source) {
    ScaleEvent e;
    e.time_ms = us_to_ms(now_);
    e.kind = kind;
    e.model = models_[model].spec.name;
    e.role = std::string(to_string(role));
    e.instance = instance;
    e.gpus = gpus;
    e.load_ms = load_ms;
    e.source = source;
    result_.metrics.scale_events.push_back(std::move(e));
  }

  int scale_up(int model, Role role, int count) {
    std::vector<int> created;
    for (int k = 0; k < count; ++k) {
      auto gpus = pick_gpus(model);
      if (gpus.empty()) break;
      created.push_back(new_instance(model, role, gpus));
    }
    if (created.empty()) return 0;
    const ModelSpec& spec = models_[model].spec;
    const SimTime cmd = ms_to_us(config_.scale_command_ms);
    if (config_.load_time_override_s || !is_blitz(config_.strategy)) {
      for (int id : created) {
        Inst& inst = insts_[id];
        double load_s = 0.0;
        std::string source;
        if (config_.load_time_override_s) {
          load_s = *config_.load_time_override_s;
          source = "fixed";
        } else {
          bool hit = true;
          if (config_.strategy == Strategy::kSllm) {
            hit = pool_.cache_hit(spec.name, inst.host, now_);
            ++(hit ? result_.cache_hits : result_.cache_misses);
            pool_.touch(spec.name, inst.host, now_);
          }
          Strategy path = config_.strategy == Strategy::kSllm ? Strategy::kSllm : Strategy::kAllCache;
          load_s = baseline_load_time(path, spec, topo_, inst.host, hit, efficiency_);
          source = hit ? "mem:" + std::to_string(inst.host) : "ssd:" + std::to_string(inst.host);
        }
        SimTime ready = now_ + cmd + sec_to_us(load_s);
        inst.layer_ready.assign(spec.num_layers, ready);
        push(ready, EventKind::kTransferDone, id);
        log_event("scale-up", model, role, id, inst.gpus, us_to_ms(ready - now_), source);
      }
      return static_cast<int>(created.size());
    }
    network_load(model, role, created);
    return static_cast<int>(created.size());
  }

  // Plans the multicast, reserves its flows and schedules layer arrivals.
  void network_load(int model, Role role, const std::vector<int>& created) {
    const ModelSpec& spec = models_[model].spec;
    const SimTime cmd = ms_to_us(config_.scale_command_ms);
    std::vector<InstanceRef> refs;
    for (int id : created) refs.push_back(insts_[id].ref());
    ScaleRequest req = make_scale_request(spec, pool_, refs, topo_, flows_);
    ScalePlan plan = generate_plan(req, topo_, flows_);
    if (!plan_is_interference_free(plan, topo_, flows_)) ++interfering_plans_;

    // Share each crossed port among the plan's lanes, then reserve.
    std::map<std::pair<int, bool>, int> lanes_on_port;
    auto crossings = [&](NodeId src, NodeId dst) {
      std::vector<std::pair<int, bool>> out;
      bool same = topo_.host_of(src) == topo_.host_of(dst);
      if (!same || src.kind != NodeKind::kGpu) out.push_back({topo_.port_of(src), true});
      if (!same || dst.kind != NodeKind::kGpu) out.push_back({topo_.port_of(dst), false});
      return out;
    };
    auto lanes_of = [&](const PlanEdge& e) {
      return static_cast<int>(std::max<size_t>({e.from.gpus.size(), e.to.gpus.size(), 1}));
    };
    for (const auto& e : plan.edges) {
      for (int l = 0; l < lanes_of(e); ++l) {
        for (auto key : crossings(e.from.lane_node(l), e.to.lane_node(l))) ++lanes_on_port[key];
      }
    }
    std::map<std::string, int> inst_of_name;
    for (int id : created) inst_of_name[Endpoint::instance(insts_[id].ref()).name()] = id;
    std::map<std::string, double> realized_in;
    for (auto& e : plan.edges) {
      double rate = e.gbps;
      auto up = realized_in.find(e.from.name());
      if (up != realized_in.end()) rate = std::min(rate, up->second);
      for (int l = 0; l < lanes_of(e); ++l) {
        NodeId src = e.from.lane_node(l);
        NodeId dst = e.to.lane_node(l);
        rate = std::min(rate, available_gbps(topo_, flows_, src, dst));
        for (auto key : crossings(src, dst)) {
          double used = key.second ? flows_.port_out(key.first) : flows_.port_in(key.first);
          double share = (topo_.port_capacity(key.first) - used) / lanes_on_port[key];
          rate = std::min(rate, share);
        }
      }
      const double kFloorGbps = 1.0;
      bool reserve = rate >= kFloorGbps;
      rate = std::max(rate, kFloorGbps);
      Inst& tgt = insts_[inst_of_name.at(e.to.name())];
      for (int l = 0; l < lanes_of(e); ++l) {
        NodeId src = e.from.lane_node(l);
        NodeId dst = e.to.lane_node(l);
        for (auto key : crossings(src, dst)) --lanes_on_port[key];
        if (!reserve) continue;
        Flow f{src, dst, rate, FlowLabel::kScale};
        flows_.add(topo_, f);
        tgt.scale_flows.push_back(f);
      }
      e.gbps = rate;
      realized_in[e.to.name()] = rate;
      if (e.from.is_instance()) {
        ++insts_[e.from.id].relays;
        tgt.relay_sources.push_back(e.from.id);
      }
    }
    for (const auto& [name, id] : inst_of_name) {
      Inst& inst = insts_[id];
      auto arrival = layer_arrival_seconds(plan, spec, name, efficiency_);
      inst.layer_ready.clear();
      for (double s : arrival) inst.layer_ready.push_back(now_ + cmd + sec_to_us(s));
    }
    auto estimate = estimate_completion(plan, spec, efficiency_);

    std::set<int> live;
    if (config_.strategy == Strategy::kBlitzLive && role == Role::kPrefill) {
      for (const auto& pair : select_live_pairs(plan, estimate, overloaded(model))) {
        int target = inst_of_name.at(pair.target.name());
        live.insert(target);
        start_pair(pair.source.id, target);
      }
    }
    for (int id : created) {
      Inst& inst = insts_[id];
      std::string source;
      if (auto idx = plan.inbound_edge(Endpoint::instance(inst.ref()).name())) {
        source = plan.edges[*idx].from.name();
      } else {
        source = "nvlink";
      }
      if (live.count(id)) {
        for (int k = 1; k <= spec.num_layers; ++k) {
          push(inst.layer_ready[k - 1], EventKind::kLayerLoaded, id, k);
        }
      }
      push(inst.layer_ready.back(), EventKind::kTransferDone, id);
      log_event("scale-up", model, role, id, inst.gpus,
                us_to_ms(inst.layer_ready.back() - now_), source);
    }
  }

  std::vector<OverloadedInstance> overloaded(int model) {
    const ModelState& ms = models_[model];
    std::vector<std::pair<int64_t, int>> order;
    for (const auto& inst : insts_) {
      if (inst.model != model || inst.role != Role::kPrefill) continue;
      if (inst.state != InstState::kServing || inst.pair >= 0 || inst.queue.empty()) continue;
      order.push_back({-inst.queued_tokens, inst.id});
    }
    std::sort(order.begin(), order.end());
    std::vector<OverloadedInstance> out;
    for (const auto& [neg_tokens, id] : order) {
      const Inst& inst = insts_[id];
      double age_ms = us_to_ms(now_ - trace_[inst.queue.front()].arrival_us);
      double drain_ms = -neg_tokens / ms.cap.prefill_tokens_per_s * 1000.0;
      double headroom_ms = std::max(0.0, ms.slo.ttft_ms - age_ms - drain_ms);
      out.push_back({inst.ref(), headroom_ms / 1000.0});
    }
    return out;
  }

  void on_layer_loaded(int i, int k) {
    Inst& inst = insts_[i];
    inst.loaded_layers = k;
    if (inst.pair >= 0) {
      Pair& pr = pairs_[inst.pair];
      pr.session = run_transition_protocol(std::move(pr.session), LiveEvent::layer_loaded(k));
    }
  }

  void on_load_done(int i) {
    Inst& inst = insts_[i];
    const ModelState& ms = models_[inst.model];
    inst.state = InstState::kServing;
    inst.loaded_layers = ms.spec.num_layers;
    for (const auto& f : inst.scale_flows) flows_.remove(topo_, f);
    inst.scale_flows.clear();
    for (int s : inst.relay_sources) --insts_[s].relays;
    inst.relay_sources.clear();
    pool_.on_deploy(ms.spec.name, inst.ref(), now_);
    if (inst.pair >= 0) end_pair(inst.pair);
    rebuild_kv_flows();
    drain_backlogs(inst.model);
    dispatch_prefill(i);
  }

  void drain_backlogs(int model) {
    ModelState& ms = models_[model];
    std::deque<int64_t> prefill;
    prefill.swap(ms.prefill_backlog);
    for (int64_t r : prefill) route_prefill(r);
    std::deque<int64_t> decode;
    decode.swap(ms.decode_backlog);
    for (int64_t r : decode) send_to_decode(r);
  }

  void mutate_for_decode(int model, int count) {
    for (int k = 0; k < count; ++k) {
      int serving_prefill = 0;
      int best = -1;
      for (const auto& inst : insts_) {
        if (inst.model != model || inst.role != Role::kPrefill) continue;
        if (inst.state != InstState::kServing) continue;
        ++serving_prefill;
        if (inst.pair >= 0 || inst.busy || inst.relays > 0) continue;
        if (best < 0 || inst.queued_tokens < insts_[best].queued_tokens) best = inst.id;
      }
      if (best < 0 || serving_prefill < 2) {
        scale_up(model, Role::kDecode, count - k);
        return;
      }
      Inst& inst = insts_[best];
      ServingInstance si{inst.ref(), models_[model].spec.name, Role::kPrefill,
                         models_[model].spec.num_layers, inst.loaded_layers, false};
      Mutation m = mutate_prefill_to_decode(si, 1);
      inst.role = m.instance.role;
      std::deque<int64_t> moved;
      moved.swap(inst.queue);
      inst.queued_tokens = 0;
      log_event("mutate", model, Role::kDecode, inst.id, inst.gpus, 0.0, "");
      rebuild_kv_flows();
      for (int64_t r : moved) route_prefill(r);
      drain_backlogs(model);
      scale_up(model, Role::kPrefill, m.compensation_instances);
    }
  }

  bool retirable(const Inst& inst) const {
    if (inst.state != InstState::kServing || inst.pair >= 0 || inst.relays > 0) return false;
    if (inst.role == Role::kPrefill) return !inst.busy && inst.queue.empty();
    return inst.running.empty() && inst.waiting.empty() && inst.incoming == 0 && !inst.stepping;
  }

  int retire(int model, Role role, int count) {
    int done = 0;
    for (auto it = insts_.rbegin(); it != insts_.rend() && done < count; ++it) {
      Inst& inst = *it;
      if (inst.model != model || inst.role != role || !retirable(inst)) continue;
      inst.state = InstState::kRetired;
      for (int g : inst.gpus) free_gpus_.insert(g);
      for (const auto& ev : pool_.on_reclaim(models_[model].spec.name, inst.id, now_)) {
        log_event("reload", model, role, inst.id, {}, 0.0, "mem:" + std::to_string(ev.host));
      }
      log_event("scale-down", model, role, inst.id, inst.gpus, 0.0, "");
      ++done;
    }
    if (done > 0) rebuild_kv_flows();
    return done;
  }

  void rebuild_kv_flows() {
    for (const auto& f : kv_flows_) flows_.remove(topo_, f);
    kv_flows_.clear();
    for (int m = 0; m < static_cast<int>(models_.size()); ++m) {
      std::vector<int> prefill;
      std::vector<int> decode;
      for (const auto& inst : insts_) {
        if (inst.model != m || inst.state != InstState::kServing) continue;
        (inst.role == Role::kPrefill ? prefill : decode).push_back(inst.id);
      }
      if (decode.empty()) continue;
      for (size_t k = 0; k < prefill.size(); ++k) {
        const Inst& p = insts_[prefill[k]];
        const Inst& d = insts_[decode[k % decode.size()]];
        for (size_t lane = 0; lane < p.gpus.size(); ++lane) {
          NodeId src = NodeId::gpu(p.gpus[lane]);
          NodeId dst = NodeId::gpu(d.gpus[lane % d.gpus.size()]);
          double rate = std::min(config_.kv_flow_gbps, available_gbps(topo_, flows_, src, dst));
          if (rate <= 0.0) continue;
          Flow f{src, dst, rate, FlowLabel::kKvCache};
          flows_.add(topo_, f);
          kv_flows_.push_back(f);
        }
      }
    }
  }

  // ---- control loop ----

  int count(int model, Role role, bool include_loading) const {
    int n = 0;
    for (const auto& inst : insts_) {
      if (inst.model != model || inst.role != role) continue;
      if (inst.state == InstState::kServing ||
          (include_loading && inst.state == InstState::kLoading)) {
        ++n;
      }
    }
    return n;
  }

  int min_sources() const {
    int lowest = -1;
    for (const auto& ms : models_) {
      int n = static_cast<int>(pool_.sources_for(ms.spec.name).size());
      if (config_.strategy == Strategy::kSllm) ++n;  // local SSD copies
      lowest = lowest < 0 ? n : std::min(lowest, n);
    }
    return std::max(lowest, 0);
  }

  void on_control_tick() {
    const double now_s = us_to_sec(now_);
    const double window_us = static_cast<double>(sec_to_us(config_.window_s));
    for (int m = 0; m < static_cast<int>(models_.size()); ++m) {
      ModelState& ms = models_[m];
      while (!ms.window.empty() && ms.window.front().first <= now_ - static_cast<SimTime>(window_us)) {
        ms.window_tokens -= ms.window.front().second;
        ms.window.pop_front();
      }
      double span_s = std::min(config_.window_s, now_s);
      LoadMetrics prefill{span_s, ms.window_tokens / span_s, 0.0};

      int64_t active = static_cast<int64_t>(ms.decode_backlog.size());
      int64_t prefill_queued = static_cast<int64_t>(ms.prefill_backlog.size());
      for (const auto& inst : insts_) {
        if (inst.model != m || inst.state == InstState::kRetired) continue;
        if (inst.role == Role::kDecode) {
          active += static_cast<int64_t>(inst.running.size() + inst.waiting.size()) + inst.incoming;
        } else {
          prefill_queued += static_cast<int64_t>(inst.queue.size());
        }
      }
      for (const auto& pr : pairs_) {
        if (pr.active && pr.model == m) prefill_queued += static_cast<int64_t>(pr.session.fifo_queue.size());
      }
      double per_seq = ms.cap.decode_tokens_per_s / ms.cap.decode_sequences;
      LoadMetrics decode{span_s, active * per_seq,
                         static_cast<double>(active) /
                             std::max(1, count(m, Role::kDecode, false) * config_.decode_max_running)};

      if (config_.strategy != Strategy::kStatic) {
        int up = should_scale_up(prefill, ms.prefill_policy, count(m, Role::kPrefill, true));
        if (up > 0) scale_up(m, Role::kPrefill, up);
        int up_d = should_scale_up(decode, ms.decode_policy, count(m, Role::kDecode, true));
        if (up_d > 0) {
          if (config_.strategy == Strategy::kBlitzLive && !config_.load_time_override_s) {
            mutate_for_decode(m, up_d);
          } else {
            scale_up(m, Role::kDecode, up_d);
          }
        }

        ms.prefill_history.push_back({now_s, prefill.tokens_per_second});
        ms.decode_history.push_back({now_s, decode.tokens_per_second});
        scale_down_group(m, Role::kPrefill, ms.prefill_history, ms.prefill_policy,
                         prefill_queued > 0);
        scale_down_group(m, Role::kDecode, ms.decode_history, ms.decode_policy, active > 0);
      }
    }

    flows_.check_invariants(topo_);
    pool_.check_invariants(now_);
    if (config_.strategy == Strategy::kSllm) pool_.expire(now_);
    int copies = pool_.total_host_copies(now_);
    result_.max_cache_copies = std::max(result_.max_cache_copies, copies);
    for (const auto& ms : models_) {
      result_.max_model_host_copies =
          std::max(result_.max_model_host_copies, pool_.host_copies(ms.spec.name, now_));
    }
    result_.min_model_sources = std::min(result_.min_model_sources, min_sources());

    int gpus = topo_.gpu_count() - static_cast<int>(free_gpus_.size());
    result_.gpu_seconds += gpus * config_.control_interval_ms / 1000.0;
    result_.metrics.timeline.push_back({us_to_ms(now_), static_cast<double>(interval_tokens_), gpus, copies});
    interval_tokens_ = 0;

    int64_t finished = result_.completed;
    bool loading = std::any_of(insts_.begin(), insts_.end(),
                               [](const Inst& i) { return i.state == InstState::kLoading; });
    if (finished < static_cast<int64_t>(trace_.size()) || loading) {
      SimTime limit = trace_.back().arrival_us + sec_to_us(config_.drain_limit_s);
      if (now_ >= limit) {
        stopped_ = true;
        return;
      }
      push(now_ + interval_us_, EventKind::kControlTick);
    }
  }

  void scale_down_group(int model, Role role, std::vector<LoadSample>& history,
                        const ScalePolicy& policy, bool queued) {
    // Keep only what the timeout needs.
    while (history.size() > 2 && history.back().time_s - history[1].time_s >=
                                     config_.scale_down_timeout_s + config_.window_s) {
      history.erase(history.begin());
    }
    if (count(model, role, true) != count(model, role, false)) return;
    int current = count(model, role, false);
    int min_instances = role == Role::kPrefill ? 1 : std::min(1, config_.initial_decode);
    int n = should_scale_down(history, policy, current, min_instances, queued);
    if (n > 0 && retire(model, role, n) > 0) history.clear();
  }

  SimResult finish() {
    result_.strategy = config_.strategy;
    for (size_t i = 0; i < records_.size(); ++i) {
      if (!reqs_[i].done) {
        records_[i].rejected = true;
        ++result_.rejected;
      }
    }
    if (result_.completed + result_.rejected != static_cast<int64_t>(trace_.size())) {
      fail(ErrorCode::kInvariant, "request conservation violated");
    }
    size_t met = 0;
    for (size_t i = 0; i < records_.size(); ++i) {
      const RequestRecord& r = records_[i];
      if (meets_slo(r, models_[reqs_[i].model].slo)) ++met;
      if (!r.completed()) continue;
      result_.metrics.ttft_ms.push_back(compute_ttft(r));
      for (double g : compute_tbt(r)) result_.metrics.tbt_ms.push_back(g);
    }
    result_.metrics.slo_attainment =
        records_.empty() ? 1.0 : static_cast<double>(met) / records_.size();
    result_.gpu_utilization =
        result_.gpu_seconds > 0.0 ? busy_gpu_us_ / 1e6 / result_.gpu_seconds : 0.0;
    result_.gpu_utilization = std::min(result_.gpu_utilization, 1.0);
    result_.records = std::move(records_);
    return std::move(result_);
  }

  const NetworkTopology& topo_;
  const std::vector<Request>& trace_;
  SimConfig config_;
  double efficiency_ = 1.0;
  SimTime interval_us_ = 0;

  std::vector<ModelState> models_;
  std::map<std::string, int> model_index_;
  std::vector<ReqState> reqs_;
  std::vector<RequestRecord> records_;
  std::vector<Inst> insts_;
  std::vector<Pair> pairs_;
  std::set<int> free_gpus_;
  FlowSet flows_;
  std::vector<Flow> kv_flows_;
  ParameterPool pool_;
  std::map<int64_t, std::vector<int64_t>> batches_;
  int64_t next_batch_ = 0;

  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  uint64_t seq_ = 0;
  SimTime now_ = 0;
  bool stopped_ = false;
  int64_t interval_tokens_ = 0;
  double busy_gpu_us_ = 0.0;
  int64_t interfering_plans_ = 0;

  SimResult result_;
};

}  // namespace

SimResult run_simulation(const NetworkTopology& topo, const std::vector<ModelSpec>& models,
                         const std::vector<Request>& trace, const SimConfig& config) {
  Simulation sim(topo, models, trace, config);
  return sim.run();
}

}  // namespace netscale

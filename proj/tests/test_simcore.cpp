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

#include <gtest/gtest.h>

#include <sstream>

#include "netscale/simulator.h"

namespace netscale {
namespace {

TEST(TraceTest, DeterministicPerSeed) {
  TraceParams p;
  p.duration_s = 30;
  auto a = generate_trace(TraceKind::kPoisson, p, 7);
  auto b = generate_trace(TraceKind::kPoisson, p, 7);
  auto c = generate_trace(TraceKind::kPoisson, p, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (size_t i = 1; i < a.size(); ++i) EXPECT_LE(a[i - 1].arrival_us, a[i].arrival_us);
  for (const auto& r : a) {
    EXPECT_GE(r.prompt_tokens, p.prompt_min);
    EXPECT_LE(r.prompt_tokens, p.prompt_max);
    EXPECT_GE(r.output_tokens, p.output_min);
    EXPECT_LE(r.output_tokens, p.output_max);
  }
  EXPECT_NEAR(static_cast<double>(a.size()), 300.0, 60.0);
}

TEST(TraceTest, BurstShape) {
  TraceParams p;
  EXPECT_DOUBLE_EQ(burst_rate_at(p, 0.0), 10.0);
  EXPECT_DOUBLE_EQ(burst_rate_at(p, 21.0), 30.0);
  EXPECT_DOUBLE_EQ(burst_rate_at(p, 25.0), 50.0);
  EXPECT_DOUBLE_EQ(burst_rate_at(p, 40.0), 10.0);
  auto trace = generate_trace(TraceKind::kBurst, p, 1);
  int in_hold = 0;
  int before = 0;
  for (const auto& r : trace) {
    double t = us_to_sec(r.arrival_us);
    if (t >= 22.0 && t < 32.0) ++in_hold;
    if (t < 10.0) ++before;
  }
  EXPECT_NEAR(in_hold, 500, 90);
  EXPECT_NEAR(before, 100, 35);
}

TEST(TraceTest, RoundTripAndErrors) {
  TraceParams p;
  p.duration_s = 5;
  auto trace = generate_trace(TraceKind::kPoisson, p, 3);
  std::stringstream ss;
  write_trace(ss, trace);
  EXPECT_EQ(read_trace(ss), trace);
  std::stringstream bad("{\"arrival_ms\": 5, \"prompt_tokens\": 10, \"output_tokens\": 1}\n"
                        "{\"arrival_ms\": 1, \"prompt_tokens\": 10, \"output_tokens\": 1}\n");
  EXPECT_THROW(read_trace(bad), Error);
  std::stringstream garbage("not json\n");
  EXPECT_THROW(read_trace(garbage), Error);
  std::stringstream negative("{\"arrival_ms\": 1, \"prompt_tokens\": -3, \"output_tokens\": 1}\n");
  EXPECT_THROW(read_trace(negative), Error);
  EXPECT_EQ(load_trace_file("data/sample_trace.jsonl").size(), 40u);
  EXPECT_THROW(parse_trace_kind("sine"), Error);
}

TEST(MetricsTest, PercentilesAndSlo) {
  std::vector<double> v;
  for (int i = 100; i >= 1; --i) v.push_back(i);
  EXPECT_DOUBLE_EQ(percentile(v, 50), 50);
  EXPECT_DOUBLE_EQ(percentile(v, 99), 99);
  EXPECT_DOUBLE_EQ(percentile(v, 100), 100);
  EXPECT_DOUBLE_EQ(percentile(v, 0), 1);
  EXPECT_DOUBLE_EQ(percentile({}, 99), 0);

  RequestRecord r;
  r.arrival_us = 1000;
  r.output_tokens = 3;
  EXPECT_THROW(compute_ttft(r), Error);
  r.token_times = {201000, 251000, 401000};
  EXPECT_DOUBLE_EQ(compute_ttft(r), 200.0);
  EXPECT_EQ(compute_tbt(r), (std::vector<double>{50.0, 150.0}));
  EXPECT_TRUE(meets_slo(r, {200.0, 150.0}));
  EXPECT_FALSE(meets_slo(r, {199.0, 150.0}));
  EXPECT_FALSE(meets_slo(r, {200.0, 149.0}));
  RequestRecord rejected = r;
  rejected.rejected = true;
  EXPECT_DOUBLE_EQ(slo_attainment({r, rejected}, {200.0, 150.0}), 0.5);
  EXPECT_DOUBLE_EQ(slo_attainment({}, {1.0, 1.0}), 1.0);
}

struct Scenario {
  NetworkTopology topo = split_hosts(load_preset("cluster-B"), 2);
  std::vector<ModelSpec> models = {model_preset("llama2-7b")};
  std::vector<Request> trace;

  explicit Scenario(double duration = 30.0, double rate = 8.0, uint64_t seed = 1) {
    TraceParams p;
    p.duration_s = duration;
    p.rate_per_s = rate;
    trace = generate_trace(TraceKind::kBurst, p, seed);
  }

  SimResult run(Strategy s) const {
    SimConfig c;
    c.strategy = s;
    return run_simulation(topo, models, trace, c);
  }
};

void expect_conserved(const SimResult& r, const std::vector<Request>& trace) {
  EXPECT_EQ(r.arrived, static_cast<int64_t>(trace.size()));
  EXPECT_EQ(r.completed + r.rejected, r.arrived);
  ASSERT_EQ(r.records.size(), trace.size());
  for (const auto& rec : r.records) {
    if (rec.rejected) continue;
    ASSERT_EQ(static_cast<int>(rec.token_times.size()), rec.output_tokens);
    EXPECT_GT(rec.token_times.front(), rec.arrival_us);
    for (size_t i = 1; i < rec.token_times.size(); ++i) {
      EXPECT_GT(rec.token_times[i], rec.token_times[i - 1]);
    }
  }
}

TEST(SimulatorTest, DeterministicAndConserving) {
  Scenario sc;
  for (Strategy s : all_strategies()) {
    auto a = sc.run(s);
    auto b = sc.run(s);
    EXPECT_EQ(a.summary().dump(), b.summary().dump()) << to_string(s);
    EXPECT_EQ(a.timeline_csv(), b.timeline_csv()) << to_string(s);
    expect_conserved(a, sc.trace);
    EXPECT_EQ(a.rejected, 0) << to_string(s);
    EXPECT_GT(a.gpu_seconds, 0.0);
    EXPECT_LE(a.gpu_utilization, 1.0 + 1e-9);
  }
}

TEST(SimulatorTest, NetworkStrategiesKeepOneHostCopy) {
  Scenario sc;
  for (Strategy s : {Strategy::kBlitzLive, Strategy::kBlitzStop}) {
    auto r = sc.run(s);
    EXPECT_LE(r.max_model_host_copies, 1) << to_string(s);
    EXPECT_GE(r.min_model_sources, 1) << to_string(s);
    bool scaled = false;
    for (const auto& e : r.metrics.scale_events) scaled |= e.kind == "scale-up" || e.kind == "live-pair";
    EXPECT_TRUE(scaled) << to_string(s);
  }
  auto live = sc.run(Strategy::kBlitzLive);
  EXPECT_GT(live.causality_checks, 0);
}

TEST(SimulatorTest, BaselinesCacheOnHosts) {
  Scenario sc;
  auto sllm = sc.run(Strategy::kSllm);
  EXPECT_GT(sllm.max_model_host_copies, 1);
  EXPECT_GT(sllm.cache_misses, 0);
  auto all = sc.run(Strategy::kAllCache);
  EXPECT_EQ(all.max_model_host_copies, static_cast<int>(sc.topo.hosts().size()));
  EXPECT_EQ(all.cache_misses, 0);
}

TEST(SimulatorTest, StaticNeverScales) {
  Scenario sc;
  auto r = sc.run(Strategy::kStatic);
  EXPECT_TRUE(r.metrics.scale_events.empty());
}

TEST(SimulatorTest, LoadOverrideSlowsStopTheWorld) {
  Scenario sc;
  SimConfig c;
  c.strategy = Strategy::kBlitzStop;
  c.load_time_override_s = 10.0;
  auto slow = run_simulation(sc.topo, sc.models, sc.trace, c);
  EXPECT_GT(slow.ttft_p99(), sc.run(Strategy::kBlitzStop).ttft_p99());
}

TEST(SimulatorTest, TimelineCsv) {
  Scenario sc(10.0);
  auto r = sc.run(Strategy::kBlitzLive);
  std::string csv = r.timeline_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "time_ms,throughput_tokens,gpus_active,cache_copies");
  EXPECT_FALSE(r.metrics.timeline.empty());
  for (size_t i = 1; i < r.metrics.timeline.size(); ++i) {
    EXPECT_GT(r.metrics.timeline[i].time_ms, r.metrics.timeline[i - 1].time_ms);
  }
}

TEST(SimulatorTest, RejectsBadInputs) {
  Scenario sc(5.0);
  SimConfig c;
  auto trace = sc.trace;
  std::swap(trace.front(), trace.back());
  EXPECT_THROW(run_simulation(sc.topo, sc.models, trace, c), Error);
  c.control_interval_ms = 0;
  EXPECT_THROW(run_simulation(sc.topo, sc.models, sc.trace, c), Error);
  EXPECT_THROW(run_simulation(sc.topo, {}, sc.trace, SimConfig{}), Error);
  auto unknown = sc.trace;
  unknown[0].model = "gpt-9";
  EXPECT_THROW(run_simulation(sc.topo, sc.models, unknown, SimConfig{}), Error);
}

TEST(SimulatorTest, ConfigJson) {
  SimConfig c;
  c.strategy = Strategy::kSllm;
  c.load_time_override_s = 3.0;
  ScalePolicy p;
  p.upper_bound = 1000;
  p.lower_bound = 100;
  c.prefill_policy = p;
  EXPECT_EQ(SimConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_THROW(SimConfig::from_json({{"strategy", "nope"}}), Error);
}

TEST(SimulatorTest, ProfileCapacity) {
  Scenario sc(10.0);
  auto prof = profile_capacity(sc.models[0], sc.trace, SimConfig{});
  EXPECT_GT(prof.prefill_tokens_per_s, 0.0);
  EXPECT_GE(prof.decode_sequences, 1);
  const ModelSpec& m = sc.models[0];
  EXPECT_LE(m.decode_ms(prof.decode_sequences), 0.5 * m.tbt_slo_ms + 1e-9);
}

}  // namespace
}  // namespace netscale

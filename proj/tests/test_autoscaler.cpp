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

#include "netscale/autoscaler.h"
#include "netscale/common.h"

namespace netscale {
namespace {

ScalePolicy policy(double upper, double lower) {
  ScalePolicy p;
  p.upper_bound = upper;
  p.lower_bound = lower;
  return p;
}

LoadMetrics load(double tps) {
  LoadMetrics m;
  m.tokens_per_second = tps;
  return m;
}

TEST(AutoscalerTest, ScaleUpCoversWindowLoad) {
  ScalePolicy p = policy(1000, 200);
  EXPECT_EQ(should_scale_up(load(0), p, 0), 0);
  EXPECT_EQ(should_scale_up(load(1000), p, 1), 0);
  EXPECT_EQ(should_scale_up(load(1001), p, 1), 1);
  EXPECT_EQ(should_scale_up(load(3500), p, 1), 3);
  EXPECT_EQ(should_scale_up(load(3500), p, 0), 4);
  // Brute force: smallest k with (n + k) * upper >= load.
  for (int n = 0; n < 5; ++n) {
    for (double tps = 0; tps < 8000; tps += 137) {
      int k = 0;
      while ((n + k) * p.upper_bound < tps) ++k;
      EXPECT_EQ(should_scale_up(load(tps), p, n), k) << n << " " << tps;
    }
  }
  EXPECT_THROW(should_scale_up(load(-1), p, 1), Error);
}

std::vector<LoadSample> samples(double until, double step, double tps) {
  std::vector<LoadSample> out;
  for (double t = 0; t <= until + 1e-9; t += step) out.push_back({t, tps});
  return out;
}

TEST(AutoscalerTest, ScaleDownWaitsForTimeout) {
  ScalePolicy p = policy(1000, 200);
  EXPECT_EQ(should_scale_down(samples(1.9, 0.1, 100), p, 4), 0);
  EXPECT_EQ(should_scale_down(samples(2.0, 0.1, 100), p, 4), 3);
  auto h = samples(3.0, 0.1, 100);
  h[25].tokens_per_second = 5000;
  EXPECT_EQ(should_scale_down(h, p, 4), 0);
  EXPECT_EQ(should_scale_down({}, p, 4), 0);
}

TEST(AutoscalerTest, ScaleDownKeepsFloor) {
  ScalePolicy p = policy(1000, 200);
  auto idle = samples(3.0, 0.1, 0);
  EXPECT_EQ(should_scale_down(idle, p, 3), 2);
  EXPECT_EQ(should_scale_down(idle, p, 3, 0), 3);
  EXPECT_EQ(should_scale_down(idle, p, 3, 0, true), 2);
  EXPECT_EQ(should_scale_down(idle, p, 3, 2), 1);
  // Remaining capacity still covers the latest load.
  EXPECT_EQ(should_scale_down(samples(3.0, 0.1, 1500), policy(1000, 600), 4), 2);
}

TEST(AutoscalerTest, BaselineLoadTimes) {
  NetworkTopology topo = load_preset("cluster-B");
  ModelSpec m = model_preset("llama2-7b");
  EXPECT_DOUBLE_EQ(baseline_load_time(Strategy::kSllm, m, topo, 0, false, 1.0), 11.2);
  EXPECT_DOUBLE_EQ(baseline_load_time(Strategy::kSllm, m, topo, 0, true, 1.0),
                   transfer_seconds(14e9, 128.0));
  EXPECT_DOUBLE_EQ(baseline_load_time(Strategy::kAllCache, m, topo, 1, false, 0.8),
                   transfer_seconds(14e9, 128.0, 0.8));
  ModelSpec big = model_preset("llama2-70b");
  EXPECT_DOUBLE_EQ(baseline_load_time(Strategy::kSllm, big, topo, 0, false, 1.0), 28.0);
  EXPECT_THROW(baseline_load_time(Strategy::kBlitzLive, m, topo, 0, false, 1.0), Error);
}

TEST(AutoscalerTest, PolicyJson) {
  ScalePolicy p = policy(1200, 300);
  p.strategy = Strategy::kSllm;
  p.scale_down_timeout_s = 3.0;
  ScalePolicy back = ScalePolicy::from_json(p.to_json());
  EXPECT_EQ(back.to_json(), p.to_json());
  EXPECT_THROW(ScalePolicy::from_json({{"upper_bound", 100}}), Error);
  EXPECT_THROW(ScalePolicy::from_json({{"upper_bound", 100}, {"lower_bound", 200}}), Error);
  EXPECT_THROW(ScalePolicy::from_json(
                   {{"upper_bound", 100}, {"lower_bound", 20}, {"strategy", "magic"}}),
               Error);
}

TEST(AutoscalerTest, StrategyNames) {
  for (Strategy s : all_strategies()) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("blitz"), Error);
}

}  // namespace
}  // namespace netscale

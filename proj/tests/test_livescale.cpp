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

#include <chrono>
#include <limits>
#include <random>

#include "netscale/common.h"
#include "netscale/live_session.h"
#include "netscale/pipeline.h"

namespace netscale {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<PipelineSplit> splits_of(std::initializer_list<std::pair<int, int>> list) {
  std::vector<PipelineSplit> out;
  for (auto [t, s] : list) out.push_back({t, s});
  return out;
}

TEST(PipelineTest, LayersLoadedAt) {
  EXPECT_EQ(layers_loaded_at(0.0, 7, 6.0, 1), 1);
  EXPECT_EQ(layers_loaded_at(5.9, 7, 6.0, 1), 1);
  EXPECT_EQ(layers_loaded_at(6.0, 7, 6.0, 1), 2);
  EXPECT_EQ(layers_loaded_at(1000.0, 7, 6.0, 1), 7);
  EXPECT_EQ(layers_loaded_at(3.0, 7, 0.0, 1), 7);
  EXPECT_EQ(layers_loaded_at(3.0, 7, kInf, 2), 2);
}

TEST(PipelineTest, ObjectiveIsWeightedSuffixSum) {
  auto s = splits_of({{1, 3}, {2, 2}});
  EXPECT_DOUBLE_EQ(pipeline_objective(s), (3 * 2 + 2 * 1) / 2.0);
  EXPECT_DOUBLE_EQ(pipeline_objective(s, {2.0, 1.0}), (2 * 3 * 2 + 2 * 1) / 2.0);
  EXPECT_DOUBLE_EQ(realized_objective(s), pipeline_objective(s));
  EXPECT_THROW(pipeline_objective(s, {1.0}), Error);
}

TEST(PipelineTest, FeasibilityChecks) {
  EXPECT_EQ(first_violation(splits_of({{1, 3}, {2, 2}}), 4, 0.0), 0);
  EXPECT_EQ(first_violation(splits_of({{1, 2}}), 4, 0.0), 1);
  // Batch 2's prefix would outrun batch 1's suffix.
  EXPECT_EQ(first_violation(splits_of({{1, 3}, {3, 1}}), 4, 0.0), 2);
  // Only one layer resident at the start.
  EXPECT_EQ(first_violation(splits_of({{2, 2}}), 4, 6.0), 1);
}

TEST(PipelineTest, ReproducesWorkedExample) {
  auto cfg = configure_pipeline(6, 7, 6.0);
  EXPECT_TRUE(cfg.optimal);
  EXPECT_EQ(cfg.splits, splits_of({{1, 6}, {2, 5}, {2, 5}, {3, 4}, {4, 3}, {4, 3}}));
  EXPECT_DOUBLE_EQ(cfg.objective, 17.0);
  auto load = uniform_layer_load_times(7, 6.0, 1);
  auto zigzag = zigzag_schedule(cfg.splits, load);
  EXPECT_DOUBLE_EQ(zigzag.average_latency, 18.0);
  EXPECT_EQ(zigzag.realized, cfg.splits);

  auto best_effort = best_effort_pipeline(6, 7, 6.0);
  EXPECT_EQ(best_effort.splits, std::vector<PipelineSplit>(6, {1, 6}));
  EXPECT_DOUBLE_EQ(zigzag_schedule(best_effort.splits, load).average_latency, 22.0);
}

TEST(PipelineTest, BestEffortHalvesOnceLoaded) {
  auto cfg = best_effort_pipeline(3, 4, 0.0);
  EXPECT_EQ(cfg.splits, std::vector<PipelineSplit>(3, {2, 2}));
  auto slow = best_effort_pipeline(4, 8, 2.0);
  EXPECT_EQ(slow.splits.front(), (PipelineSplit{1, 7}));
  for (size_t i = 1; i < slow.splits.size(); ++i) {
    EXPECT_GE(slow.splits[i].target_layers, slow.splits[i - 1].target_layers);
    EXPECT_LE(slow.splits[i].target_layers, 4);
  }
}

TEST(PipelineTest, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  const double times[] = {0.0, 1.0, 2.0, 3.5, kInf};
  for (int it = 0; it < 300; ++it) {
    int n = 1 + static_cast<int>(rng() % 4);
    int l = 1 + static_cast<int>(rng() % 6);
    double time_l = times[rng() % 5];
    PipelineOptions opt;
    opt.first_layer_offset = static_cast<int>(rng() % 3);
    opt.clock = rng() % 2 ? C3Clock::kSourceWork : C3Clock::kTargetWork;
    std::vector<double> w;
    if (rng() % 2) {
      for (int i = 0; i < n; ++i) w.push_back(0.5 + static_cast<double>(rng() % 4) / 2.0);
    }
    auto dp = configure_pipeline(n, l, time_l, w, opt);
    auto bf = brute_force_pipeline(n, l, time_l, w, opt);
    EXPECT_NEAR(dp.objective, bf.objective, 1e-9)
        << "N=" << n << " L=" << l << " time_l=" << time_l;
    EXPECT_EQ(first_violation(dp.splits, l, time_l, opt), 0);
    EXPECT_NEAR(dp.objective, pipeline_objective(dp.splits, w), 1e-9);
  }
}

TEST(PipelineTest, SolverMeetsDeadlineOnLargeInputs) {
  auto t0 = std::chrono::steady_clock::now();
  auto cfg = configure_pipeline(16, 80, 3.0);
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(first_violation(cfg.splits, 80, 3.0), 0);
  EXPECT_LT(ms, 50.0);
}

TEST(PipelineTest, TokenWeights) {
  auto w = token_weights({100, 200, 400});
  EXPECT_EQ(w, (std::vector<double>{0.5, 1.0, 2.0}));
  EXPECT_THROW(token_weights({0, 0}), Error);
}

TEST(PipelineTest, RejectsBadInputs) {
  EXPECT_THROW(configure_pipeline(0, 4, 0.0), Error);
  EXPECT_THROW(configure_pipeline(2, 0, 0.0), Error);
  EXPECT_THROW(configure_pipeline(2, 4, -1.0), Error);
  EXPECT_THROW(configure_pipeline(2, 4, 0.0, {1.0, -1.0}), Error);
  EXPECT_THROW(parse_c3_clock("wall"), Error);
  EXPECT_EQ(parse_c3_clock(to_string(C3Clock::kTargetWork)), C3Clock::kTargetWork);
}

TEST(ZigzagTest, NoLayerRunsBeforeItLoads) {
  std::mt19937_64 rng(5);
  for (int it = 0; it < 100; ++it) {
    int l = 2 + static_cast<int>(rng() % 10);
    int n = 1 + static_cast<int>(rng() % 8);
    double time_l = static_cast<double>(rng() % 5);
    auto cfg = configure_pipeline(n, l, time_l);
    auto load = uniform_layer_load_times(l, time_l, 1);
    auto tl = zigzag_schedule(cfg.splits, load);
    for (const auto& e : tl.execs) {
      if (e.on_target) {
        EXPECT_GE(e.start + 1e-9, load[e.layer - 1]);
      }
    }
    // A batch's suffix starts after its own prefix and after the previous suffix.
    for (int i = 0; i < n; ++i) {
      EXPECT_GE(tl.finish[i], tl.prefix_done[i] + tl.realized[i].source_layers - 1e-9);
      if (i > 0) {
        EXPECT_GE(tl.finish[i], tl.finish[i - 1] + tl.realized[i].source_layers - 1e-9);
      }
    }
  }
}

TEST(ZigzagTest, DelaysBatchesWaitingForLayers) {
  auto tl = zigzag_schedule(splits_of({{2, 2}}), {0.0, 5.0, 10.0, 15.0});
  EXPECT_EQ(tl.delayed, std::vector<int>{1});
  EXPECT_DOUBLE_EQ(tl.prefix_done[0], 6.0);
  EXPECT_DOUBLE_EQ(tl.finish[0], 8.0);
  // Layers that never arrive shrink the prefix.
  auto stuck = zigzag_schedule(splits_of({{3, 1}}), {0.0, kInf, kInf, kInf});
  EXPECT_EQ(stuck.realized[0], (PipelineSplit{1, 3}));
  EXPECT_DOUBLE_EQ(stuck.finish[0], 4.0);
  EXPECT_THROW(zigzag_schedule(splits_of({{1, 1}}), {0.0, 0.0, 0.0}), Error);
}

TEST(ZigzagTest, SteadyThroughputGrowsWithLoadedLayers) {
  EXPECT_NEAR(steady_throughput(8, 0), 1.0 / 8, 1e-9);
  EXPECT_NEAR(steady_throughput(8, 4), 2.0 / 8, 1e-9);
  double prev = 0.0;
  for (int k = 0; k <= 4; ++k) {
    double t = steady_throughput(8, k);
    EXPECT_GT(t, prev);
    prev = t;
  }
  EXPECT_THROW(steady_throughput(8, 9), Error);
}

InstanceRef inst(int id) { return {id, 0, {id}}; }

TEST(LiveSessionTest, FullProtocol) {
  auto s = LiveScaleSession::start(inst(0), inst(1), Role::kPrefill, 2, {1, 2});
  EXPECT_EQ(s.phase, LivePhase::kIdle);
  s = run_transition_protocol(s, LiveEvent::arrival(3));
  EXPECT_EQ(s.source_queue.size(), 3u);
  s = run_transition_protocol(s, LiveEvent::load_started());
  EXPECT_EQ(s.phase, LivePhase::kLoading);
  EXPECT_TRUE(s.source_queue.empty());
  EXPECT_EQ(s.fifo_queue, (std::deque<int64_t>{1, 2, 3}));
  s = run_transition_protocol(s, LiveEvent::layer_loaded(1));
  EXPECT_EQ(s.phase, LivePhase::kPartialServe);
  s = run_transition_protocol(s, LiveEvent::arrival(4));
  s.pending_queue.push_back(5);
  s = run_transition_protocol(s, LiveEvent::layer_loaded(2));
  s = run_transition_protocol(s, LiveEvent::load_completed());
  EXPECT_EQ(s.phase, LivePhase::kFullServe);
  EXPECT_TRUE(s.fifo_queue.empty());
  EXPECT_TRUE(s.pending_queue.empty());
  EXPECT_EQ(s.source_queue, (std::deque<int64_t>{1, 3, 5}));
  EXPECT_EQ(s.target_queue, (std::deque<int64_t>{2, 4}));
  s = run_transition_protocol(s, LiveEvent::arrival(6));
  EXPECT_EQ(s.target_queue.back(), 6);
}

TEST(LiveSessionTest, RejectsOutOfOrderEvents) {
  auto s = LiveScaleSession::start(inst(0), inst(1), Role::kDecode, 3);
  auto expect_out_of_order = [](const LiveScaleSession& state, const LiveEvent& e) {
    try {
      run_transition_protocol(state, e);
      ADD_FAILURE() << "accepted out-of-order event";
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::kOutOfOrder);
    }
  };
  expect_out_of_order(s, LiveEvent::layer_loaded(1));
  expect_out_of_order(s, LiveEvent::load_completed());
  s = run_transition_protocol(s, LiveEvent::load_started());
  expect_out_of_order(s, LiveEvent::load_started());
  expect_out_of_order(s, LiveEvent::layer_loaded(2));
  s = run_transition_protocol(s, LiveEvent::layer_loaded(1));
  expect_out_of_order(s, LiveEvent::load_completed());
  expect_out_of_order(s, LiveEvent::layer_loaded(1));
}

TEST(LiveSessionTest, ColocatedIsUnsupported) {
  try {
    LiveScaleSession::start(inst(0), inst(1), Role::kColocated, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

TEST(LivePairTest, PairsTailsFirstWhenHeadroomIsShort) {
  ScalePlan plan;
  auto mem = Endpoint::host_memory(0);
  auto t1 = Endpoint::instance(inst(1));
  auto t2 = Endpoint::instance(inst(2));
  auto t3 = Endpoint::instance(inst(3));
  plan.edges = {{mem, t1, 100, LinkKind::kRdma}, {t1, t2, 100, LinkKind::kRdma},
                {mem, t3, 100, LinkKind::kRdma}};
  plan.chains = {{0, 1}, {2}};
  PlanEstimate est;
  est.per_target_completion = {{"inst:1", 1.0}, {"inst:2", 1.1}, {"inst:3", 1.0}};
  auto pairs = select_live_pairs(plan, est, {{inst(10), 0.1}, {inst(11), 0.1}, {inst(12), 0.1}});
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[0].target.name(), "inst:2");
  EXPECT_EQ(pairs[0].source, inst(10));
  EXPECT_EQ(pairs[1].target.name(), "inst:3");
  EXPECT_EQ(pairs[2].target.name(), "inst:1");
  // Enough headroom: no live pair.
  EXPECT_TRUE(select_live_pairs(plan, est, {{inst(10), 5.0}}).empty());
}

TEST(MutationTest, FlipsRolesWithoutLoading) {
  ServingInstance p{inst(0), "llama2-7b", Role::kPrefill, 32, 32, false};
  auto m = mutate_prefill_to_decode(p);
  EXPECT_EQ(m.instance.role, Role::kDecode);
  EXPECT_EQ(m.instance.loaded_layers, 32);
  EXPECT_EQ(m.compensation_instances, 1);
  EXPECT_EQ(m.model, "llama2-7b");
  EXPECT_EQ(mutate_decode_to_prefill(m.instance).role, Role::kPrefill);
  EXPECT_THROW(mutate_prefill_to_decode(m.instance), Error);
  ServingInstance loading = p;
  loading.loaded_layers = 10;
  EXPECT_THROW(mutate_prefill_to_decode(loading), Error);
  EXPECT_THROW(mutate_prefill_to_decode(p, -1), Error);
}

}  // namespace
}  // namespace netscale

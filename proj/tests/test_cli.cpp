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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "netscale/cli.h"

namespace netscale {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("netscale_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<int>> splits(const json& cfg) {
  return cfg.at("splits").get<std::vector<std::vector<int>>>();
}

TEST(CliTest, PlanExample) {
  auto r = run({"plan", "--request", "data/request_cluster_a.json", "--oracle",
                "--check-interference"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  json doc = json::parse(r.out);
  EXPECT_EQ(doc.at("model"), "llama2-7b");
  EXPECT_EQ(doc.at("plan").at("edges").size(), 1u);
  EXPECT_TRUE(doc.at("oracle").at("pass").get<bool>());
  EXPECT_TRUE(doc.at("interference_free").get<bool>());
  EXPECT_GT(doc.at("max_completion_s").get<double>(), 0.0);
}

TEST(CliTest, PlanFailures) {
  EXPECT_EQ(run({"plan", "--request", "data/request_unreachable.json"}).code, kExitUsage);
  EXPECT_EQ(run({"plan", "--request", "missing.json"}).code, kExitUsage);
  EXPECT_EQ(run({"plan"}).code, kExitUsage);
  auto r = run({"--topology", "cluster-B", "plan", "--request", "data/request_interference.json",
                "--check-interference"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_FALSE(json::parse(r.out).at("interference_free").get<bool>());
}

TEST(CliTest, PipelineWorkedExample) {
  auto r = run({"pipeline", "--layers", "7", "--batches", "6", "--time-l", "6", "--oracle"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  json doc = json::parse(r.out);
  EXPECT_EQ(splits(doc.at("zigzag")),
            (std::vector<std::vector<int>>{{1, 6}, {2, 5}, {2, 5}, {3, 4}, {4, 3}, {4, 3}}));
  EXPECT_DOUBLE_EQ(doc.at("comparison").at("zigzag_average_latency").get<double>(), 18.0);
  EXPECT_DOUBLE_EQ(doc.at("comparison").at("best_effort_average_latency").get<double>(), 22.0);
}

TEST(CliTest, PipelineFullyLoaded) {
  auto r = run({"pipeline", "--layers", "4", "--batches", "3", "--time-l", "0", "--oracle"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  json doc = json::parse(r.out);
  EXPECT_EQ(splits(doc.at("best_effort")), (std::vector<std::vector<int>>(3, {2, 2})));
  EXPECT_EQ(run({"pipeline", "--layers", "0", "--batches", "3"}).code, kExitUsage);
  EXPECT_EQ(run({"pipeline", "--layers", "4", "--batches", "2", "--weights", "1"}).code,
            kExitUsage);
}

TEST(CliTest, SimulateIsReproducible) {
  fs::path dir = temp_dir("repro");
  std::vector<std::string> args = {"--logical-host-gpus", "2", "--seed", "4", "--out",
                                   dir.string(), "simulate", "--strategy", "blitz-live",
                                   "--duration", "30", "--rate", "8"};
  auto first = run(args);
  ASSERT_EQ(first.code, kExitOk) << first.err;
  std::string summary = slurp(dir / "blitz-live.json");
  std::string timeline = slurp(dir / "blitz-live.csv");
  fs::remove_all(dir);
  auto second = run(args);
  ASSERT_EQ(second.code, kExitOk) << second.err;
  EXPECT_EQ(first.out, second.out);
  EXPECT_EQ(summary, slurp(dir / "blitz-live.json"));
  EXPECT_EQ(timeline, slurp(dir / "blitz-live.csv"));
  json doc = json::parse(summary);
  EXPECT_EQ(doc.at("experiment").at("seed"), 4);
  EXPECT_EQ(doc.at("experiment").at("sim").at("seed"), 4);
  EXPECT_FALSE(doc.at("scale_events").empty());
  fs::remove_all(dir);
}

TEST(CliTest, SimulateWithDocuments) {
  fs::path dir = temp_dir("docs");
  auto r = run({"--out", dir.string(), "simulate", "--config", "data/sim_config.json", "--policy",
                "data/policy.json", "--trace", "data/sample_trace.jsonl"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  json doc = json::parse(slurp(dir / "blitz-live.json"));
  EXPECT_EQ(doc.at("requests").at("arrived"), 40);
  EXPECT_EQ(run({"simulate", "--strategy", "teleport"}).code, kExitUsage);
  EXPECT_EQ(run({"simulate", "--trace", "missing.jsonl"}).code, kExitUsage);
  fs::remove_all(dir);
}

TEST(CliTest, CompareWritesTables) {
  fs::path dir = temp_dir("compare");
  auto r = run({"--logical-host-gpus", "2", "--out", dir.string(), "compare", "--strategies",
                "blitz-live,sllm", "--duration", "20"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  json doc = json::parse(slurp(dir / "comparison.json"));
  EXPECT_EQ(doc.at("results").size(), 2u);
  std::string csv = slurp(dir / "comparison.csv");
  EXPECT_NE(csv.find("\nblitz-live,"), std::string::npos);
  EXPECT_NE(csv.find("\nsllm,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "sllm.csv"));
  fs::remove_all(dir);
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"teleport"}).code, kExitUsage);
  EXPECT_EQ(run({"--topology", "cluster-Z", "plan", "--request", "data/request_cluster_a.json"}).code,
            kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(CliTest, ExperimentJson) {
  ExperimentConfig c;
  c.strategies = {Strategy::kSllm, Strategy::kAllCache};
  c.ttft_slo_ms = 300.0;
  c.logical_host_gpus = 2;
  EXPECT_EQ(ExperimentConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_THROW(ExperimentConfig::from_json({{"strategies", {"nope"}}}), Error);
  auto resolved = resolve_experiment(ExperimentConfig::from_json(
      json::parse(slurp("data/experiment.json"))));
  EXPECT_EQ(resolved.topology.hosts().size(), 8u);
  EXPECT_FALSE(resolved.trace.empty());
}

}  // namespace
}  // namespace netscale

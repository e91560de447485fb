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

#include "netscale/cli.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "netscale/pipeline.h"

namespace netscale {

using nlohmann::json;

namespace {

constexpr double kHeterogeneousRatio = 1.25;
constexpr double kRelEps = 1e-9;
constexpr size_t kOracleMaxTargets = 6;
constexpr double kPipelineOracleMaxStates = 2e7;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kNotFound, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, path + ": " + e.what());
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kNotFound, "cannot write " + tmp.string());
    out << content;
    if (!out) fail(ErrorCode::kNotFound, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

int host_of_gpus(const NetworkTopology& topo, const std::vector<int>& gpus) {
  if (gpus.empty()) fail(ErrorCode::kInvalidArgument, "instance needs at least one GPU");
  int host = topo.host_of(NodeId::gpu(gpus.front()));
  for (int g : gpus) {
    if (topo.host_of(NodeId::gpu(g)) != host) {
      fail(ErrorCode::kInvalidArgument, "instance GPUs span hosts");
    }
  }
  return host;
}

ModelSpec resolve_request_model(const json& ref, const std::vector<ModelSpec>& registry) {
  if (ref.is_object()) return ModelSpec::from_json(ref);
  if (!ref.is_string()) fail(ErrorCode::kInvalidArgument, "model must be a name or an object");
  std::string name = ref.get<std::string>();
  for (const auto& m : registry) {
    if (m.name == name) return m;
  }
  return model_preset(name);
}

bool all_equal(const std::vector<double>& values) {
  for (double v : values) {
    if (std::abs(v - values.front()) > kRelEps * std::max(1.0, std::abs(v))) return false;
  }
  return true;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::kInvalidArgument, "bad number '" + item + "'");
    }
  }
  return out;
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvariant:
    case ErrorCode::kOutOfOrder:
      return kExitFailure;
    default:
      return kExitUsage;
  }
}

struct GlobalFlags {
  std::string topology;
  int logical_host_gpus = 0;
  std::string models;
  std::optional<uint64_t> seed;
  std::string out;
  std::string experiment;
};

struct SimFlags {
  std::vector<std::string> strategies;
  std::string trace;
  std::optional<double> rate;
  std::optional<double> duration;
  std::optional<double> burst;
  std::optional<double> load_time;
  std::optional<double> ttft_slo;
  std::optional<double> tbt_slo;
  std::string config;
  std::string policy;
};

ExperimentConfig build_experiment(const GlobalFlags& g, const SimFlags& f,
                                  const std::vector<std::string>& default_strategies) {
  ExperimentConfig c;
  if (!g.experiment.empty()) c = ExperimentConfig::from_json(read_json_file(g.experiment));
  if (!g.topology.empty()) c.topology = g.topology;
  if (g.logical_host_gpus > 0) c.logical_host_gpus = g.logical_host_gpus;
  if (!g.models.empty()) c.models = g.models;
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.out = g.out;
  if (g.experiment.empty()) {
    c.strategies.clear();
    for (const auto& s : default_strategies) c.strategies.push_back(parse_strategy(s));
  }
  if (!f.strategies.empty()) {
    c.strategies.clear();
    for (const auto& s : f.strategies) c.strategies.push_back(parse_strategy(s));
  }
  if (!f.trace.empty()) c.trace = f.trace;
  if (f.rate) c.trace_params.rate_per_s = *f.rate;
  if (f.duration) c.trace_params.duration_s = *f.duration;
  if (f.burst) c.trace_params.burst_multiplier = *f.burst;
  if (!f.config.empty()) c.sim = SimConfig::from_json(read_json_file(f.config));
  if (!f.policy.empty()) c.sim.prefill_policy = ScalePolicy::from_json(read_json_file(f.policy));
  if (f.load_time) c.sim.load_time_override_s = *f.load_time;
  if (f.ttft_slo) c.ttft_slo_ms = *f.ttft_slo;
  if (f.tbt_slo) c.tbt_slo_ms = *f.tbt_slo;
  c.sim.seed = c.seed;
  c.validate();
  return c;
}

std::string summary_line(const SimResult& r) {
  return "strategy=" + std::string(to_string(r.strategy)) +
         " ttft_p50_ms=" + fixed(r.ttft_p50()) + " ttft_p99_ms=" + fixed(r.ttft_p99()) +
         " tbt_p99_ms=" + fixed(r.tbt_p99()) +
         " slo_attainment=" + fixed(r.metrics.slo_attainment, 4);
}

SimResult run_one(const ResolvedExperiment& ex, const ExperimentConfig& c, Strategy s) {
  SimConfig sim = c.sim;
  sim.strategy = s;
  sim.seed = c.seed;
  return run_simulation(ex.topology, ex.models, ex.trace, sim);
}

// Experiment echo without the output path.
json result_experiment(const ExperimentConfig& c) {
  json j = c.to_json();
  j.erase("out");
  return j;
}

void write_result(const ExperimentConfig& c, const SimResult& r) {
  std::filesystem::path dir(c.out);
  std::string name(to_string(r.strategy));
  json doc = r.summary();
  doc["experiment"] = result_experiment(c);
  write_atomic(dir / (name + ".json"), doc.dump(2) + "\n");
  write_atomic(dir / (name + ".csv"), r.timeline_csv());
}

}  // namespace

// ---- ExperimentConfig ----

void ExperimentConfig::validate() const {
  if (strategies.empty()) fail(ErrorCode::kInvalidArgument, "need at least one strategy");
  if (logical_host_gpus < 0) fail(ErrorCode::kInvalidArgument, "logical_host_gpus must be >= 0");
  if (ttft_slo_ms && !(*ttft_slo_ms > 0.0)) fail(ErrorCode::kInvalidArgument, "ttft slo must be > 0");
  if (tbt_slo_ms && !(*tbt_slo_ms > 0.0)) fail(ErrorCode::kInvalidArgument, "tbt slo must be > 0");
  if (out.empty()) fail(ErrorCode::kInvalidArgument, "output path must not be empty");
  trace_params.validate();
  sim.validate();
}

json ExperimentConfig::to_json() const {
  json names = json::array();
  for (auto s : strategies) names.push_back(std::string(to_string(s)));
  json j = {{"topology", topology},
            {"logical_host_gpus", logical_host_gpus},
            {"models", models},
            {"trace", trace},
            {"rate_per_s", trace_params.rate_per_s},
            {"duration_s", trace_params.duration_s},
            {"burst_multiplier", trace_params.burst_multiplier},
            {"strategies", names},
            {"seed", seed},
            {"out", out},
            {"sim", sim.to_json()}};
  if (ttft_slo_ms) j["ttft_slo_ms"] = *ttft_slo_ms;
  if (tbt_slo_ms) j["tbt_slo_ms"] = *tbt_slo_ms;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.topology = j.value("topology", c.topology);
    c.logical_host_gpus = j.value("logical_host_gpus", c.logical_host_gpus);
    c.models = j.value("models", c.models);
    c.trace = j.value("trace", c.trace);
    c.trace_params.rate_per_s = j.value("rate_per_s", c.trace_params.rate_per_s);
    c.trace_params.duration_s = j.value("duration_s", c.trace_params.duration_s);
    c.trace_params.burst_multiplier = j.value("burst_multiplier", c.trace_params.burst_multiplier);
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j.at("strategies")) c.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    c.seed = j.value("seed", c.seed);
    c.out = j.value("out", c.out);
    if (j.contains("sim")) c.sim = SimConfig::from_json(j.at("sim"));
    if (j.contains("ttft_slo_ms")) c.ttft_slo_ms = j.at("ttft_slo_ms").get<double>();
    if (j.contains("tbt_slo_ms")) c.tbt_slo_ms = j.at("tbt_slo_ms").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("bad experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ResolvedExperiment resolve_experiment(const ExperimentConfig& config) {
  config.validate();
  NetworkTopology topo = resolve_topology(config.topology);
  if (config.logical_host_gpus > 0) topo = split_hosts(topo, config.logical_host_gpus);
  std::vector<ModelSpec> models = resolve_models(config.models);
  for (auto& m : models) {
    if (config.ttft_slo_ms) m.prefill_slo_ms = *config.ttft_slo_ms;
    if (config.tbt_slo_ms) m.tbt_slo_ms = *config.tbt_slo_ms;
  }
  std::vector<Request> trace;
  if (config.trace == "burst" || config.trace == "poisson") {
    TraceParams p = config.trace_params;
    if (p.model.empty()) p.model = models.front().name;
    trace = generate_trace(parse_trace_kind(config.trace), p, config.seed);
  } else {
    trace = load_trace_file(config.trace, models.front().name);
  }
  return {std::move(topo), std::move(models), std::move(trace)};
}

// ---- plan ----

ScaleRequestDoc parse_scale_request(const json& doc, const NetworkTopology& topo,
                                    const std::vector<ModelSpec>& registry) {
  ScaleRequestDoc out;
  try {
    ModelSpec model = resolve_request_model(doc.at("model"), registry);
    for (const auto& f : doc.value("flows", json::array())) {
      out.flows.add(topo, {NodeId::parse(f.at("src").get<std::string>()),
                           NodeId::parse(f.at("dst").get<std::string>()),
                           f.at("gbps").get<double>(),
                           parse_flow_label(f.value("label", std::string("kvcache")))});
    }
    std::vector<Endpoint> sources;
    for (const auto& s : doc.at("sources")) {
      std::string kind = s.at("kind").get<std::string>();
      if (kind == "host_memory" || kind == "ssd") {
        int host = s.at("host").get<int>();
        topo.host(host);
        sources.push_back(kind == "ssd" ? Endpoint::ssd(host) : Endpoint::host_memory(host));
      } else if (kind == "instance") {
        auto gpus = s.at("gpus").get<std::vector<int>>();
        sources.push_back(Endpoint::instance({s.at("id").get<int>(), host_of_gpus(topo, gpus), gpus}));
      } else {
        fail(ErrorCode::kInvalidArgument, "unknown source kind '" + kind + "'");
      }
    }
    std::vector<InstanceRef> targets;
    for (const auto& t : doc.at("targets")) {
      auto gpus = t.at("gpus").get<std::vector<int>>();
      if (static_cast<int>(gpus.size()) != model.tp_degree) {
        fail(ErrorCode::kInvalidArgument, "target GPU count must equal the model's tp_degree");
      }
      targets.push_back({t.at("id").get<int>(), host_of_gpus(topo, gpus), gpus});
    }
    if (sources.empty() || targets.empty()) {
      fail(ErrorCode::kInvalidArgument, "scale request needs sources and targets");
    }
    out.request = make_scale_request(model, sources, targets, topo, out.flows);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("bad scale request: ") + e.what());
  }
  return out;
}

json PlanOracleReport::to_json() const {
  return {{"greedy_s", greedy_s},
          {"optimal_s", optimal_s},
          {"ratio", optimal_s > 0.0 ? greedy_s / optimal_s : 1.0},
          {"uniform", uniform},
          {"pass", pass}};
}

PlanOracleReport check_plan_oracle(const ScaleRequest& request, const NetworkTopology& topo,
                                   const FlowSet& flows, double efficiency) {
  GroupedTargets grouped = group_targets(request.targets, topo);
  auto sources = prune_sources(request.sources, flows, request.fallback_sources);
  if (grouped.representatives.size() > kOracleMaxTargets) {
    fail(ErrorCode::kInvalidArgument, "oracle supports at most " +
                                          std::to_string(kOracleMaxTargets) + " chain targets");
  }
  LinkCapFn links = topology_links(topo);
  ScalePlan plan = build_chains(sources, grouped.representatives, links);
  PlanEstimate est = estimate_completion(plan, request.model, efficiency);

  PlanOracleReport report;
  for (const auto& t : grouped.representatives) {
    report.greedy_s = std::max(report.greedy_s, est.per_target_completion.at(t.endpoint.name()));
  }
  report.optimal_s =
      oracle_max_completion(sources, grouped.representatives, request.model, links, efficiency);
  std::vector<double> bws;
  for (const auto& s : sources) bws.push_back(s.outcast_gbps);
  for (const auto& t : grouped.representatives) {
    bws.push_back(t.incast_gbps);
    if (std::isfinite(t.outcast_gbps)) bws.push_back(t.outcast_gbps);
    for (const auto& s : sources) {
      if (auto c = links(s.endpoint, t.endpoint); c && std::isfinite(*c)) bws.push_back(*c);
    }
    for (const auto& u : grouped.representatives) {
      if (u.endpoint == t.endpoint) continue;
      if (auto c = links(u.endpoint, t.endpoint); c && std::isfinite(*c)) bws.push_back(*c);
    }
  }
  report.uniform = all_equal(bws);
  double limit = report.uniform ? 1.0 : kHeterogeneousRatio;
  report.pass = report.greedy_s <= report.optimal_s * limit * (1.0 + kRelEps);
  return report;
}

// ---- command line ----

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network-based live autoscaling planner and simulator", "netscale"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--topology", g.topology, "Topology preset or document path");
  app.add_option("--logical-host-gpus", g.logical_host_gpus,
                 "Regroup hosts into logical hosts of this many GPUs")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--models", g.models, "Model preset list or registry path");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output file (plan, pipeline) or directory (simulate, compare)");

  auto* plan_cmd = app.add_subcommand("plan", "Generate a scale plan for a scale-request document");
  std::string request_path;
  bool plan_oracle = false;
  bool check_interference = false;
  std::optional<double> efficiency;
  plan_cmd->add_option("--request", request_path, "Scale-request document")->required();
  plan_cmd->add_flag("--oracle", plan_oracle, "Compare against the exhaustive forest search");
  plan_cmd->add_flag("--check-interference", check_interference,
                     "Report whether the plan avoids serving traffic");
  plan_cmd->add_option("--efficiency", efficiency, "Bandwidth efficiency override")
      ->check(CLI::Range(0.0, 1.0));

  auto* pipe_cmd = app.add_subcommand("pipeline", "Solve the zigzag split configuration");
  int layers = 0;
  int batches = 0;
  double time_l = 0.0;
  int offset = 1;
  std::string weights;
  std::string clock = "source";
  bool pipe_oracle = false;
  pipe_cmd->add_option("--layers", layers, "Model layers")->required()->check(CLI::PositiveNumber);
  pipe_cmd->add_option("--batches", batches, "Planned batches")->required()->check(CLI::PositiveNumber);
  pipe_cmd->add_option("--time-l", time_l, "Layer load time in layer-execution units")
      ->required()
      ->check(CLI::NonNegativeNumber);
  pipe_cmd->add_option("--offset", offset, "Layers resident at start")->check(CLI::NonNegativeNumber);
  pipe_cmd->add_option("--weights", weights, "Comma-separated batch weights");
  pipe_cmd->add_option("--c3-clock", clock, "Load-limit clock: source or target")
      ->check(CLI::IsMember({"source", "target"}));
  pipe_cmd->add_flag("--oracle", pipe_oracle, "Compare against brute-force enumeration");

  SimFlags sf;
  auto add_sim_flags = [&](CLI::App* cmd) {
    cmd->add_option("--trace", sf.trace, "burst, poisson, or a JSONL trace path");
    cmd->add_option("--rate", sf.rate, "Base arrival rate (requests/s)")->check(CLI::PositiveNumber);
    cmd->add_option("--duration", sf.duration, "Trace duration (s)")->check(CLI::PositiveNumber);
    cmd->add_option("--burst", sf.burst, "Burst multiplier")->check(CLI::PositiveNumber);
    cmd->add_option("--load-time", sf.load_time, "Fixed scale-up load time (s)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--ttft-slo", sf.ttft_slo, "TTFT SLO override (ms)");
    cmd->add_option("--tbt-slo", sf.tbt_slo, "TBT SLO override (ms)");
    cmd->add_option("--config", sf.config, "Simulation config document");
    cmd->add_option("--policy", sf.policy, "Prefill scale policy document");
    cmd->add_option("--experiment", g.experiment, "Experiment config document");
  };
  auto* sim_cmd = app.add_subcommand("simulate", "Run one strategy");
  std::string strategy = "blitz-live";
  sim_cmd->add_option("--strategy", strategy, "Scaling strategy");
  add_sim_flags(sim_cmd);

  auto* cmp_cmd = app.add_subcommand("compare", "Run several strategies on the same trace");
  cmp_cmd->add_option("--strategies", sf.strategies, "Strategies to compare")->delimiter(',');
  add_sim_flags(cmp_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*plan_cmd) {
      NetworkTopology topo = resolve_topology(g.topology.empty() ? "cluster-A" : g.topology);
      if (g.logical_host_gpus > 0) topo = split_hosts(topo, g.logical_host_gpus);
      if (efficiency) {
        TopologyOptions o = topo.options();
        o.efficiency = *efficiency;
        topo.set_options(o);
      }
      std::vector<ModelSpec> registry = resolve_models(g.models.empty() ? "llama2-7b" : g.models);
      ScaleRequestDoc doc = parse_scale_request(read_json_file(request_path), topo, registry);
      double eta = topo.options().efficiency;
      ScalePlan plan = generate_plan(doc.request, topo, doc.flows);
      PlanEstimate est = estimate_completion(plan, doc.request.model, eta);
      json result = {{"model", doc.request.model.name},
                     {"efficiency", eta},
                     {"plan", plan.to_json()},
                     {"completion", est.to_json()},
                     {"max_completion_s", est.max_completion()}};
      bool failed = false;
      if (check_interference) {
        result["interference_free"] = plan_is_interference_free(plan, topo, doc.flows);
      }
      if (plan_oracle) {
        PlanOracleReport report = check_plan_oracle(doc.request, topo, doc.flows, eta);
        result["oracle"] = report.to_json();
        failed = !report.pass;
      }
      std::string text = result.dump(2) + "\n";
      out << text;
      if (!g.out.empty()) write_atomic(g.out, text);
      if (failed) {
        err << "oracle check failed: greedy " << result["oracle"]["greedy_s"].get<double>()
            << " s vs optimal " << result["oracle"]["optimal_s"].get<double>() << " s\n";
        return kExitFailure;
      }
      return kExitOk;
    }

    if (*pipe_cmd) {
      PipelineOptions opts;
      opts.first_layer_offset = offset;
      opts.clock = parse_c3_clock(clock);
      std::vector<double> w;
      if (!weights.empty()) w = parse_list(weights);
      PipelineConfig cfg = configure_pipeline(batches, layers, time_l, w, opts);
      PipelineConfig be = best_effort_pipeline(batches, layers, time_l, opts);
      auto loads = uniform_layer_load_times(layers, time_l, offset);
      ZigzagTimeline zz = zigzag_schedule(cfg.splits, loads);
      ZigzagTimeline bz = zigzag_schedule(be.splits, loads);
      json result = {{"zigzag", cfg.to_json()},
                     {"best_effort", be.to_json()},
                     {"comparison",
                      {{"zigzag_objective", cfg.objective},
                       {"best_effort_objective", realized_objective(be.splits, w)},
                       {"zigzag_average_latency", zz.average_latency},
                       {"best_effort_average_latency", bz.average_latency}}}};
      bool failed = false;
      if (pipe_oracle) {
        if (std::pow(layers + 1.0, batches) > kPipelineOracleMaxStates) {
          err << "error: --oracle supports at most " << kPipelineOracleMaxStates
              << " enumerated configurations\n";
          return kExitUsage;
        }
        PipelineConfig bf = brute_force_pipeline(batches, layers, time_l, w, opts);
        bool equal = std::abs(bf.objective - cfg.objective) <= 1e-9 * std::max(1.0, bf.objective);
        result["oracle"] = {{"objective", bf.objective}, {"splits", bf.to_json()["splits"]},
                            {"pass", equal}};
        failed = !equal;
      }
      std::string text = result.dump(2) + "\n";
      out << text;
      if (!g.out.empty()) write_atomic(g.out, text);
      if (failed) {
        err << "oracle check failed: solver objective " << cfg.objective << " vs enumeration "
            << result["oracle"]["objective"].get<double>() << "\n";
        return kExitFailure;
      }
      return kExitOk;
    }

    if (*sim_cmd) {
      ExperimentConfig c = build_experiment(g, sf, {strategy});
      if (!g.experiment.empty() && sim_cmd->count("--strategy")) c.strategies = {parse_strategy(strategy)};
      if (c.strategies.size() != 1) {
        err << "error: simulate runs exactly one strategy; use compare\n";
        return kExitUsage;
      }
      ResolvedExperiment ex = resolve_experiment(c);
      SimResult r;
      try {
        r = run_one(ex, c, c.strategies.front());
      } catch (const Error& e) {
        err << "invariant violated: " << e.what() << "\n";
        return kExitFailure;
      }
      write_result(c, r);
      out << summary_line(r) << "\n";
      return kExitOk;
    }

    if (*cmp_cmd) {
      std::vector<std::string> defaults;
      for (auto s : {Strategy::kBlitzLive, Strategy::kBlitzStop, Strategy::kSllm, Strategy::kAllCache}) {
        defaults.emplace_back(to_string(s));
      }
      ExperimentConfig c = build_experiment(g, sf, defaults);
      ResolvedExperiment ex = resolve_experiment(c);
      json table = json::array();
      std::string csv =
          "strategy,ttft_p50_ms,ttft_p99_ms,tbt_p99_ms,slo_attainment,gpu_seconds,scale_events,"
          "max_cache_copies\n";
      for (Strategy s : c.strategies) {
        SimResult r;
        try {
          r = run_one(ex, c, s);
        } catch (const Error& e) {
          err << "invariant violated (" << to_string(s) << "): " << e.what() << "\n";
          return kExitFailure;
        }
        write_result(c, r);
        out << summary_line(r) << "\n";
        table.push_back({{"strategy", std::string(to_string(s))},
                         {"ttft_p50_ms", r.ttft_p50()},
                         {"ttft_p99_ms", r.ttft_p99()},
                         {"tbt_p99_ms", r.tbt_p99()},
                         {"slo_attainment", r.metrics.slo_attainment},
                         {"gpu_seconds", r.gpu_seconds},
                         {"scale_events", r.metrics.scale_events.size()},
                         {"max_cache_copies", r.max_cache_copies}});
        csv += std::string(to_string(s)) + "," + fixed(r.ttft_p50()) + "," + fixed(r.ttft_p99()) +
               "," + fixed(r.tbt_p99()) + "," + fixed(r.metrics.slo_attainment, 4) + "," +
               fixed(r.gpu_seconds, 1) + "," + std::to_string(r.metrics.scale_events.size()) +
               "," + std::to_string(r.max_cache_copies) + "\n";
      }
      std::filesystem::path dir(c.out);
      write_atomic(dir / "comparison.json",
                   json({{"experiment", result_experiment(c)}, {"results", table}}).dump(2) + "\n");
      write_atomic(dir / "comparison.csv", csv);
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace netscale

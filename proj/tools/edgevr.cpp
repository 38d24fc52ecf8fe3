// Copyright 2026 The edgevr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// edgevr command line: trace generation, environment server, baseline
// evaluation, action-log replay and parameter sweeps.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "edgevr/baselines.hpp"
#include "edgevr/harness.hpp"
#include "edgevr/protocol.hpp"

namespace {

using namespace edgevr;

std::optional<std::filesystem::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

void print_warnings(const std::vector<std::string>& warnings) {
  const std::size_t shown = std::min<std::size_t>(warnings.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) std::cerr << "warning: " << warnings[i] << '\n';
  if (warnings.size() > shown)
    std::cerr << "warning: ... " << warnings.size() - shown << " more range violations\n";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-user edge/device VR rendering simulator"};
  app.require_subcommand(1);

  std::string config_path, traces_path, out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int episodes = 0;

  auto* gen = app.add_subcommand("gen-traces", "Generate workload traces");
  gen->add_option("--config", config_path, "Config file");
  gen->add_option("--out", out_path, "Trace file to write")->required();
  gen->add_option("--seed", seed, "Override sim.seed")->each([&](const std::string&) { seed_set = true; });
  gen->add_option("--episodes", episodes, "Override sim.episodes");

  std::string listen = "127.0.0.1:5555";
  auto* serve = app.add_subcommand("serve-env", "Serve the environment protocol over TCP");
  serve->add_option("--config", config_path, "Config file");
  serve->add_option("--listen", listen, "host:port (port 0 picks a free port)");
  serve->add_option("--traces", traces_path, "Trace file (generated from the config if omitted)");

  std::string kind = "plf", record_path, events_path;
  auto* run = app.add_subcommand("run-baseline", "Evaluate a baseline policy");
  run->add_option("--config", config_path, "Config file");
  run->add_option("--kind", kind, "pff | plf | meclf | random");
  run->add_option("--traces", traces_path, "Trace file");
  run->add_option("--episodes", episodes, "Number of episodes (default sim.episodes)");
  run->add_option("--out", out_path, "Metrics CSV")->required();
  run->add_option("--record-actions", record_path, "Write the action log (JSON lines)");
  run->add_option("--event-log", events_path, "Write every tile transition");

  std::string actions_path;
  auto* eval = app.add_subcommand("evaluate", "Replay an action log and write metrics");
  eval->add_option("--config", config_path, "Config file");
  eval->add_option("--actions", actions_path, "Action log")->required();
  eval->add_option("--traces", traces_path, "Trace file");
  eval->add_option("--out", out_path, "Metrics CSV")->required();
  eval->add_option("--event-log", events_path, "Write every tile transition");

  std::string var = "bandwidth", grid;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Sweep total bandwidth or edge GPU");
  sweep->add_option("--config", config_path, "Config file");
  sweep->add_option("--var", var, "bandwidth | gpu");
  sweep->add_option("--grid", grid, "lo:hi:step or comma list (Hz)")->required();
  sweep->add_option("--kind", kind, "pff | plf | meclf | random");
  sweep->add_option("--traces", traces_path, "Trace file");
  sweep->add_option("--episodes", episodes, "Episodes per point (default 10)");
  sweep->add_option("--jobs", jobs, "Points evaluated in parallel");
  sweep->add_option("--out", out_path, "Sweep CSV")->required();

  auto* show = app.add_subcommand("show-config", "Print the effective config");
  show->add_option("--config", config_path, "Config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      RunConfig cfg = config_or_default(config_path);
      if (seed_set) cfg.seed = seed;
      if (episodes > 0) cfg.episodes = episodes;
      cfg.validate();
      const auto& e = cfg.env;
      TraceSet set = generate_traces(e.workload_params(), e.channel, cfg.episodes, e.users,
                                     e.horizon, cfg.seed);
      save_traces(out_path, set);
      std::cerr << "wrote " << static_cast<long>(cfg.episodes) * e.users * e.horizon
                << " records to " << out_path << '\n';
    } else if (*serve) {
      RunConfig cfg = config_or_default(config_path);
      std::vector<std::string> warnings;
      TraceProvider traces = make_trace_provider(cfg, opt_path(traces_path), &warnings);
      print_warnings(warnings);
      EnvServer server(cfg.env, traces);
      const int port = server.listen(listen);
      std::cout << "listening on port " << port << std::endl;
      server.serve();
    } else if (*run) {
      RunConfig cfg = config_or_default(config_path);
      std::vector<std::string> warnings;
      TraceProvider traces = make_trace_provider(cfg, opt_path(traces_path), &warnings);
      print_warnings(warnings);
      auto policy = make_baseline(parse_baseline_kind(kind), cfg.env.users, cfg.env.window_len);
      const int n = episodes > 0 ? episodes : cfg.episodes;
      if (n > traces.episodes())
        throw std::runtime_error("requested " + std::to_string(n) + " episodes, traces have " +
                                 std::to_string(traces.episodes()));
      std::optional<std::ofstream> rec, ev;
      std::optional<ActionLogWriter> writer;
      if (!record_path.empty()) writer.emplace(rec.emplace(open_out(record_path)), cfg, policy->name());
      if (!events_path.empty()) ev.emplace(open_out(events_path));
      auto rows = evaluate_policy(*policy, cfg, traces, first_episodes(n), writer ? &*writer : nullptr,
                                  ev ? &*ev : nullptr);
      save_metrics_csv(out_path, rows, {config_hash(cfg), cfg.seed});
    } else if (*eval) {
      RunConfig cfg = config_or_default(config_path);
      std::ifstream in(actions_path);
      if (!in) throw std::runtime_error("cannot open '" + actions_path + "'");
      ReplayPolicy policy(in, cfg.env.users, cfg.env.window_len);
      if (policy.recorded_config_hash() != config_hash(cfg))
        std::cerr << "warning: action log was recorded with config " << policy.recorded_config_hash()
                  << ", replaying with " << config_hash(cfg) << '\n';
      std::vector<std::string> warnings;
      TraceProvider traces = make_trace_provider(cfg, opt_path(traces_path), &warnings);
      print_warnings(warnings);
      std::optional<std::ofstream> ev;
      if (!events_path.empty()) ev.emplace(open_out(events_path));
      auto rows = evaluate_policy(policy, cfg, traces, policy.episodes(), nullptr, ev ? &*ev : nullptr);
      save_metrics_csv(out_path, rows, {config_hash(cfg), cfg.seed});
    } else if (*sweep) {
      RunConfig cfg = config_or_default(config_path);
      SweepSpec spec;
      spec.variable = parse_sweep_variable(var);
      spec.grid = parse_grid(grid);
      spec.policy = parse_baseline_kind(kind);
      if (episodes > 0) spec.episodes = episodes;
      spec.jobs = jobs;
      auto points = run_sweep(spec, cfg, opt_path(traces_path));
      std::ofstream out = open_out(out_path);
      write_sweep_csv(out, spec, points, {config_hash(cfg), cfg.seed});
      int failed = 0;
      for (const auto& p : points)
        if (!p.metrics) {
          ++failed;
          std::cerr << "point " << p.value << " failed: " << p.error << '\n';
        }
      if (failed) return 3;
    } else if (*show) {
      write_config(std::cout, config_or_default(config_path));
    }
  } catch (const std::exception& e) {
    std::cerr << "edgevr: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "edgevr/harness.hpp"

using namespace edgevr;

namespace {

RunConfig parse(const std::string& text, const std::string& source = "t.cfg") {
  std::istringstream in(text);
  return parse_config(in, source);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

RunConfig small_run() {
  RunConfig cfg;
  cfg.episodes = 2;
  cfg.env.horizon = 30;
  cfg.seed = 9;
  return cfg;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("edgevr_test_" + name);
}

}  // namespace

TEST_CASE("config text round trip") {
  RunConfig cfg;
  cfg.env.users = 3;
  cfg.env.total_bandwidth_hz = 123.456e6;
  cfg.env.channel.redraw_per_slot = false;
  cfg.env.workload.mobility = Mobility::random_waypoint;
  cfg.env.workload.fg_vertices = {2000, 3000};
  cfg.env.aqm_reward = false;
  cfg.seed = 77;
  const std::string text = config_text(cfg);
  const RunConfig back = parse(text);
  CHECK(config_text(back) == text);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(back.env.users == 3);
  CHECK(back.env.total_bandwidth_hz == 123.456e6);
  CHECK_FALSE(back.env.channel.redraw_per_slot);
  CHECK(back.env.workload.mobility == Mobility::random_waypoint);
  CHECK(back.env.workload.fg_vertices.hi == 3000);
  CHECK_FALSE(back.env.aqm_reward);
  CHECK(back.seed == 77);

  CHECK(config_hash(cfg).size() == 16);
  RunConfig other = cfg;
  other.env.zeta = 0.2;
  CHECK(config_hash(other) != config_hash(cfg));
  CHECK(config_text(parse("")) == config_text(RunConfig{}));
}

TEST_CASE("config errors") {
  std::string e = error_of("sim.users = 3\nsim.bogus = 1\n");
  CHECK(e.find("t.cfg:2") != std::string::npos);
  CHECK(e.find("bogus") != std::string::npos);
  e = error_of("# comment\nsim.users = 3\nsim.users = 4\n");
  CHECK(e.find("t.cfg:3") != std::string::npos);
  CHECK(e.find("duplicate") != std::string::npos);
  CHECK(error_of("sim.users = three\n").find("sim.users") != std::string::npos);
  CHECK(error_of("sim.users 3\n").find("t.cfg:1") != std::string::npos);
  CHECK(error_of("obs.aqm_state = maybe\n").find("obs.aqm_state") != std::string::npos);
  CHECK(error_of("sim.fps = 50\n").find("sim.slot_s") != std::string::npos);
  CHECK(error_of("sim.fps = 50\nsim.slot_s = 0.02\n").empty());
  CHECK(error_of("edge.bandwidth_hz = -5\n").find("bandwidth") != std::string::npos);
  CHECK(error_of("workload.mobility = teleport\n").find("workload.mobility") != std::string::npos);
  CHECK_THROWS_AS(load_config(temp_path("missing.cfg")), ConfigError);
}

TEST_CASE("config file") {
  RunConfig cfg;
  cfg.env.device_gpu_hz = 2.5e9;
  const auto path = temp_path("cfg.cfg");
  save_config(path, cfg);
  CHECK(config_hash(load_config(path)) == config_hash(cfg));
  std::filesystem::remove(path);
}

TEST_CASE("metrics csv") {
  std::ostringstream empty;
  write_metrics_csv(empty, {}, {"0123456789abcdef", 5});
  CHECK(empty.str() ==
        "# config_hash=0123456789abcdef seed=5\n"
        "episode,mean_age_ms,mean_energy_j,mean_cost,drops_total,feasible_fraction\n");
  std::istringstream empty_in(empty.str());
  CHECK(read_metrics_csv(empty_in).empty());

  std::vector<MetricsRow> rows{{"0", 268.34, 44.8125, 4.25, 1201, 0.125},
                               {"1", 40.0, 10.0, 0.0, 0, 1.0},
                               {"2", 123.456789012, 1.5e-3, 2.5, 17, 0.75}};
  std::ostringstream out;
  write_metrics_csv(out, rows, {"0123456789abcdef", 5});
  std::istringstream in(out.str());
  const auto back = read_metrics_csv(in);
  REQUIRE(back.size() == 4);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i].episode == rows[i].episode);
    CHECK(back[i].mean_age_ms == rows[i].mean_age_ms);
    CHECK(back[i].mean_energy_j == rows[i].mean_energy_j);
    CHECK(back[i].mean_cost == rows[i].mean_cost);
    CHECK(back[i].drops_total == rows[i].drops_total);
    CHECK(back[i].feasible_fraction == rows[i].feasible_fraction);
  }
  CHECK(back[3].episode == "ALL");
  CHECK(back[3].mean_age_ms == doctest::Approx((268.34 + 40.0 + 123.456789012) / 3).epsilon(1e-11));
  CHECK(back[3].drops_total == doctest::Approx(406.0).epsilon(1e-11));
  CHECK(back[3].feasible_fraction == doctest::Approx(0.625).epsilon(1e-11));

  std::istringstream bad("# x\nepisode,a,b\n");
  CHECK_THROWS(read_metrics_csv(bad));
}

TEST_CASE("grid parsing") {
  const auto g = parse_grid("100e6:800e6:100e6");
  REQUIRE(g.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(g[i] == doctest::Approx((i + 1) * 100e6).epsilon(1e-12));
  CHECK(parse_grid("1e9, 2.5e9,4e9") == std::vector<double>{1e9, 2.5e9, 4e9});
  CHECK(parse_grid("5:5:1").size() == 1);
  CHECK_THROWS_AS(parse_grid("1:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("5:1:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("1:2:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("1,x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid(""), std::invalid_argument);
  CHECK(parse_sweep_variable("bandwidth") == SweepVariable::bandwidth);
  CHECK(parse_sweep_variable("gpu") == SweepVariable::gpu);
  CHECK_THROWS_AS(parse_sweep_variable("power"), std::invalid_argument);
}

TEST_CASE("metric definitions") {
  const RunConfig cfg = small_run();
  const TraceProvider traces = make_trace_provider(cfg, std::nullopt);
  RandomPolicy policy(5, 5);
  const auto rows = evaluate_policy(policy, cfg, traces, {0, 1});
  REQUIRE(rows.size() == 2);

  // Recompute episode 1 by driving the environment directly.
  Environment env(cfg.env, traces);
  RandomPolicy again(5, 5);
  Eigen::VectorXd obs = env.reset(1, cfg.seed);
  again.begin_episode(1, cfg.seed);
  double age = 0, energy = 0, cost = 0, drops = 0, frames = 0, merged = 0;
  while (!env.done()) {
    const StepResult r = env.step(again.act({1, env.slot(), &obs}));
    obs = r.obs;
    for (const auto& f : r.info.frames) {
      age += f.age_s;
      frames += 1;
      merged += f.merged;
      cost += !f.merged;
    }
    for (int u = 0; u < 5; ++u) {
      energy += r.info.energy_j[u];
      for (int c : r.info.drops[u]) drops += c;
    }
  }
  CHECK(rows[1].episode == "1");
  CHECK(rows[1].mean_age_ms == doctest::Approx(1e3 * age / frames).epsilon(1e-12));
  CHECK(rows[1].mean_energy_j == doctest::Approx(energy / (5.0 * 30)).epsilon(1e-12));
  CHECK(rows[1].mean_cost == doctest::Approx(cost / 30).epsilon(1e-12));
  CHECK(rows[1].drops_total == drops);
  CHECK(rows[1].feasible_fraction == doctest::Approx(merged / frames).epsilon(1e-12));
  CHECK(rows[1].mean_cost > 0.0);

  const MetricsRow all = aggregate(rows);
  CHECK(all.episode == "ALL");
  CHECK(all.mean_age_ms == doctest::Approx((rows[0].mean_age_ms + rows[1].mean_age_ms) / 2));

  RandomPolicy third(5, 5);
  const auto repeat = evaluate_policy(third, cfg, traces, {0, 1});
  CHECK(repeat[0].mean_age_ms == rows[0].mean_age_ms);
  CHECK(repeat[1].mean_energy_j == rows[1].mean_energy_j);
}

TEST_CASE("action log replay") {
  const RunConfig cfg = small_run();
  const TraceProvider traces = make_trace_provider(cfg, std::nullopt);
  RandomPolicy policy(5, 5);
  std::stringstream log;
  ActionLogWriter writer(log, cfg, policy.name());
  const auto rows = evaluate_policy(policy, cfg, traces, first_episodes(2), &writer);

  ReplayPolicy replay(log, 5, 5);
  CHECK(replay.recorded_config_hash() == config_hash(cfg));
  CHECK(replay.recorded_seed() == cfg.seed);
  CHECK(replay.episodes() == std::vector<int>{0, 1});
  CHECK(replay.name() == "replay:random");
  const auto again = evaluate_policy(replay, cfg, traces, replay.episodes());
  REQUIRE(again.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(again[i].mean_age_ms == rows[i].mean_age_ms);
    CHECK(again[i].mean_energy_j == rows[i].mean_energy_j);
    CHECK(again[i].drops_total == rows[i].drops_total);
  }
  CHECK_THROWS(replay.act({5, 0, nullptr}));

  std::istringstream empty("");
  CHECK_THROWS(ReplayPolicy(empty, 5, 5));
}

TEST_CASE("event log") {
  RunConfig cfg = small_run();
  cfg.env.horizon = 5;
  const TraceProvider traces = make_trace_provider(cfg, std::nullopt);
  auto policy = make_baseline(BaselineKind::meclf, 5, 5);
  std::ostringstream events;
  evaluate_policy(*policy, cfg, traces, {0}, nullptr, &events);
  std::istringstream in(events.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++n;
    std::istringstream ls(line);
    int ep = -1, user = -1;
    double t = -1;
    unsigned long long tile = 0;
    std::string from, to;
    ls >> ep >> t >> user >> tile >> from >> to;
    CHECK(ep == 0);
    CHECK(t >= 0.0);
    CHECK(user >= 0);
    CHECK(user < 5);
    CHECK(!to.empty());
  }
  CHECK(n > 0);
}

TEST_CASE("trace file provider") {
  const RunConfig cfg = small_run();
  const auto path = temp_path("traces.txt");
  save_traces(path, generate_traces(cfg.env.workload_params(), cfg.env.channel, 2, 5, 30, cfg.seed));
  const TraceProvider from_file = make_trace_provider(cfg, path);
  const TraceProvider generated = make_trace_provider(cfg, std::nullopt);
  CHECK(from_file.episodes() == 2);
  CHECK(from_file.episode(1).records == generated.episode(1).records);

  RunConfig longer = cfg;
  longer.env.horizon = 60;
  CHECK_THROWS(make_trace_provider(longer, path));
  std::filesystem::remove(path);
}

TEST_CASE("sweep records failing points") {
  RunConfig cfg = small_run();
  cfg.env.horizon = 10;
  SweepSpec spec;
  spec.grid = {-1.0, 200e6, 400e6};
  spec.episodes = 1;
  spec.jobs = 2;
  const auto points = run_sweep(spec, cfg);
  REQUIRE(points.size() == 3);
  CHECK_FALSE(points[0].metrics);
  CHECK(!points[0].error.empty());
  CHECK(points[1].metrics);
  CHECK(points[2].metrics);

  // Same point alone gives the same numbers.
  spec.grid = {400e6};
  spec.jobs = 1;
  CHECK(run_sweep(spec, cfg)[0].metrics->mean_age_ms == points[2].metrics->mean_age_ms);

  std::ostringstream out;
  write_sweep_csv(out, spec, points, {config_hash(cfg), cfg.seed});
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[1].rfind("bandwidth_hz,mean_age_ms", 0) == 0);
  CHECK(lines[2].rfind("-1,,,,,", 0) == 0);
  CHECK(lines[3].back() == ',');
}

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

// Run configuration, metrics CSV, action logs and sweeps.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "edgevr/baselines.hpp"
#include "edgevr/env.hpp"
#include "edgevr/workload.hpp"

namespace edgevr {

struct RunConfig {
  EnvConfig env;
  int episodes = 1000;
  double fps = 100.0;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat "section.key = value" text; '#' starts a comment. Unknown or
/// repeated keys are errors. Keys not present keep their defaults.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const RunConfig& cfg);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);
std::string config_text(const RunConfig& cfg);
/// FNV-1a of the canonical config text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Episode traces from a file (validated against the config) or generated
/// on demand from the config seed. Range warnings are appended to
/// `warnings` when given.
TraceProvider make_trace_provider(const RunConfig& cfg, const std::optional<std::filesystem::path>& traces,
                                  std::vector<std::string>* warnings = nullptr);

struct MetricsRow {
  std::string episode;  // episode id or "ALL"
  double mean_age_ms = 0.0;
  double mean_energy_j = 0.0;
  double mean_cost = 0.0;
  double drops_total = 0.0;
  double feasible_fraction = 0.0;
};

/// Mean of the per-episode values, labelled ALL.
MetricsRow aggregate(const std::vector<MetricsRow>& rows);

struct CsvProvenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// Header, one row per episode, then the ALL row (omitted when empty).
/// Numbers use 12 significant digits.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows,
                       const CsvProvenance& prov);
void save_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows,
                      const CsvProvenance& prov);
/// Rows in file order (the ALL row included).
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

/// JSON-lines action log: a header object, then one line per step.
class ActionLogWriter {
 public:
  ActionLogWriter(std::ostream& out, const RunConfig& cfg, const std::string& policy);
  void record(int episode, int slot, const RawAction& action);

 private:
  std::ostream& out_;
};

class ReplayPolicy : public Policy {
 public:
  /// Reads a log written by ActionLogWriter.
  ReplayPolicy(std::istream& in, int users, int window_len);
  std::string name() const override { return "replay:" + recorded_policy_; }
  RawAction act(const PolicyContext& ctx) override;
  std::vector<int> episodes() const;
  const std::string& recorded_config_hash() const { return config_hash_; }
  std::uint64_t recorded_seed() const { return seed_; }

 private:
  std::map<std::pair<int, int>, RawAction> actions_;
  std::string recorded_policy_;
  std::string config_hash_;
  std::uint64_t seed_ = 0;
};

/// One line per transition: episode time_s user tile from to.
void write_tile_events(std::ostream& out, int episode, const std::vector<TileEvent>& events);

/// Runs the given episodes; one metrics row each. Tile transitions go to
/// `event_log` when given.
std::vector<MetricsRow> evaluate_policy(Policy& policy, const RunConfig& cfg,
                                        const TraceProvider& traces,
                                        const std::vector<int>& episodes,
                                        ActionLogWriter* log = nullptr,
                                        std::ostream* event_log = nullptr);
std::vector<int> first_episodes(int n);

enum class SweepVariable { bandwidth, gpu };
SweepVariable parse_sweep_variable(std::string_view name);

/// "lo:hi:step" (inclusive) or a comma-separated list.
std::vector<double> parse_grid(std::string_view text);

struct SweepSpec {
  SweepVariable variable = SweepVariable::bandwidth;
  std::vector<double> grid;
  BaselineKind policy = BaselineKind::plf;
  int episodes = 10;
  int jobs = 1;
};

struct SweepPoint {
  double value = 0.0;
  std::optional<MetricsRow> metrics;
  std::string error;
};

/// Every point uses the same seed and episode ids. Failures are recorded
/// per point and the sweep continues.
std::vector<SweepPoint> run_sweep(const SweepSpec& spec, const RunConfig& cfg,
                                  const std::optional<std::filesystem::path>& traces = std::nullopt);
void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepPoint>& points,
                     const CsvProvenance& prov);

}  // namespace edgevr

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

#include "edgevr/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <variant>

#include "edgevr/protocol.hpp"
#include "numfmt.hpp"

namespace edgevr {

namespace {

using detail::format_double;
using detail::parse_double;
using detail::parse_int;
using detail::trim;

using FieldRef = std::variant<double*, int*, bool*, std::int64_t*, std::uint64_t*, Mobility*>;

std::vector<std::pair<std::string_view, FieldRef>> config_fields(RunConfig& c) {
  auto& e = c.env;
  auto& ch = e.channel;
  auto& w = e.workload;
  return {
      {"sim.users", &e.users},
      {"sim.horizon", &e.horizon},
      {"sim.episodes", &c.episodes},
      {"sim.window_len", &e.window_len},
      {"sim.fps", &c.fps},
      {"sim.slot_s", &e.slot_s},
      {"sim.mtp_s", &e.mtp_s},
      {"sim.atw_penalty_s", &e.atw_penalty_s},
      {"sim.seed", &c.seed},
      {"pipeline.merge_s", &e.merge_s},
      {"pipeline.compress_s", &e.compress_s},
      {"pipeline.decompress_s", &e.decompress_s},
      {"pipeline.strict_compress_threshold", &e.strict_compress_threshold},
      {"edge.bandwidth_hz", &e.total_bandwidth_hz},
      {"edge.gpu_hz", &e.total_edge_gpu_hz},
      {"device.gpu_hz", &e.device_gpu_hz},
      {"device.beta", &e.beta},
      {"device.decompress_energy_j", &e.decompress_energy_j},
      {"reward.zeta", &e.zeta},
      {"reward.drop_penalty", &e.drop_penalty},
      {"reward.aqm_penalty", &e.aqm_reward},
      {"reward.cost_limit", &e.cost_limit},
      {"obs.queue_len", &e.queue_features},
      {"obs.aqm_state", &e.aqm_state},
      {"obs.load_scale_cycles", &e.scales.load_cycles},
      {"obs.frequency_scale_hz", &e.scales.frequency_hz},
      {"obs.size_scale_bits", &e.scales.size_bits},
      {"obs.time_scale_s", &e.scales.time_s},
      {"obs.channel_scale", &e.scales.channel_gain},
      {"channel.carrier_freq_hz", &ch.carrier_freq_hz},
      {"channel.tx_power_w", &ch.tx_power_w},
      {"channel.noise_psd_w_per_hz", &ch.noise_psd_w_per_hz},
      {"channel.mainlobe_beamwidth_rad", &ch.mainlobe_beamwidth_rad},
      {"channel.mainlobe_gain_linear", &ch.mainlobe_gain_linear},
      {"channel.sidelobe_gain_linear", &ch.sidelobe_gain_linear},
      {"channel.shadow_los_db", &ch.shadow_los_db},
      {"channel.shadow_nlos_db", &ch.shadow_nlos_db},
      {"channel.min_distance_m", &ch.min_distance_m},
      {"channel.room_size_m", &ch.room_size_m},
      {"channel.redraw_per_slot", &ch.redraw_per_slot},
      {"workload.bits_per_pixel", &w.bits_per_pixel},
      {"workload.screen_width", &w.screen_width},
      {"workload.screen_height", &w.screen_height},
      {"workload.fg_pixel_fraction_min", &w.fg_pixel_fraction.lo},
      {"workload.fg_pixel_fraction_max", &w.fg_pixel_fraction.hi},
      {"workload.fg_vertices_min", &w.fg_vertices.lo},
      {"workload.fg_vertices_max", &w.fg_vertices.hi},
      {"workload.bg_vertices_min", &w.bg_vertices.lo},
      {"workload.bg_vertices_max", &w.bg_vertices.hi},
      {"workload.fg_vertex_complexity_min", &w.fg_vertex_complexity.lo},
      {"workload.fg_vertex_complexity_max", &w.fg_vertex_complexity.hi},
      {"workload.bg_vertex_complexity_min", &w.bg_vertex_complexity.lo},
      {"workload.bg_vertex_complexity_max", &w.bg_vertex_complexity.hi},
      {"workload.fg_pixel_complexity_min", &w.fg_pixel_complexity.lo},
      {"workload.fg_pixel_complexity_max", &w.fg_pixel_complexity.hi},
      {"workload.bg_pixel_complexity_min", &w.bg_pixel_complexity.lo},
      {"workload.bg_pixel_complexity_max", &w.bg_pixel_complexity.hi},
      {"workload.compression_ratio", &w.compression_ratio},
      {"workload.mobility", &w.mobility},
      {"workload.waypoint_step_m", &w.waypoint_step_m},
      {"workload.temporal_smoothing", &w.temporal_smoothing},
  };
}

struct FormatField {
  std::string operator()(const double* v) const { return format_double(*v); }
  std::string operator()(const int* v) const { return std::to_string(*v); }
  std::string operator()(const bool* v) const { return *v ? "true" : "false"; }
  std::string operator()(const std::int64_t* v) const { return std::to_string(*v); }
  std::string operator()(const std::uint64_t* v) const { return std::to_string(*v); }
  std::string operator()(const Mobility* v) const {
    return *v == Mobility::static_position ? "static" : "random_waypoint";
  }
};

/// Returns an error message, empty on success.
std::string assign_field(const FieldRef& ref, std::string_view text) {
  return std::visit(
      [&](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          auto v = parse_double(text);
          if (!v) return "expected a number";
          *p = *v;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1") *p = true;
          else if (text == "false" || text == "0") *p = false;
          else return "expected true or false";
        } else if constexpr (std::is_same_v<T, Mobility>) {
          if (text == "static") *p = Mobility::static_position;
          else if (text == "random_waypoint") *p = Mobility::random_waypoint;
          else return "expected static or random_waypoint";
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          auto v = parse_int(text);
          if (!v || *v < 0) {
            // Full unsigned range.
            std::uint64_t u = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), u);
            if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
              return "expected a non-negative integer";
            *p = u;
          } else {
            *p = static_cast<std::uint64_t>(*v);
          }
        } else {
          auto v = parse_int(text);
          if (!v) return "expected an integer";
          if constexpr (std::is_same_v<T, int>) {
            if (*v < INT32_MIN || *v > INT32_MAX) return "integer out of range";
          }
          *p = static_cast<T>(*v);
        }
        return {};
      },
      ref);
}

std::string csv_number(double v) { return format_double(v, 12); }

}  // namespace

void RunConfig::validate() const {
  if (episodes < 1) throw ConfigError("sim.episodes must be >= 1");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw ConfigError("sim.fps must be positive");
  if (std::abs(env.slot_s * fps - 1.0) > 1e-9)
    throw ConfigError("sim.slot_s must equal 1/sim.fps (slot_s=" + format_double(env.slot_s) +
                      ", fps=" + format_double(fps) + ")");
  try {
    env.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  auto fields = config_fields(cfg);
  std::set<std::string, std::less<>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string_view key = trim(s.substr(0, eq));
    const std::string_view value = trim(s.substr(eq + 1));
    auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == key; });
    if (it == fields.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second)
      throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    if (std::string err = assign_field(it->second, value); !err.empty())
      throw ConfigError(where + std::string(key) + ": " + err + ", got '" + std::string(value) + "'");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_config(in, path.string());
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string_view section;
  for (const auto& [key, ref] : config_fields(copy)) {
    const auto sec = key.substr(0, key.find('.'));
    if (sec != section) {
      if (!section.empty()) out << '\n';
      section = sec;
    }
    out << key << " = " << std::visit(FormatField{}, ref) << '\n';
  }
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config '" + path.string() + "'");
  write_config(out, cfg);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string config_text(const RunConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(config_text(cfg))));
  return buf;
}

TraceProvider make_trace_provider(const RunConfig& cfg,
                                  const std::optional<std::filesystem::path>& traces,
                                  std::vector<std::string>* warnings) {
  const auto& e = cfg.env;
  if (!traces)
    return TraceProvider::generated(e.workload_params(), e.channel, e.users, e.horizon,
                                    cfg.episodes, cfg.seed);
  const WorkloadParams wp = e.workload_params();
  auto loaded = load_traces(*traces, &wp, e.channel.room_size_m);
  const TraceSet& t = loaded.traces;
  const std::string where = "traces '" + traces->string() + "': ";
  if (t.users != e.users)
    throw std::runtime_error(where + std::to_string(t.users) + " users, config has " + std::to_string(e.users));
  if (t.window_len != e.window_len)
    throw std::runtime_error(where + "window " + std::to_string(t.window_len) + ", config has " +
                             std::to_string(e.window_len));
  if (t.horizon < e.horizon)
    throw std::runtime_error(where + "horizon " + std::to_string(t.horizon) + " is shorter than sim.horizon " +
                             std::to_string(e.horizon));
  if (warnings)
    warnings->insert(warnings->end(), loaded.warnings.begin(), loaded.warnings.end());
  return TraceProvider::from_set(std::make_shared<const TraceSet>(std::move(loaded.traces)));
}

// ---------------------------------------------------------------------------

MetricsRow aggregate(const std::vector<MetricsRow>& rows) {
  MetricsRow all;
  all.episode = "ALL";
  if (rows.empty()) return all;
  for (const auto& r : rows) {
    all.mean_age_ms += r.mean_age_ms;
    all.mean_energy_j += r.mean_energy_j;
    all.mean_cost += r.mean_cost;
    all.drops_total += r.drops_total;
    all.feasible_fraction += r.feasible_fraction;
  }
  const double n = static_cast<double>(rows.size());
  all.mean_age_ms /= n;
  all.mean_energy_j /= n;
  all.mean_cost /= n;
  all.drops_total /= n;
  all.feasible_fraction /= n;
  return all;
}

static const char* kMetricsColumns =
    "mean_age_ms,mean_energy_j,mean_cost,drops_total,feasible_fraction";

static void write_row_values(std::ostream& out, const MetricsRow& r) {
  out << csv_number(r.mean_age_ms) << ',' << csv_number(r.mean_energy_j) << ','
      << csv_number(r.mean_cost) << ',' << csv_number(r.drops_total) << ','
      << csv_number(r.feasible_fraction);
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows,
                       const CsvProvenance& prov) {
  out << "# config_hash=" << prov.config_hash << " seed=" << prov.seed << '\n';
  out << "episode," << kMetricsColumns << '\n';
  if (rows.empty()) return;
  for (const auto& r : rows) {
    out << r.episode << ',';
    write_row_values(out, r);
    out << '\n';
  }
  const MetricsRow all = aggregate(rows);
  out << all.episode << ',';
  write_row_values(out, all);
  out << '\n';
}

void save_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows,
                      const CsvProvenance& prov) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_metrics_csv(out, rows, prov);
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::vector<MetricsRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != std::string("episode,") + kMetricsColumns)
        throw std::runtime_error("metrics csv: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string_view> cells;
    std::string_view s = line;
    for (;;) {
      const auto comma = s.find(',');
      cells.push_back(s.substr(0, comma));
      if (comma == std::string_view::npos) break;
      s.remove_prefix(comma + 1);
    }
    if (cells.size() != 6) throw std::runtime_error("metrics csv: expected 6 columns: " + line);
    MetricsRow r;
    r.episode = std::string(cells[0]);
    double* dst[] = {&r.mean_age_ms, &r.mean_energy_j, &r.mean_cost, &r.drops_total,
                     &r.feasible_fraction};
    for (int i = 0; i < 5; ++i) {
      auto v = parse_double(cells[i + 1]);
      if (!v) throw std::runtime_error("metrics csv: bad number '" + std::string(cells[i + 1]) + "'");
      *dst[i] = *v;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------

ActionLogWriter::ActionLogWriter(std::ostream& out, const RunConfig& cfg, const std::string& policy)
    : out_(out) {
  nlohmann::json header{{"config_hash", config_hash(cfg)}, {"seed", cfg.seed}, {"policy", policy}};
  out_ << header.dump() << '\n';
}

void ActionLogWriter::record(int episode, int slot, const RawAction& action) {
  nlohmann::json line{{"episode", episode}, {"slot", slot}, {"action", action_to_json(action)}};
  out_ << line.dump() << '\n';
}

ReplayPolicy::ReplayPolicy(std::istream& in, int users, int window_len) {
  std::string line;
  long lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("action log line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!header) {
      if (!j.contains("config_hash") || !j.contains("seed"))
        throw std::runtime_error("action log: missing header line");
      config_hash_ = j["config_hash"].get<std::string>();
      seed_ = j["seed"].get<std::uint64_t>();
      recorded_policy_ = j.value("policy", std::string("unknown"));
      header = true;
      continue;
    }
    try {
      const int ep = j.at("episode").get<int>();
      const int slot = j.at("slot").get<int>();
      actions_[{ep, slot}] = action_from_json(j.at("action"), users, window_len);
    } catch (const std::exception& e) {
      throw std::runtime_error("action log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header) throw std::runtime_error("action log is empty");
}

RawAction ReplayPolicy::act(const PolicyContext& ctx) {
  auto it = actions_.find({ctx.episode, ctx.slot});
  if (it == actions_.end())
    throw std::runtime_error("action log has no entry for episode " + std::to_string(ctx.episode) +
                             " slot " + std::to_string(ctx.slot));
  return it->second;
}

std::vector<int> ReplayPolicy::episodes() const {
  std::vector<int> out;
  for (const auto& [key, a] : actions_)
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  return out;
}

std::vector<int> first_episodes(int n) {
  std::vector<int> ids(std::max(0, n));
  for (int i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

void write_tile_events(std::ostream& out, int episode, const std::vector<TileEvent>& events) {
  for (const auto& e : events)
    out << episode << ' ' << format_double(e.time_s) << ' ' << e.user << ' ' << e.tile << ' '
        << stage_name(e.from) << ' ' << stage_name(e.to) << '\n';
}

std::vector<MetricsRow> evaluate_policy(Policy& policy, const RunConfig& cfg,
                                        const TraceProvider& traces,
                                        const std::vector<int>& episodes, ActionLogWriter* log,
                                        std::ostream* event_log) {
  Environment env(cfg.env, traces);
  std::vector<TileEvent> events;
  if (event_log) env.set_event_log(&events);
  const int U = cfg.env.users;
  std::vector<MetricsRow> rows;
  rows.reserve(episodes.size());
  for (int ep : episodes) {
    Eigen::VectorXd obs = env.reset(ep, cfg.seed);
    policy.begin_episode(ep, cfg.seed);
    double age = 0.0, energy = 0.0, cost = 0.0, drops = 0.0;
    long frames = 0, merged = 0;
    while (!env.done()) {
      PolicyContext ctx{ep, env.slot(), &obs};
      const RawAction a = policy.act(ctx);
      if (log) log->record(ep, ctx.slot, a);
      StepResult r = env.step(a);
      cost += r.cost;
      for (const auto& f : r.info.frames) {
        age += f.age_s;
        ++frames;
        if (f.merged) ++merged;
      }
      for (int u = 0; u < U; ++u) {
        energy += r.info.energy_j[u];
        for (int c : r.info.drops[u]) drops += c;
      }
      obs = std::move(r.obs);
      if (event_log) {
        write_tile_events(*event_log, ep, events);
        events.clear();
      }
    }
    MetricsRow row;
    row.episode = std::to_string(ep);
    row.mean_age_ms = frames ? 1e3 * age / static_cast<double>(frames) : 0.0;
    row.mean_energy_j = energy / (static_cast<double>(U) * cfg.env.horizon);
    row.mean_cost = cost / cfg.env.horizon;
    row.drops_total = drops;
    row.feasible_fraction = frames ? static_cast<double>(merged) / static_cast<double>(frames) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

SweepVariable parse_sweep_variable(std::string_view name) {
  if (name == "bandwidth") return SweepVariable::bandwidth;
  if (name == "gpu") return SweepVariable::gpu;
  throw std::invalid_argument("unknown sweep variable '" + std::string(name) +
                              "' (expected bandwidth or gpu)");
}

std::vector<double> parse_grid(std::string_view text) {
  auto number = [&](std::string_view s) {
    auto v = parse_double(trim(s));
    if (!v || !std::isfinite(*v))
      throw std::invalid_argument("grid: bad number '" + std::string(s) + "'");
    return *v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) throw std::invalid_argument("grid: expected lo:hi:step");
    const double lo = number(text.substr(0, a));
    const double hi = number(text.substr(a + 1, b - a - 1));
    const double step = number(text.substr(b + 1));
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("grid: need step > 0 and hi >= lo");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (long i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  } else {
    std::string_view s = text;
    for (;;) {
      const auto comma = s.find(',');
      out.push_back(number(s.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      s.remove_prefix(comma + 1);
    }
  }
  if (out.empty()) throw std::invalid_argument("grid is empty");
  return out;
}

std::vector<SweepPoint> run_sweep(const SweepSpec& spec, const RunConfig& cfg,
                                  const std::optional<std::filesystem::path>& traces) {
  if (spec.grid.empty()) throw std::invalid_argument("sweep grid is empty");
  auto run_point = [&](double value) {
    SweepPoint pt;
    pt.value = value;
    try {
      RunConfig c = cfg;
      if (spec.variable == SweepVariable::bandwidth)
        c.env.total_bandwidth_hz = value;
      else
        c.env.total_edge_gpu_hz = value;
      c.validate();
      const TraceProvider provider = make_trace_provider(c, traces);
      auto policy = make_baseline(spec.policy, c.env.users, c.env.window_len);
      pt.metrics = aggregate(evaluate_policy(*policy, c, provider, first_episodes(spec.episodes)));
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
    return pt;
  };

  std::vector<SweepPoint> points(spec.grid.size());
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, spec.jobs));
  for (std::size_t start = 0; start < spec.grid.size(); start += jobs) {
    std::vector<std::future<SweepPoint>> batch;
    const std::size_t end = std::min(spec.grid.size(), start + jobs);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(std::async(std::launch::async, run_point, spec.grid[i]));
    for (std::size_t i = start; i < end; ++i) points[i] = batch[i - start].get();
  }
  return points;
}

void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepPoint>& points,
                     const CsvProvenance& prov) {
  const char* var = spec.variable == SweepVariable::bandwidth ? "bandwidth_hz" : "gpu_hz";
  out << "# config_hash=" << prov.config_hash << " seed=" << prov.seed
      << " policy=" << baseline_name(spec.policy) << " episodes=" << spec.episodes << '\n';
  out << var << ',' << kMetricsColumns << ",error\n";
  for (const auto& p : points) {
    out << csv_number(p.value) << ',';
    if (p.metrics) {
      write_row_values(out, *p.metrics);
      out << ",\n";
    } else {
      std::string err = p.error;
      for (char& c : err)
        if (c == ',' || c == '\n' || c == '"') c = ' ';
      out << ",,,,," << err << '\n';
    }
  }
}

}  // namespace edgevr

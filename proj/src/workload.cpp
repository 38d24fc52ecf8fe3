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

#include "edgevr/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "numfmt.hpp"

namespace edgevr {

namespace {

template <typename T>
void check_range(const Range<T>& r, const char* name, bool allow_zero = false) {
  const bool ok = allow_zero ? (r.lo >= 0) : (r.lo > 0);
  if (!ok || r.hi < r.lo)
    throw std::invalid_argument(std::string("workload.") + name + " must be a nonempty positive range");
}

std::mt19937_64 episode_rng(std::uint64_t seed, int episode, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode), stream};
  return std::mt19937_64(seq);
}

double draw_real(const Range<double>& r, std::mt19937_64& rng) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

std::int64_t draw_int(const Range<std::int64_t>& r, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::int64_t>(r.lo, r.hi)(rng);
}

double smooth(double prev, double draw, double weight) { return weight * prev + (1.0 - weight) * draw; }

std::int64_t smooth(std::int64_t prev, std::int64_t draw, double weight) {
  return std::llround(weight * static_cast<double>(prev) + (1.0 - weight) * static_cast<double>(draw));
}

constexpr std::uint32_t kTraceStream = 0x7ace5u;

}  // namespace

void WorkloadParams::validate() const {
  if (!(bits_per_pixel > 0.0)) throw std::invalid_argument("workload.bits_per_pixel must be positive");
  if (screen_width <= 0 || screen_height <= 0)
    throw std::invalid_argument("workload.screen_width/height must be positive");
  if (!(fg_pixel_fraction.lo >= 0.0 && fg_pixel_fraction.hi <= 1.0 &&
        fg_pixel_fraction.lo <= fg_pixel_fraction.hi))
    throw std::invalid_argument("workload.fg_pixel_fraction must be a range inside [0, 1]");
  check_range(fg_vertices, "fg_vertices");
  check_range(bg_vertices, "bg_vertices");
  check_range(fg_vertex_complexity, "fg_vertex_complexity");
  check_range(bg_vertex_complexity, "bg_vertex_complexity");
  check_range(fg_pixel_complexity, "fg_pixel_complexity");
  check_range(bg_pixel_complexity, "bg_pixel_complexity");
  if (window_len < 1) throw std::invalid_argument("workload.window_len must be >= 1");
  if (!(compression_ratio > 0.0 && compression_ratio <= 1.0))
    throw std::invalid_argument("workload.compression_ratio must lie in (0, 1]");
  if (!(waypoint_step_m >= 0.0)) throw std::invalid_argument("workload.waypoint_step_m must be >= 0");
  if (!(temporal_smoothing >= 0.0 && temporal_smoothing < 1.0))
    throw std::invalid_argument("workload.temporal_smoothing must lie in [0, 1)");
}

double estimate_flops(double vertex_complexity, double vertices, double pixel_complexity,
                      double pixels) {
  return vertex_complexity * vertices + pixel_complexity * pixels;
}

double foreground_size_bits(std::int64_t pixels, const WorkloadParams& params) {
  if (pixels < 0 || pixels > params.screen_pixels())
    throw std::domain_error("foreground_size_bits: pixel count outside [0, screen pixels]");
  return params.bits_per_pixel * static_cast<double>(pixels);
}

double background_size_bits(const WorkloadParams& params) {
  return params.bits_per_pixel * static_cast<double>(params.screen_pixels());
}

RequestProfile make_profile(const TrackRecord& rec, const WorkloadParams& params) {
  RequestProfile p;
  p.fg_load_cycles = estimate_flops(rec.fg.vertex_complexity, static_cast<double>(rec.fg.vertices),
                                    rec.fg.pixel_complexity, static_cast<double>(rec.fg.pixels));
  p.fg_size_bits = foreground_size_bits(rec.fg.pixels, params);
  p.bg_size_bits = background_size_bits(params);
  const double screen = static_cast<double>(params.screen_pixels());
  p.bg_loads_cycles.reserve(rec.bg_window.size());
  for (const auto& bg : rec.bg_window)
    p.bg_loads_cycles.push_back(estimate_flops(bg.vertex_complexity,
                                               static_cast<double>(bg.vertices),
                                               bg.pixel_complexity, screen));
  return p;
}

EpisodeTrace generate_episode(const WorkloadParams& params, const ChannelParams& room, int users,
                              int horizon, int episode, std::uint64_t seed) {
  params.validate();
  auto rng = episode_rng(seed, episode, kTraceStream);
  const double side = room.room_size_m;
  auto draw_pos = [&] {
    Position p;
    p.x_m = std::uniform_real_distribution<double>(0.0, side)(rng);
    p.y_m = std::uniform_real_distribution<double>(0.0, side)(rng);
    return p;
  };

  std::vector<Position> pos(users);
  std::vector<Position> waypoint(users);
  for (auto& p : pos) p = draw_pos();
  if (params.mobility == Mobility::random_waypoint)
    for (auto& w : waypoint) w = draw_pos();

  EpisodeTrace ep;
  ep.episode = episode;
  ep.users = users;
  ep.horizon = horizon;
  ep.records.reserve(static_cast<std::size_t>(users) * horizon);
  const double screen = static_cast<double>(params.screen_pixels());
  const double w = params.temporal_smoothing;

  for (int k = 0; k < horizon; ++k) {
    for (int u = 0; u < users; ++u) {
      if (params.mobility == Mobility::random_waypoint && k > 0) {
        const double dx = waypoint[u].x_m - pos[u].x_m;
        const double dy = waypoint[u].y_m - pos[u].y_m;
        const double dist = std::hypot(dx, dy);
        if (dist <= params.waypoint_step_m) {
          pos[u] = waypoint[u];
          waypoint[u] = draw_pos();
        } else {
          pos[u].x_m += dx / dist * params.waypoint_step_m;
          pos[u].y_m += dy / dist * params.waypoint_step_m;
        }
      }

      TrackRecord rec;
      rec.episode = episode;
      rec.user = u;
      rec.slot = k;
      rec.position = pos[u];
      rec.fg.vertices = draw_int(params.fg_vertices, rng);
      rec.fg.vertex_complexity = draw_real(params.fg_vertex_complexity, rng);
      rec.fg.pixel_complexity = draw_real(params.fg_pixel_complexity, rng);
      const double frac = draw_real(params.fg_pixel_fraction, rng);
      rec.fg.pixels = std::clamp<std::int64_t>(std::llround(frac * screen), 0, params.screen_pixels());
      rec.bg_window.resize(params.window_len);
      for (auto& bg : rec.bg_window) {
        bg.vertices = draw_int(params.bg_vertices, rng);
        bg.vertex_complexity = draw_real(params.bg_vertex_complexity, rng);
        bg.pixel_complexity = draw_real(params.bg_pixel_complexity, rng);
      }

      if (w > 0.0 && k > 0) {
        const TrackRecord& prev = ep.records[static_cast<std::size_t>(k - 1) * users + u];
        rec.fg.vertices = smooth(prev.fg.vertices, rec.fg.vertices, w);
        rec.fg.vertex_complexity = smooth(prev.fg.vertex_complexity, rec.fg.vertex_complexity, w);
        rec.fg.pixel_complexity = smooth(prev.fg.pixel_complexity, rec.fg.pixel_complexity, w);
        rec.fg.pixels = smooth(prev.fg.pixels, rec.fg.pixels, w);
        for (int j = 0; j < params.window_len; ++j) {
          auto& bg = rec.bg_window[j];
          const auto& pb = prev.bg_window[j];
          bg.vertices = smooth(pb.vertices, bg.vertices, w);
          bg.vertex_complexity = smooth(pb.vertex_complexity, bg.vertex_complexity, w);
          bg.pixel_complexity = smooth(pb.pixel_complexity, bg.pixel_complexity, w);
        }
      }
      ep.records.push_back(std::move(rec));
    }
  }
  return ep;
}

TraceSet generate_traces(const WorkloadParams& params, const ChannelParams& room,
                         int num_episodes, int users, int horizon, std::uint64_t seed) {
  TraceSet set;
  set.users = users;
  set.horizon = horizon;
  set.window_len = params.window_len;
  set.episodes.reserve(num_episodes);
  for (int e = 0; e < num_episodes; ++e)
    set.episodes.push_back(generate_episode(params, room, users, horizon, e, seed));
  return set;
}

// ---------------------------------------------------------------------------
// Trace file I/O

TraceParseError::TraceParseError(long record, std::string field, const std::string& what)
    : std::runtime_error(what), record_(record), field_(std::move(field)) {}

namespace {

constexpr const char* kMagic = "# edgevr-traces v1";

std::vector<std::string> column_names(int window_len) {
  std::vector<std::string> cols = {"episode", "user", "slot", "x", "y",
                                   "n_vf",    "c_vf", "c_pf", "n_pf"};
  for (int j = 0; j < window_len; ++j) {
    cols.push_back("n_vb" + std::to_string(j));
    cols.push_back("c_vb" + std::to_string(j));
    cols.push_back("c_pb" + std::to_string(j));
  }
  return cols;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

long header_value(std::string_view line, std::string_view key) {
  const std::string needle = std::string(key) + "=";
  const auto pos = line.find(needle);
  if (pos == std::string_view::npos)
    throw TraceParseError(-1, std::string(key), "trace header is missing '" + needle + "'");
  auto rest = line.substr(pos + needle.size());
  const auto end = rest.find_first_of(" \t\r");
  auto v = detail::parse_int(rest.substr(0, end));
  if (!v || *v < 0)
    throw TraceParseError(-1, std::string(key), "trace header has a bad value for '" + needle + "'");
  return static_cast<long>(*v);
}

template <typename T>
void warn_range(std::vector<std::string>& warnings, long idx, const char* field, T v,
                const Range<T>& r) {
  if (!r.contains(v)) {
    std::ostringstream os;
    os << "record " << idx << ": " << field << "=" << v << " outside [" << r.lo << ", " << r.hi
       << "]";
    warnings.push_back(os.str());
  }
}

}  // namespace

void write_traces(std::ostream& out, const TraceSet& traces) {
  out << kMagic << '\n';
  out << "# users=" << traces.users << " horizon=" << traces.horizon
      << " window=" << traces.window_len << " episodes=" << traces.episodes.size() << '\n';
  const auto cols = column_names(traces.window_len);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? " " : "") << cols[i];
  out << '\n';
  std::string line;
  for (const auto& ep : traces.episodes) {
    for (const auto& r : ep.records) {
      line.clear();
      line += std::to_string(r.episode);
      line += ' ';
      line += std::to_string(r.user);
      line += ' ';
      line += std::to_string(r.slot);
      line += ' ';
      line += detail::format_double(r.position.x_m);
      line += ' ';
      line += detail::format_double(r.position.y_m);
      line += ' ';
      line += std::to_string(r.fg.vertices);
      line += ' ';
      line += detail::format_double(r.fg.vertex_complexity);
      line += ' ';
      line += detail::format_double(r.fg.pixel_complexity);
      line += ' ';
      line += std::to_string(r.fg.pixels);
      for (const auto& bg : r.bg_window) {
        line += ' ';
        line += std::to_string(bg.vertices);
        line += ' ';
        line += detail::format_double(bg.vertex_complexity);
        line += ' ';
        line += detail::format_double(bg.pixel_complexity);
      }
      line += '\n';
      out << line;
    }
  }
}

void save_traces(const std::filesystem::path& path, const TraceSet& traces) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path.string());
  write_traces(out, traces);
  if (!out) throw std::runtime_error("error writing trace file: " + path.string());
}

TraceLoadResult read_traces(std::istream& in, const WorkloadParams* validate_against,
                            double room_size_m) {
  TraceLoadResult result;
  TraceSet& set = result.traces;
  std::string line;

  if (!std::getline(in, line) || detail::trim(line) != kMagic)
    throw TraceParseError(-1, "magic", "not an edgevr trace file (missing '" + std::string(kMagic) + "')");
  if (!std::getline(in, line)) throw TraceParseError(-1, "users", "trace header truncated");
  set.users = static_cast<int>(header_value(line, "users"));
  set.horizon = static_cast<int>(header_value(line, "horizon"));
  set.window_len = static_cast<int>(header_value(line, "window"));
  const long n_episodes = header_value(line, "episodes");
  if (set.users < 1 || set.horizon < 1 || set.window_len < 1)
    throw TraceParseError(-1, "users", "trace header dimensions must be positive");

  const auto cols = column_names(set.window_len);
  if (!std::getline(in, line)) throw TraceParseError(-1, "columns", "trace column header missing");
  {
    const auto got = split_ws(line);
    bool same = got.size() == cols.size();
    for (std::size_t i = 0; same && i < cols.size(); ++i) same = got[i] == cols[i];
    if (!same) throw TraceParseError(-1, "columns", "trace column header does not match the documented order");
  }

  const long per_episode = static_cast<long>(set.users) * set.horizon;
  const long total = n_episodes * per_episode;
  set.episodes.reserve(static_cast<std::size_t>(n_episodes));

  for (long idx = 0; idx < total; ++idx) {
    if (!std::getline(in, line))
      throw TraceParseError(idx, cols[0],
                            "trace truncated: expected " + std::to_string(total) +
                                " records, found " + std::to_string(idx));
    const auto tok = split_ws(line);
    auto need = [&](std::size_t i) -> std::string_view {
      if (i >= tok.size())
        throw TraceParseError(idx, cols[i],
                              "record " + std::to_string(idx) + ": missing field '" + cols[i] + "'");
      return tok[i];
    };
    auto as_int = [&](std::size_t i) {
      auto v = detail::parse_int(need(i));
      if (!v)
        throw TraceParseError(idx, cols[i],
                              "record " + std::to_string(idx) + ": field '" + cols[i] +
                                  "' is not an integer");
      return *v;
    };
    auto as_real = [&](std::size_t i) {
      auto v = detail::parse_double(need(i));
      if (!v)
        throw TraceParseError(idx, cols[i],
                              "record " + std::to_string(idx) + ": field '" + cols[i] +
                                  "' is not a number");
      return *v;
    };

    TrackRecord r;
    r.episode = static_cast<int>(as_int(0));
    r.user = static_cast<int>(as_int(1));
    r.slot = static_cast<int>(as_int(2));
    const long e_expected = idx / per_episode;
    const long within = idx % per_episode;
    if (r.episode != e_expected || r.slot != within / set.users || r.user != within % set.users)
      throw TraceParseError(idx, "episode",
                            "record " + std::to_string(idx) +
                                ": records must be ordered by episode, slot, user");
    r.position.x_m = as_real(3);
    r.position.y_m = as_real(4);
    r.fg.vertices = as_int(5);
    r.fg.vertex_complexity = as_real(6);
    r.fg.pixel_complexity = as_real(7);
    r.fg.pixels = as_int(8);
    r.bg_window.resize(set.window_len);
    for (int j = 0; j < set.window_len; ++j) {
      r.bg_window[j].vertices = as_int(9 + 3 * j);
      r.bg_window[j].vertex_complexity = as_real(10 + 3 * j);
      r.bg_window[j].pixel_complexity = as_real(11 + 3 * j);
    }
    if (tok.size() != cols.size())
      throw TraceParseError(idx, cols.back(),
                            "record " + std::to_string(idx) + ": expected " +
                                std::to_string(cols.size()) + " fields, found " +
                                std::to_string(tok.size()));

    if (validate_against) {
      const auto& p = *validate_against;
      auto& w = result.warnings;
      warn_range(w, idx, "n_vf", r.fg.vertices, p.fg_vertices);
      warn_range(w, idx, "c_vf", r.fg.vertex_complexity, p.fg_vertex_complexity);
      warn_range(w, idx, "c_pf", r.fg.pixel_complexity, p.fg_pixel_complexity);
      const double screen = static_cast<double>(p.screen_pixels());
      const Range<std::int64_t> fg_px{std::llround(p.fg_pixel_fraction.lo * screen),
                                      std::llround(p.fg_pixel_fraction.hi * screen)};
      warn_range(w, idx, "n_pf", r.fg.pixels, fg_px);
      for (int j = 0; j < set.window_len; ++j) {
        warn_range(w, idx, "n_vb", r.bg_window[j].vertices, p.bg_vertices);
        warn_range(w, idx, "c_vb", r.bg_window[j].vertex_complexity, p.bg_vertex_complexity);
        warn_range(w, idx, "c_pb", r.bg_window[j].pixel_complexity, p.bg_pixel_complexity);
      }
      const Range<double> room{0.0, room_size_m};
      warn_range(w, idx, "x", r.position.x_m, room);
      warn_range(w, idx, "y", r.position.y_m, room);
    }

    if (within == 0) {
      EpisodeTrace ep;
      ep.episode = r.episode;
      ep.users = set.users;
      ep.horizon = set.horizon;
      ep.records.reserve(static_cast<std::size_t>(per_episode));
      set.episodes.push_back(std::move(ep));
    }
    set.episodes.back().records.push_back(std::move(r));
  }
  return result;
}

TraceLoadResult load_traces(const std::filesystem::path& path,
                            const WorkloadParams* validate_against, double room_size_m) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file: " + path.string());
  return read_traces(in, validate_against, room_size_m);
}

// ---------------------------------------------------------------------------

TraceProvider TraceProvider::from_set(std::shared_ptr<const TraceSet> set) {
  TraceProvider p;
  p.users_ = set->users;
  p.horizon_ = set->horizon;
  p.episodes_ = static_cast<int>(set->episodes.size());
  p.set_ = std::move(set);
  return p;
}

TraceProvider TraceProvider::generated(WorkloadParams params, ChannelParams room, int users,
                                       int horizon, int episodes, std::uint64_t seed) {
  params.validate();
  TraceProvider p;
  p.params_ = std::move(params);
  p.room_ = room;
  p.users_ = users;
  p.horizon_ = horizon;
  p.episodes_ = episodes;
  p.seed_ = seed;
  return p;
}

int TraceProvider::episodes() const { return episodes_; }
int TraceProvider::users() const { return users_; }
int TraceProvider::horizon() const { return horizon_; }
int TraceProvider::window_len() const { return set_ ? set_->window_len : params_->window_len; }

EpisodeTrace TraceProvider::episode(int id) const {
  if (id < 0 || id >= episodes_)
    throw std::out_of_range("unknown episode id " + std::to_string(id) + " (have " +
                            std::to_string(episodes_) + ")");
  if (set_) return set_->episodes[static_cast<std::size_t>(id)];
  return generate_episode(*params_, room_, users_, horizon_, id, seed_);
}

}  // namespace edgevr

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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgevr/channel.hpp"

namespace edgevr {

template <typename T>
struct Range {
  T lo;
  T hi;
  bool contains(T v) const { return v >= lo && v <= hi; }
};

enum class Mobility { static_position, random_waypoint };

/// Per-tile workload ranges. Loads are GPU cycles.
struct WorkloadParams {
  double bits_per_pixel = 40.0;
  std::int64_t screen_width = 2064;
  std::int64_t screen_height = 2208;
  Range<double> fg_pixel_fraction{0.0, 0.5};
  Range<std::int64_t> fg_vertices{1000, 40000};
  Range<std::int64_t> bg_vertices{10000, 20000};
  Range<double> fg_vertex_complexity{100.0, 600.0};
  Range<double> bg_vertex_complexity{100.0, 200.0};
  Range<double> fg_pixel_complexity{5.0, 50.0};
  Range<double> bg_pixel_complexity{5.0, 20.0};
  int window_len = 5;
  double compression_ratio = 0.016;
  Mobility mobility = Mobility::static_position;
  /// Distance walked per slot in random-waypoint mode.
  double waypoint_step_m = 0.01;
  /// First-order smoothing weight on the previous slot's draw; 0 disables.
  double temporal_smoothing = 0.0;

  std::int64_t screen_pixels() const { return screen_width * screen_height; }
  void validate() const;
};

struct ForegroundParams {
  std::int64_t vertices = 0;
  double vertex_complexity = 0.0;
  double pixel_complexity = 0.0;
  std::int64_t pixels = 0;

  bool operator==(const ForegroundParams&) const = default;
};

struct BackgroundParams {
  std::int64_t vertices = 0;
  double vertex_complexity = 0.0;
  double pixel_complexity = 0.0;

  bool operator==(const BackgroundParams&) const = default;
};

/// One user's workload at one slot: the foreground tile and the background
/// tiles for frames k..k+L-1 predicted from this slot's sensor data.
struct TrackRecord {
  int episode = 0;
  int user = 0;
  int slot = 0;
  Position position;
  ForegroundParams fg;
  std::vector<BackgroundParams> bg_window;

  bool operator==(const TrackRecord& o) const {
    return episode == o.episode && user == o.user && slot == o.slot &&
           position.x_m == o.position.x_m && position.y_m == o.position.y_m && fg == o.fg &&
           bg_window == o.bg_window;
  }
};

struct RequestProfile {
  double fg_load_cycles = 0.0;
  double fg_size_bits = 0.0;
  std::vector<double> bg_loads_cycles;
  double bg_size_bits = 0.0;
};

/// c_v * n_v + c_p * n_p.
double estimate_flops(double vertex_complexity, double vertices, double pixel_complexity,
                      double pixels);

/// bits_per_pixel * pixels. Throws std::domain_error outside [0, screen].
double foreground_size_bits(std::int64_t pixels, const WorkloadParams& params);

/// Raw full-screen background size; identical for every user and frame.
double background_size_bits(const WorkloadParams& params);

RequestProfile make_profile(const TrackRecord& rec, const WorkloadParams& params);

/// All records of one episode, indexed [slot * users + user].
struct EpisodeTrace {
  int episode = 0;
  int users = 0;
  int horizon = 0;
  std::vector<TrackRecord> records;

  const TrackRecord& at(int slot, int user) const {
    return records.at(static_cast<std::size_t>(slot) * users + user);
  }
};

struct TraceSet {
  int users = 0;
  int horizon = 0;
  int window_len = 0;
  std::vector<EpisodeTrace> episodes;
};

EpisodeTrace generate_episode(const WorkloadParams& params, const ChannelParams& room, int users,
                              int horizon, int episode, std::uint64_t seed);

TraceSet generate_traces(const WorkloadParams& params, const ChannelParams& room,
                         int num_episodes, int users, int horizon, std::uint64_t seed);

/// Parse failure with the offending record index (0-based, -1 for the
/// header) and field name.
class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(long record, std::string field, const std::string& what);
  long record() const { return record_; }
  const std::string& field() const { return field_; }

 private:
  long record_;
  std::string field_;
};

void write_traces(std::ostream& out, const TraceSet& traces);
void save_traces(const std::filesystem::path& path, const TraceSet& traces);

struct TraceLoadResult {
  TraceSet traces;
  /// Range violations found when validating against the supplied params.
  std::vector<std::string> warnings;
};

TraceLoadResult read_traces(std::istream& in, const WorkloadParams* validate_against = nullptr,
                            double room_size_m = 20.0);
TraceLoadResult load_traces(const std::filesystem::path& path,
                            const WorkloadParams* validate_against = nullptr,
                            double room_size_m = 20.0);

/// Supplies episodes either from a loaded trace set or by deterministic
/// on-demand generation.
class TraceProvider {
 public:
  static TraceProvider from_set(std::shared_ptr<const TraceSet> set);
  static TraceProvider generated(WorkloadParams params, ChannelParams room, int users,
                                 int horizon, int episodes, std::uint64_t seed);

  int episodes() const;
  int users() const;
  int horizon() const;
  int window_len() const;
  /// Throws std::out_of_range for unknown episode ids.
  EpisodeTrace episode(int id) const;

 private:
  std::shared_ptr<const TraceSet> set_;
  std::optional<WorkloadParams> params_;
  ChannelParams room_;
  int users_ = 0;
  int horizon_ = 0;
  int episodes_ = 0;
  std::uint64_t seed_ = 0;
};

}  // namespace edgevr

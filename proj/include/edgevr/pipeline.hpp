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

// Deadline-aware per-user queue network: edge render -> compress ->
// transmit -> decompress for background tiles rendered at the edge, edge
// render -> transmit for edge foreground tiles, and a device render queue
// for anything rendered locally. Service is continuous in time with
// resources held constant inside each slot.
#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <string_view>
#include <vector>

#include "edgevr/workload.hpp"

namespace edgevr {

struct PipelineParams {
  int users = 5;
  int window_len = 5;
  double slot_s = 0.01;
  double mtp_s = 0.02;
  double atw_penalty_s = 0.5;
  double merge_s = 0.002;
  double compress_s = 0.005;
  double decompress_s = 0.008;
  double compression_ratio = 0.016;
  double bg_size_bits = 182292480.0;
  double device_gpu_hz = 3e9;
  /// Compress-queue AQM threshold includes the compression time itself.
  bool strict_compress_threshold = false;
  /// Slack on frame-feasibility comparisons so that exact ties (latency ==
  /// budget) stay feasible despite decimal rounding.
  double time_slack_s = 1e-9;

  void validate() const;
};

enum class TileKind : std::uint8_t { foreground, background };

enum class Stage : std::uint8_t {
  none,
  edge_render,
  compress,
  transmit,
  decompress,
  device_render,
  pool,
  merged,
  expired,
  dropped,
};

inline constexpr int kNumQueues = 5;

/// Queue position of a queue stage, in observation/drop-count order
/// {edge_render, compress, transmit, decompress, device_render}.
constexpr int queue_index(Stage s) { return static_cast<int>(s) - 1; }
constexpr Stage queue_stage(int index) { return static_cast<Stage>(index + 1); }
std::string_view stage_name(Stage s);

struct Tile {
  std::uint64_t id = 0;
  int user = 0;
  TileKind kind = TileKind::foreground;
  int sensor_slot = 0;
  int frame_slot = 0;
  /// Remaining render work, remaining bits to send, remaining fixed-time
  /// service. Only the field of the current stage is consumed.
  double load_cycles = 0.0;
  double bits = 0.0;
  double fixed_s = 0.0;
  Stage stage = Stage::none;
  double enqueue_s = 0.0;
  bool in_service = false;
  double completion_s = std::numeric_limits<double>::quiet_NaN();
  double deadline_s = 0.0;
};

struct TileEvent {
  double time_s;
  int user;
  std::uint64_t tile;
  Stage from;
  Stage to;
};

struct SlotResources {
  std::vector<double> bandwidth_hz;
  std::vector<double> edge_gpu_hz;
  std::vector<double> rate_bps;
};

/// One user's binary decisions for a slot. Offsets j index frames k + j.
struct UserDecision {
  bool fg_on_device = false;
  std::vector<std::uint8_t> render_bg;
  std::vector<std::uint8_t> bg_on_device;
};

struct FrameOutcome {
  int user = 0;
  int frame_slot = 0;
  bool fg_feasible = false;
  bool bg_feasible = false;
  bool merged = false;
  /// Sensor slot of the selected background tile; -1 when none is feasible.
  int chosen_bg_sensor_slot = -1;
  double age_s = 0.0;
  /// End-to-end foreground latency including merge; NaN if it never arrived.
  double fg_latency_s = std::numeric_limits<double>::quiet_NaN();
};

using DropCounts = std::vector<std::array<int, kNumQueues>>;

struct TileLedger {
  long enqueued = 0;
  long merged = 0;
  long expired = 0;
  long dropped = 0;
  long in_flight() const { return enqueued - merged - expired - dropped; }
};

/// (k' - k*) * tau when merged, the ATW penalty otherwise.
double age_metric(const FrameOutcome& outcome, double slot_s, double atw_penalty_s);

/// (frame - sensor) * tau + T_mtp. Throws std::domain_error when the gap is
/// negative or not inside the prediction window.
double background_deadline(int sensor_slot, int frame_slot, double slot_s, double mtp_s,
                           int window_len);

/// Device energy for one user's slot decisions: decompression energy per
/// edge-rendered background tile plus beta * local cycles * f^2.
double device_energy(const UserDecision& decision, const RequestProfile& profile,
                     double device_gpu_hz, double beta, double decompress_energy_j);

class QueueNetwork {
 public:
  explicit QueueNetwork(PipelineParams params);

  const PipelineParams& params() const { return params_; }
  void reset();

  /// Enqueue one tile at time slot*tau. Foreground tiles jump ahead of every
  /// background tile that is not already in service. Returns the tile id.
  std::uint64_t enqueue_tile(int user, TileKind kind, int sensor_slot, int frame_slot,
                             bool on_device, double load_cycles, double size_bits);

  /// Enqueue slot k's foreground tile and selected background tiles for all
  /// users; foreground first, then background in ascending frame order.
  void enqueue_decisions(int slot, const std::vector<UserDecision>& decisions,
                         const std::vector<RequestProfile>& profiles);

  /// Serve every queue over [slot*tau, (slot+1)*tau). Windows must be
  /// advanced in order; a regression throws std::logic_error.
  void advance(int slot, const SlotResources& resources);

  /// Drop tiles that can no longer meet their deadline at time slot*tau.
  DropCounts apply_aqm(int slot);

  /// Number of queued tiles that would be dropped by AQM at slot*tau.
  int aqm_violations(int slot) const;

  /// Evaluate frame k' for one user. Requires the simulation clock to have
  /// reached the frame deadline; evaluating a frame twice throws.
  FrameOutcome evaluate_frame(int user, int frame_slot);

  /// Expire every tile still queued or pooled (end of episode).
  void finish();

  const std::deque<Tile>& queue(int user, Stage stage) const;
  const std::vector<Tile>& pool(int user) const { return users_.at(user).pool; }
  double last_departure(int user, Stage stage) const;
  const TileLedger& ledger() const { return ledger_; }
  /// Start of the next window to be served.
  int clock_slot() const { return next_window_; }

  /// Remaining MTP budget of a tile at the start of `slot`.
  double rest_time(const Tile& tile, int slot) const;
  double aqm_threshold(const Tile& tile) const;

  /// When set, every tile transition is appended here.
  void set_event_log(std::vector<TileEvent>* log) { log_ = log; }

 private:
  struct UserQueues {
    std::array<std::deque<Tile>, kNumQueues> queues;
    std::array<double, kNumQueues> last_departure{};
    std::vector<Tile> pool;
    std::vector<bool> evaluated;
  };

  void log(double t, const Tile& tile, Stage from, Stage to);
  void insert_by_arrival(std::deque<Tile>& q, Tile tile);
  void serve_queue(int user, Stage stage, double rate, double t0, double t1);
  void route_completed(int user, Tile tile, double t);
  bool frame_evaluated(int user, int frame) const;

  PipelineParams params_;
  std::vector<UserQueues> users_;
  TileLedger ledger_;
  std::uint64_t next_id_ = 0;
  int next_window_ = 0;
  std::vector<TileEvent>* log_ = nullptr;
};

}  // namespace edgevr

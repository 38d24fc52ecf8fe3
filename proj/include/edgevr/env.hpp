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

// Constrained-MDP wrapper around the queue network.
//
// Observation layout, per user u in order:
//   [h*g, f_dev]                                  2
//   [N^f, D^f, (N^b_l, D^b) for l = 0..L-1]       2 + 2L
//   edge render queue, M x (load, size, rest)     3M
//   compress queue, M x (size, rest)              2M
//   transmit queue, M x (bits, rest)              2M
//   decompress queue, M x (size, rest)            2M
//   device render queue, M x (load, rest)         2M
// followed by the AQM block, 5 drop counts per user in queue order, when
// enabled. Queues are truncated to their first M entries and zero padded.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "edgevr/channel.hpp"
#include "edgevr/pipeline.hpp"
#include "edgevr/workload.hpp"

namespace edgevr {

/// Feature scales. Zero means "derive": sizes by D^b, times by T_mtp,
/// channel by the LOS value at d_min times the main-lobe gain squared.
struct ObservationScales {
  double load_cycles = 1e8;
  double frequency_hz = 1e9;
  double size_bits = 0.0;
  double time_s = 0.0;
  double channel_gain = 0.0;
};

struct EnvConfig {
  int users = 5;
  int horizon = 300;
  int window_len = 5;
  double slot_s = 0.01;
  double mtp_s = 0.02;
  double atw_penalty_s = 0.5;
  double merge_s = 0.002;
  double compress_s = 0.005;
  double decompress_s = 0.008;
  bool strict_compress_threshold = false;

  double total_bandwidth_hz = 500e6;
  double total_edge_gpu_hz = 70e9;
  double device_gpu_hz = 3e9;
  double beta = 1e-25;
  double decompress_energy_j = 10.0;

  double zeta = 0.1;
  double drop_penalty = 1e-4;
  double cost_limit = 0.0;

  int queue_features = 8;
  bool aqm_state = true;
  bool aqm_reward = true;
  ObservationScales scales;

  ChannelParams channel;
  WorkloadParams workload;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  PipelineParams pipeline_params() const;
  /// Workload params with window length synced to this config.
  WorkloadParams workload_params() const;
};

struct EnvDims {
  int obs = 0;
  int binary = 0;
  int alloc = 0;
};

EnvDims env_dims(const EnvConfig& cfg);

/// Policy output before decoding. Binaries must be exactly 0 or 1;
/// allocation weights are unconstrained logits.
struct RawAction {
  Eigen::VectorXi zf;  // U: foreground rendered on device
  Eigen::MatrixXi xb;  // U x L: render background for frame k + l
  Eigen::MatrixXi zb;  // U x L: that background on device
  Eigen::VectorXd w_bandwidth;
  Eigen::VectorXd w_gpu;

  static RawAction zeros(int users, int window_len);
};

struct Action {
  std::vector<UserDecision> decisions;
  Eigen::VectorXd bandwidth_hz;
  Eigen::VectorXd edge_gpu_hz;
};

/// total * softmax(w). +inf weights share the total equally; NaN throws.
/// Shares other than the largest are rounded to the ulp of `total` and the
/// largest takes the remainder, so the entries sum to `total` exactly in
/// any order.
Eigen::VectorXd simplex_allocation(const Eigen::VectorXd& w, double total);

/// Throws std::invalid_argument on wrong dimensions or non-binary entries.
Action decode_action(const RawAction& raw, int users, int window_len, double total_bandwidth_hz,
                     double total_edge_gpu_hz);

struct StepInfo {
  std::vector<FrameOutcome> frames;
  std::vector<double> age_s;     // per user, summed over frames evaluated this step
  std::vector<double> energy_j;  // per user, for this step's decisions
  DropCounts drops;
};

struct StepResult {
  Eigen::VectorXd obs;
  double reward = 0.0;
  double cost = 0.0;
  bool done = false;
  StepInfo info;
};

class Environment {
 public:
  Environment(EnvConfig cfg, TraceProvider traces);

  const EnvConfig& config() const { return cfg_; }
  EnvDims dims() const { return env_dims(cfg_); }

  /// Throws std::out_of_range for an unknown episode.
  Eigen::VectorXd reset(int episode, std::uint64_t seed);
  StepResult step(const RawAction& raw);
  StepResult step(const Action& action);

  bool done() const { return done_; }
  bool active() const { return active_; }
  int slot() const { return slot_; }
  int episode() const { return episode_; }
  const QueueNetwork& network() const { return net_; }
  const std::vector<LinkRealization>& links() const { return links_; }
  Eigen::VectorXd observe() const;

  /// Override the ablation flags for the current and later episodes.
  void set_aqm_state(bool on) { cfg_.aqm_state = on; }
  void set_aqm_reward(bool on) { cfg_.aqm_reward = on; }

  /// Called right after the AQM pass of every step.
  void set_post_aqm_hook(std::function<void(const QueueNetwork&, int slot)> hook) {
    post_aqm_ = std::move(hook);
  }
  void set_event_log(std::vector<TileEvent>* log) { net_.set_event_log(log); }

 private:
  void draw_links();
  const TrackRecord* record(int slot, int user) const;

  EnvConfig cfg_;
  TraceProvider traces_;
  QueueNetwork net_;
  EpisodeTrace trace_;
  std::vector<RequestProfile> profiles_;  // current slot, per user
  std::vector<LinkRealization> links_;
  DropCounts last_drops_;
  std::mt19937_64 rng_;
  std::function<void(const QueueNetwork&, int)> post_aqm_;
  int episode_ = -1;
  int slot_ = 0;
  bool active_ = false;
  bool done_ = false;
};

}  // namespace edgevr

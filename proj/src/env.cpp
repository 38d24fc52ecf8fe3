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

#include "edgevr/env.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace edgevr {

namespace {

void positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
}

void non_negative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(name) + " must be non-negative and finite");
}

std::string dim_error(const char* what, long got, long want) {
  return std::string("action.") + what + ": expected " + std::to_string(want) + " entries, got " +
         std::to_string(got);
}

}  // namespace

void EnvConfig::validate() const {
  if (users < 1) throw std::invalid_argument("sim.users must be >= 1");
  if (horizon < 1) throw std::invalid_argument("sim.horizon must be >= 1");
  if (window_len < 1) throw std::invalid_argument("sim.window_len must be >= 1");
  if (queue_features < 0) throw std::invalid_argument("obs.queue_len must be >= 0");
  positive(total_bandwidth_hz, "edge.bandwidth_hz");
  positive(total_edge_gpu_hz, "edge.gpu_hz");
  non_negative(beta, "device.beta");
  non_negative(decompress_energy_j, "device.decompress_energy_j");
  non_negative(zeta, "reward.zeta");
  non_negative(drop_penalty, "reward.drop_penalty");
  non_negative(cost_limit, "reward.cost_limit");
  positive(scales.load_cycles, "obs.load_scale_cycles");
  positive(scales.frequency_hz, "obs.frequency_scale_hz");
  non_negative(scales.size_bits, "obs.size_scale_bits");
  non_negative(scales.time_s, "obs.time_scale_s");
  non_negative(scales.channel_gain, "obs.channel_scale");
  channel.validate();
  workload_params().validate();
  pipeline_params().validate();
}

PipelineParams EnvConfig::pipeline_params() const {
  PipelineParams p;
  p.users = users;
  p.window_len = window_len;
  p.slot_s = slot_s;
  p.mtp_s = mtp_s;
  p.atw_penalty_s = atw_penalty_s;
  p.merge_s = merge_s;
  p.compress_s = compress_s;
  p.decompress_s = decompress_s;
  p.compression_ratio = workload.compression_ratio;
  p.bg_size_bits = background_size_bits(workload);
  p.device_gpu_hz = device_gpu_hz;
  p.strict_compress_threshold = strict_compress_threshold;
  return p;
}

WorkloadParams EnvConfig::workload_params() const {
  WorkloadParams w = workload;
  w.window_len = window_len;
  return w;
}

EnvDims env_dims(const EnvConfig& cfg) {
  const int per_user = 4 + 2 * cfg.window_len + 11 * cfg.queue_features + (cfg.aqm_state ? 5 : 0);
  return {cfg.users * per_user, cfg.users * (1 + 2 * cfg.window_len), 2 * cfg.users};
}

RawAction RawAction::zeros(int users, int window_len) {
  RawAction a;
  a.zf = Eigen::VectorXi::Zero(users);
  a.xb = Eigen::MatrixXi::Zero(users, window_len);
  a.zb = Eigen::MatrixXi::Zero(users, window_len);
  a.w_bandwidth = Eigen::VectorXd::Zero(users);
  a.w_gpu = Eigen::VectorXd::Zero(users);
  return a;
}

Eigen::VectorXd simplex_allocation(const Eigen::VectorXd& w, double total) {
  const Eigen::Index n = w.size();
  if (n == 0) throw std::invalid_argument("simplex_allocation: empty weight vector");
  if (w.array().isNaN().any()) throw std::invalid_argument("simplex_allocation: NaN weight");

  Eigen::VectorXd share(n);
  const double inf = std::numeric_limits<double>::infinity();
  const auto n_inf = (w.array() == inf).count();
  if (n_inf > 0) {
    share = (w.array() == inf).cast<double>();
  } else {
    const double m = w.maxCoeff();
    if (m == -inf) {
      share.setOnes();
    } else {
      share = (w.array() - m).exp();
    }
  }
  share /= share.sum();

  Eigen::VectorXd out = total * share;
  Eigen::Index big = 0;
  share.maxCoeff(&big);
  // Put the other shares on the ulp grid of `total`; every partial sum is
  // then exact and the largest share takes the remainder.
  const double q = std::nextafter(total, inf) - total;
  double rest = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == big) continue;
    out[i] = std::round(out[i] / q) * q;
    rest += out[i];
  }
  out[big] = std::max(0.0, total - rest);
  return out;
}

Action decode_action(const RawAction& raw, int users, int window_len, double total_bandwidth_hz,
                     double total_edge_gpu_hz) {
  if (raw.zf.size() != users) throw std::invalid_argument(dim_error("zf", raw.zf.size(), users));
  if (raw.xb.rows() != users || raw.xb.cols() != window_len)
    throw std::invalid_argument(dim_error("xb", raw.xb.size(), long(users) * window_len));
  if (raw.zb.rows() != users || raw.zb.cols() != window_len)
    throw std::invalid_argument(dim_error("zb", raw.zb.size(), long(users) * window_len));
  if (raw.w_bandwidth.size() != users)
    throw std::invalid_argument(dim_error("wB", raw.w_bandwidth.size(), users));
  if (raw.w_gpu.size() != users) throw std::invalid_argument(dim_error("wF", raw.w_gpu.size(), users));

  auto binary = [](int v, const char* name) {
    if (v != 0 && v != 1)
      throw std::invalid_argument(std::string("action.") + name + ": entries must be 0 or 1");
    return static_cast<std::uint8_t>(v);
  };

  Action a;
  a.decisions.resize(users);
  for (int u = 0; u < users; ++u) {
    auto& d = a.decisions[u];
    d.fg_on_device = binary(raw.zf[u], "zf") != 0;
    d.render_bg.resize(window_len);
    d.bg_on_device.resize(window_len);
    for (int l = 0; l < window_len; ++l) {
      d.render_bg[l] = binary(raw.xb(u, l), "xb");
      // z^b is sampled for every position but only matters where x^b = 1.
      d.bg_on_device[l] = binary(raw.zb(u, l), "zb") & d.render_bg[l];
    }
  }
  a.bandwidth_hz = simplex_allocation(raw.w_bandwidth, total_bandwidth_hz);
  a.edge_gpu_hz = simplex_allocation(raw.w_gpu, total_edge_gpu_hz);
  return a;
}

// ---------------------------------------------------------------------------

Environment::Environment(EnvConfig cfg, TraceProvider traces)
    : cfg_(std::move(cfg)), traces_(std::move(traces)), net_(cfg_.pipeline_params()) {
  cfg_.validate();
  if (traces_.users() != cfg_.users)
    throw std::invalid_argument("traces have " + std::to_string(traces_.users()) +
                                " users, config expects " + std::to_string(cfg_.users));
  if (traces_.window_len() != cfg_.window_len)
    throw std::invalid_argument("traces have window length " +
                                std::to_string(traces_.window_len()) + ", config expects " +
                                std::to_string(cfg_.window_len));
  if (traces_.horizon() < cfg_.horizon)
    throw std::invalid_argument("traces are shorter than the configured horizon");
}

const TrackRecord* Environment::record(int slot, int user) const {
  if (slot < 0 || slot >= cfg_.horizon) return nullptr;
  return &trace_.at(slot, user);
}

void Environment::draw_links() {
  links_.resize(cfg_.users);
  for (int u = 0; u < cfg_.users; ++u) {
    const TrackRecord* rec = record(slot_, u);
    const Position pos = rec ? rec->position : trace_.at(cfg_.horizon - 1, u).position;
    if (slot_ == 0 || cfg_.channel.redraw_per_slot) {
      links_[u] = sample_link(u, slot_, pos, cfg_.channel, rng_);
      continue;
    }
    // Held LOS state and antenna gain; only the distance may change.
    LinkRealization& l = links_[u];
    l.slot = slot_;
    l.distance_m = std::max(distance_to_base_station(pos, cfg_.channel), cfg_.channel.min_distance_m);
    const double shadow =
        l.los_state == LosState::los ? cfg_.channel.shadow_los_db : cfg_.channel.shadow_nlos_db;
    l.pathloss_db = pathloss_db(l.distance_m, cfg_.channel.carrier_freq_hz, l.los_state, shadow,
                                cfg_.channel.min_distance_m);
    l.channel_gain_linear = std::pow(10.0, -l.pathloss_db / 20.0);
  }
  profiles_.assign(cfg_.users, RequestProfile{});
  const WorkloadParams wp = cfg_.workload_params();
  for (int u = 0; u < cfg_.users; ++u)
    if (const TrackRecord* rec = record(slot_, u)) profiles_[u] = make_profile(*rec, wp);
}

Eigen::VectorXd Environment::reset(int episode, std::uint64_t seed) {
  if (episode < 0 || episode >= traces_.episodes())
    throw std::out_of_range("unknown episode " + std::to_string(episode) + " (have " +
                            std::to_string(traces_.episodes()) + ")");
  trace_ = traces_.episode(episode);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode), 0xc4a7u};
  rng_.seed(seq);
  net_.reset();
  last_drops_.assign(cfg_.users, std::array<int, kNumQueues>{});
  episode_ = episode;
  slot_ = 0;
  active_ = true;
  done_ = false;
  draw_links();
  return observe();
}

StepResult Environment::step(const RawAction& raw) {
  return step(decode_action(raw, cfg_.users, cfg_.window_len, cfg_.total_bandwidth_hz,
                            cfg_.total_edge_gpu_hz));
}

StepResult Environment::step(const Action& action) {
  if (!active_) throw std::logic_error("step before reset");
  if (done_) throw std::logic_error("step after episode end");
  const int U = cfg_.users;
  if (static_cast<int>(action.decisions.size()) != U || action.bandwidth_hz.size() != U ||
      action.edge_gpu_hz.size() != U)
    throw std::invalid_argument("action does not match the number of users");

  StepResult res;
  StepInfo& info = res.info;

  info.drops = net_.apply_aqm(slot_);
  last_drops_ = info.drops;
  if (post_aqm_) post_aqm_(net_, slot_);

  net_.enqueue_decisions(slot_, action.decisions, profiles_);

  SlotResources sr;
  sr.bandwidth_hz.resize(U);
  sr.edge_gpu_hz.resize(U);
  sr.rate_bps.resize(U);
  for (int u = 0; u < U; ++u) {
    sr.bandwidth_hz[u] = action.bandwidth_hz[u];
    sr.edge_gpu_hz[u] = action.edge_gpu_hz[u];
    sr.rate_bps[u] = rate_bps(action.bandwidth_hz[u], links_[u].channel_gain_linear,
                              links_[u].antenna_gain_linear, cfg_.channel);
  }
  net_.advance(slot_, sr);

  // Frames whose deadline k'tau + T_mtp lies in (k tau, (k+1) tau].
  const double m = cfg_.mtp_s / cfg_.slot_s;
  const double eps = 1e-9;
  info.age_s.assign(U, 0.0);
  info.energy_j.assign(U, 0.0);
  for (int frame = std::max(0, slot_ - static_cast<int>(std::ceil(m)) - 1); frame <= slot_; ++frame) {
    const double gap = static_cast<double>(slot_ - frame);
    if (!(gap < m - eps && gap >= m - 1.0 - eps)) continue;
    for (int u = 0; u < U; ++u) {
      FrameOutcome fo = net_.evaluate_frame(u, frame);
      info.age_s[u] += fo.age_s;
      if (!fo.merged) res.cost += 1.0;
      info.frames.push_back(fo);
    }
  }

  double penalty = 0.0;
  long drops = 0;
  for (int u = 0; u < U; ++u) {
    info.energy_j[u] = device_energy(action.decisions[u], profiles_[u], cfg_.device_gpu_hz,
                                     cfg_.beta, cfg_.decompress_energy_j);
    penalty += info.age_s[u] + cfg_.zeta * info.energy_j[u];
    for (int c : info.drops[u]) drops += c;
  }
  res.reward = -penalty;
  if (cfg_.aqm_reward) res.reward -= cfg_.drop_penalty * static_cast<double>(drops);

  ++slot_;
  if (slot_ >= cfg_.horizon) {
    done_ = true;
    net_.finish();
  }
  draw_links();
  res.done = done_;
  res.obs = observe();
  return res;
}

Eigen::VectorXd Environment::observe() const {
  const EnvDims d = dims();
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(d.obs);
  if (!active_) return obs;

  const auto& p = net_.params();
  const ObservationScales& s = cfg_.scales;
  const double load_scale = s.load_cycles;
  const double size_scale = s.size_bits > 0.0 ? s.size_bits : p.bg_size_bits;
  const double time_scale = s.time_s > 0.0 ? s.time_s : p.mtp_s;
  double chan_scale = s.channel_gain;
  if (chan_scale <= 0.0) {
    const auto& c = cfg_.channel;
    const double pl = pathloss_db(c.min_distance_m, c.carrier_freq_hz, LosState::los,
                                  c.shadow_los_db, c.min_distance_m);
    chan_scale = std::pow(10.0, -pl / 20.0) * c.mainlobe_gain_linear * c.mainlobe_gain_linear;
  }

  const int L = cfg_.window_len;
  const int M = cfg_.queue_features;
  Eigen::Index i = 0;
  for (int u = 0; u < cfg_.users; ++u) {
    obs[i++] = links_[u].effective_gain() / chan_scale;
    obs[i++] = cfg_.device_gpu_hz / s.frequency_hz;

    const RequestProfile& prof = profiles_[u];
    const bool have = record(slot_, u) != nullptr;
    obs[i++] = prof.fg_load_cycles / load_scale;
    obs[i++] = prof.fg_size_bits / size_scale;
    for (int l = 0; l < L; ++l) {
      obs[i++] = have ? prof.bg_loads_cycles.at(l) / load_scale : 0.0;
      obs[i++] = have ? prof.bg_size_bits / size_scale : 0.0;
    }

    for (int qi = 0; qi < kNumQueues; ++qi) {
      const Stage st = queue_stage(qi);
      const auto& q = net_.queue(u, st);
      const int width = st == Stage::edge_render ? 3 : 2;
      for (int m = 0; m < M; ++m) {
        if (m >= static_cast<int>(q.size())) {
          i += width;
          continue;
        }
        const Tile& t = q[m];
        const double rest = net_.rest_time(t, slot_) / time_scale;
        switch (st) {
          case Stage::edge_render:
            obs[i++] = t.load_cycles / load_scale;
            obs[i++] = t.bits / size_scale;
            break;
          case Stage::device_render:
            obs[i++] = t.load_cycles / load_scale;
            break;
          default:
            obs[i++] = t.bits / size_scale;
            break;
        }
        obs[i++] = rest;
      }
    }
  }
  if (cfg_.aqm_state)
    for (int u = 0; u < cfg_.users; ++u)
      for (int qi = 0; qi < kNumQueues; ++qi)
        obs[i++] = static_cast<double>(last_drops_.at(u)[qi]);
  return obs;
}

}  // namespace edgevr

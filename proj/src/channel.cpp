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

#include "edgevr/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace edgevr {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("channel.") + name + " must be positive and finite");
}
}  // namespace

void ChannelParams::validate() const {
  require_positive(carrier_freq_hz, "carrier_freq_hz");
  require_positive(tx_power_w, "tx_power_w");
  require_positive(noise_psd_w_per_hz, "noise_psd_w_per_hz");
  require_positive(mainlobe_gain_linear, "mainlobe_gain_linear");
  require_positive(sidelobe_gain_linear, "sidelobe_gain_linear");
  require_positive(min_distance_m, "min_distance_m");
  require_positive(room_size_m, "room_size_m");
  if (!(mainlobe_beamwidth_rad > 0.0 && mainlobe_beamwidth_rad < kTwoPi))
    throw std::invalid_argument("channel.mainlobe_beamwidth_rad must lie in (0, 2*pi)");
  if (!(shadow_los_db >= 0.0) || !(shadow_nlos_db >= 0.0))
    throw std::invalid_argument("channel shadowing terms must be non-negative");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double los_probability(double distance_m) {
  if (!(distance_m > 0.0)) throw std::domain_error("los_probability: distance must be positive");
  if (distance_m <= 5.0) return 1.0;
  if (distance_m <= 49.0) return std::exp(-(distance_m - 5.0) / 70.8);
  // Beyond the office range the standard multiplies by 0.54; kept for
  // completeness even though the room never reaches it.
  return std::exp(-(49.0 - 5.0) / 70.8) * 0.54 * std::exp(-(distance_m - 49.0) / 211.7);
}

double pathloss_db(double distance_m, double carrier_freq_hz, LosState los,
                   double shadow_db, double min_distance_m) {
  if (!(carrier_freq_hz > 0.0)) throw std::domain_error("pathloss_db: frequency must be positive");
  const double d = std::max(distance_m, min_distance_m);
  const double f_ghz = carrier_freq_hz / 1e9;
  const double pl_los = 32.4 + 17.3 * std::log10(d) + 20.0 * std::log10(f_ghz);
  double pl = pl_los;
  if (los == LosState::nlos) {
    const double pl_nlos = 17.3 + 38.3 * std::log10(d) + 24.9 * std::log10(f_ghz);
    pl = std::max(pl_los, pl_nlos);
  }
  return pl + shadow_db;
}

AntennaGainProbabilities antenna_gain_probabilities(double beamwidth_rad) {
  const double phi = beamwidth_rad;
  const double denom = kTwoPi * kTwoPi;
  return {phi * phi / denom, 2.0 * phi * (kTwoPi - phi) / denom,
          (kTwoPi - phi) * (kTwoPi - phi) / denom};
}

double sample_antenna_gain(const ChannelParams& params, std::mt19937_64& rng) {
  const auto p = antenna_gain_probabilities(params.mainlobe_beamwidth_rad);
  const double gm = params.mainlobe_gain_linear;
  const double gs = params.sidelobe_gain_linear;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < p.main_main) return gm * gm;
  if (u < p.main_main + p.main_side) return gm * gs;
  return gs * gs;
}

double distance_to_base_station(const Position& pos, const ChannelParams& params) {
  const double c = 0.5 * params.room_size_m;
  return std::hypot(pos.x_m - c, pos.y_m - c);
}

LinkRealization sample_link(int user, int slot, const Position& pos,
                            const ChannelParams& params, std::mt19937_64& rng) {
  LinkRealization link;
  link.user_id = user;
  link.slot = slot;
  link.distance_m = std::max(distance_to_base_station(pos, params), params.min_distance_m);
  const double p_los = los_probability(link.distance_m);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  link.los_state = u < p_los ? LosState::los : LosState::nlos;
  const double shadow =
      link.los_state == LosState::los ? params.shadow_los_db : params.shadow_nlos_db;
  link.pathloss_db = pathloss_db(link.distance_m, params.carrier_freq_hz, link.los_state, shadow,
                                 params.min_distance_m);
  link.channel_gain_linear = std::pow(10.0, -link.pathloss_db / 20.0);
  link.antenna_gain_linear = sample_antenna_gain(params, rng);
  return link;
}

double rate_bps(double bandwidth_hz, double channel_gain, double antenna_gain,
                const ChannelParams& params) {
  if (bandwidth_hz < 0.0 || std::isnan(bandwidth_hz))
    throw std::domain_error("rate_bps: bandwidth must be non-negative");
  if (bandwidth_hz == 0.0) return 0.0;
  const double snr =
      params.tx_power_w * channel_gain * antenna_gain / (params.noise_psd_w_per_hz * bandwidth_hz);
  return bandwidth_hz * std::log2(1.0 + snr);
}

}  // namespace edgevr

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

#include <numbers>
#include <random>

namespace edgevr {

/// mmWave downlink parameters. All values are SI / linear unless the name
/// says otherwise.
struct ChannelParams {
  double carrier_freq_hz = 28e9;
  double tx_power_w = 1.0;                      // 30 dBm
  double noise_psd_w_per_hz = 1.9952623149688796e-18;  // -147 dBm/Hz
  double mainlobe_beamwidth_rad = std::numbers::pi / 6.0;
  double mainlobe_gain_linear = 10.0;           // 10 dB
  double sidelobe_gain_linear = 0.1;            // -10 dB
  double shadow_los_db = 3.0;
  double shadow_nlos_db = 8.03;
  double min_distance_m = 1.0;
  double room_size_m = 20.0;
  /// Redraw LOS state and antenna gain every slot (block fading). When false
  /// the slot-0 draw is held for the whole episode.
  bool redraw_per_slot = true;

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
};

enum class LosState { los, nlos };

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
};

struct LinkRealization {
  int user_id = 0;
  int slot = 0;
  double distance_m = 0.0;
  LosState los_state = LosState::los;
  double pathloss_db = 0.0;
  double channel_gain_linear = 0.0;  // h = 10^(-pathloss/20)
  double antenna_gain_linear = 0.0;  // g

  double effective_gain() const { return channel_gain_linear * antenna_gain_linear; }
};

double db_to_linear(double db);
double dbm_to_watts(double dbm);

/// InH-Office LOS probability. Throws std::domain_error for d <= 0.
double los_probability(double distance_m);

/// Large-scale InH-Office pathloss plus the fixed shadowing term, in dB.
/// Distances below `min_distance_m` are clamped.
double pathloss_db(double distance_m, double carrier_freq_hz, LosState los,
                   double shadow_db, double min_distance_m = 1.0);

/// Probabilities of the three sectorial gain outcomes
/// {main*main, main*side, side*side}.
struct AntennaGainProbabilities {
  double main_main;
  double main_side;
  double side_side;
};
AntennaGainProbabilities antenna_gain_probabilities(double beamwidth_rad);

double sample_antenna_gain(const ChannelParams& params, std::mt19937_64& rng);

/// Distance from the base station at the room centre.
double distance_to_base_station(const Position& pos, const ChannelParams& params);

LinkRealization sample_link(int user, int slot, const Position& pos,
                            const ChannelParams& params, std::mt19937_64& rng);

/// Shannon rate B*log2(1 + P*h*g/(N0*B)). Zero bandwidth gives zero rate;
/// negative bandwidth throws std::domain_error.
double rate_bps(double bandwidth_hz, double channel_gain, double antenna_gain,
                const ChannelParams& params);

}  // namespace edgevr

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

#include <cmath>
#include <random>
#include <stdexcept>

#include "edgevr/channel.hpp"

using namespace edgevr;

TEST_CASE("los probability") {
  CHECK(los_probability(1.0) == 1.0);
  CHECK(los_probability(5.0) == 1.0);
  const double corner = std::sqrt(2.0) * 10.0;
  CHECK(los_probability(corner) == doctest::Approx(std::exp(-(corner - 5.0) / 70.8)).epsilon(1e-12));
  CHECK(los_probability(14.142) == doctest::Approx(0.8788).epsilon(1e-4));
  CHECK_THROWS_AS(los_probability(0.0), std::domain_error);
  CHECK_THROWS_AS(los_probability(-3.0), std::domain_error);

  double prev = 1.0;
  for (double d = 5.0; d <= 60.0; d += 0.5) {
    const double p = los_probability(d);
    CHECK(p <= prev);
    CHECK(p > 0.0);
    prev = p;
  }
}

TEST_CASE("pathloss") {
  const double f = 28e9;
  const double los1 = 32.4 + 20.0 * std::log10(28.0);
  CHECK(pathloss_db(1.0, f, LosState::los, 3.0) == doctest::Approx(los1 + 3.0).epsilon(1e-12));
  CHECK(pathloss_db(1.0, f, LosState::los, 3.0) == doctest::Approx(64.34).epsilon(1e-4));
  CHECK(pathloss_db(1.0, f, LosState::los, 0.0) == doctest::Approx(los1).epsilon(1e-12));

  // Shadowing is additive on top of the same large-scale term.
  for (double d : {1.0, 3.0, 7.5, 14.0}) {
    const double a = pathloss_db(d, f, LosState::nlos, 8.03);
    const double b = pathloss_db(d, f, LosState::nlos, 3.0);
    CHECK(a - b == doctest::Approx(5.03).epsilon(1e-12));
    CHECK(pathloss_db(d, f, LosState::nlos, 3.0) >= pathloss_db(d, f, LosState::los, 3.0));
  }

  // Below the minimum distance the loss is clamped.
  CHECK(pathloss_db(0.2, f, LosState::los, 3.0, 1.0) == pathloss_db(1.0, f, LosState::los, 3.0, 1.0));

  double prev = -1.0;
  for (double d = 1.0; d < 15.0; d += 0.25) {
    const double h = std::pow(10.0, -pathloss_db(d, f, LosState::los, 3.0) / 20.0);
    if (prev > 0.0) CHECK(h < prev);
    prev = h;
  }
}

TEST_CASE("antenna gain distribution") {
  ChannelParams ch;
  const auto p = antenna_gain_probabilities(ch.mainlobe_beamwidth_rad);
  CHECK(p.main_main == doctest::Approx(1.0 / 144.0).epsilon(1e-12));
  CHECK(p.main_side == doctest::Approx(22.0 / 144.0).epsilon(1e-12));
  CHECK(p.side_side == doctest::Approx(121.0 / 144.0).epsilon(1e-12));
  CHECK(p.main_main + p.main_side + p.side_side == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(42);
  const int n = 1000000;
  int mm = 0, ms = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double g = sample_antenna_gain(ch, rng);
    if (g == ch.mainlobe_gain_linear * ch.mainlobe_gain_linear) ++mm;
    else if (g == ch.mainlobe_gain_linear * ch.sidelobe_gain_linear) ++ms;
    else if (g == ch.sidelobe_gain_linear * ch.sidelobe_gain_linear) ++ss;
  }
  CHECK(mm + ms + ss == n);
  CHECK(std::abs(double(mm) / n - 1.0 / 144.0) < 0.005);
  CHECK(std::abs(double(ms) / n - 22.0 / 144.0) < 0.005);
  CHECK(std::abs(double(ss) / n - 121.0 / 144.0) < 0.005);

  CHECK(ch.mainlobe_gain_linear * ch.mainlobe_gain_linear == doctest::Approx(db_to_linear(20.0)));
  CHECK(ch.mainlobe_gain_linear * ch.sidelobe_gain_linear == doctest::Approx(1.0));
  CHECK(ch.sidelobe_gain_linear * ch.sidelobe_gain_linear == doctest::Approx(db_to_linear(-20.0)));
}

TEST_CASE("unit conversions") {
  CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
  CHECK(dbm_to_watts(-147.0) * 1.0 == doctest::Approx(ChannelParams{}.noise_psd_w_per_hz).epsilon(1e-12));
  CHECK(db_to_linear(10.0) == doctest::Approx(10.0));
}

TEST_CASE("sample link") {
  ChannelParams ch;
  const Position pos{3.0, 4.0};
  std::mt19937_64 a(7), b(7);
  const LinkRealization la = sample_link(2, 11, pos, ch, a);
  const LinkRealization lb = sample_link(2, 11, pos, ch, b);
  CHECK(la.user_id == 2);
  CHECK(la.slot == 11);
  CHECK(la.distance_m == lb.distance_m);
  CHECK(la.los_state == lb.los_state);
  CHECK(la.pathloss_db == lb.pathloss_db);
  CHECK(la.channel_gain_linear == lb.channel_gain_linear);
  CHECK(la.antenna_gain_linear == lb.antenna_gain_linear);
  CHECK(la.distance_m == doctest::Approx(std::hypot(7.0, 6.0)));

  const double pl_min = pathloss_db(ch.min_distance_m, ch.carrier_freq_hz, LosState::los, ch.shadow_los_db);
  const double hg_max = ch.mainlobe_gain_linear * ch.mainlobe_gain_linear * std::pow(10.0, -pl_min / 20.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(0.0, ch.room_size_m);
  for (int i = 0; i < 20000; ++i) {
    const LinkRealization l = sample_link(0, i, {coord(rng), coord(rng)}, ch, rng);
    CHECK(l.distance_m >= ch.min_distance_m);
    CHECK(l.effective_gain() > 0.0);
    CHECK(l.effective_gain() <= hg_max * (1.0 + 1e-12));
    CHECK(l.channel_gain_linear == doctest::Approx(std::pow(10.0, -l.pathloss_db / 20.0)));
  }
}

TEST_CASE("shannon rate") {
  ChannelParams ch;
  const double B = 100e6;
  const double unit = ch.noise_psd_w_per_hz * B / ch.tx_power_w;
  CHECK(rate_bps(B, unit, 1.0, ch) == doctest::Approx(100e6).epsilon(1e-12));
  CHECK(rate_bps(B, 3.0 * unit, 1.0, ch) == doctest::Approx(200e6).epsilon(1e-12));
  CHECK(rate_bps(0.0, unit, 1.0, ch) == 0.0);
  CHECK_THROWS_AS(rate_bps(-1.0, unit, 1.0, ch), std::domain_error);

  // Increasing and concave in bandwidth for a fixed channel.
  const double hg = 1e-7;
  double prev = 0.0, prev_gain = 1e300;
  for (double b = 50e6; b <= 1e9; b += 50e6) {
    const double r = rate_bps(b, hg, 1.0, ch);
    CHECK(r > prev);
    CHECK(r - prev < prev_gain);
    prev_gain = r - prev;
    prev = r;
  }
}

TEST_CASE("channel params validation") {
  ChannelParams ch;
  CHECK_NOTHROW(ch.validate());
  ch.tx_power_w = -1.0;
  CHECK_THROWS_AS(ch.validate(), std::invalid_argument);
  ch = {};
  ch.mainlobe_beamwidth_rad = 7.0;
  CHECK_THROWS_AS(ch.validate(), std::invalid_argument);
}

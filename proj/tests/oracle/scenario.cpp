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

#include "scenario.hpp"

#include <cmath>
#include <sstream>

namespace oracle {

Scenario random_scenario(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto coin = [&](double p) { return unit(rng) < p; };

  Scenario s;
  Params& p = s.params;
  p.users = coin(0.5) ? 1 : 2;
  p.window = 5;
  p.device_hz = uni(2e9, 4e9);
  p.strict_compress = coin(0.25);
  const int K = 5 + static_cast<int>(unit(rng) * 16.0);
  const double screen = 2064.0 * 2208.0;

  for (int k = 0; k < K + 2; ++k) {
    SlotInput in;
    for (int u = 0; u < p.users; ++u) {
      in.edge_hz.push_back(coin(0.1) ? 0.0 : uni(2e9, 30e9));
      in.rate_bps.push_back(coin(0.1) ? 0.0 : uni(2e8, 5e9));
    }
    if (k < K) {
      for (int u = 0; u < p.users; ++u) {
        UserInput x;
        x.fg_device = coin(0.4);
        x.fg_load = coin(0.05) ? 0.0 : uni(1e6, 1.4e8);
        x.fg_bits = 40.0 * std::floor(uni(0.0, 0.5) * screen);
        for (int l = 0; l < p.window; ++l) {
          x.render.push_back(coin(0.35) ? 1 : 0);
          x.on_device.push_back(coin(0.3) ? 1 : 0);
          x.bg_load.push_back(uni(2.3e7, 9.5e7));
        }
        in.users.push_back(std::move(x));
      }
    }
    s.slots.push_back(std::move(in));
  }
  return s;
}

edgevr::PipelineParams library_params(const Params& p) {
  edgevr::PipelineParams q;
  q.users = p.users;
  q.window_len = p.window;
  q.slot_s = 0.01;
  q.mtp_s = 0.02;
  q.atw_penalty_s = p.atw_s;
  q.merge_s = p.merge_s;
  q.compress_s = p.compress_s;
  q.decompress_s = p.decompress_s;
  q.compression_ratio = p.alpha;
  q.bg_size_bits = p.bg_bits;
  q.device_gpu_hz = p.device_hz;
  q.strict_compress_threshold = p.strict_compress;
  return q;
}

LibraryRun run_library(const Scenario& s) {
  const Params& p = s.params;
  edgevr::QueueNetwork net(library_params(p));
  std::vector<edgevr::TileEvent> events;
  net.set_event_log(&events);
  LibraryRun out;
  const long S = p.slot_ticks, M = p.mtp_ticks;
  for (int k = 0; k < static_cast<int>(s.slots.size()); ++k) {
    const SlotInput& in = s.slots[k];
    net.apply_aqm(k);
    if (!in.users.empty()) {
      std::vector<edgevr::UserDecision> dec(p.users);
      std::vector<edgevr::RequestProfile> prof(p.users);
      for (int u = 0; u < p.users; ++u) {
        const UserInput& x = in.users[u];
        dec[u].fg_on_device = x.fg_device;
        for (int l = 0; l < p.window; ++l) {
          dec[u].render_bg.push_back(static_cast<std::uint8_t>(x.render[l]));
          dec[u].bg_on_device.push_back(static_cast<std::uint8_t>(x.on_device[l]));
        }
        prof[u].fg_load_cycles = x.fg_load;
        prof[u].fg_size_bits = x.fg_bits;
        prof[u].bg_loads_cycles = x.bg_load;
        prof[u].bg_size_bits = p.bg_bits;
      }
      net.enqueue_decisions(k, dec, prof);
    }
    edgevr::SlotResources res;
    res.edge_gpu_hz = in.edge_hz;
    res.rate_bps = in.rate_bps;
    res.bandwidth_hz.assign(p.users, 0.0);
    net.advance(k, res);
    for (int f = 0; f <= k; ++f) {
      const long dl = f * S + M;
      if (dl <= k * S || dl > (k + 1) * S) continue;
      if (s.slots[f].users.empty()) continue;
      for (int u = 0; u < p.users; ++u) out.outcomes.push_back(net.evaluate_frame(u, f));
    }
  }
  for (const auto& e : events)
    if (e.to == edgevr::Stage::pool) out.pool_arrival[e.tile] = e.time_s;
  out.ledger = net.ledger();
  return out;
}

Comparison compare(const Scenario& s, double tolerance_s) {
  Comparison c;
  const LibraryRun lib = run_library(s);
  const Result ref = simulate(s.params, s.slots);
  std::ostringstream why;

  c.tiles = static_cast<long>(ref.pool_arrival.size());
  c.frames = static_cast<long>(ref.outcomes.size());
  if (lib.pool_arrival.size() != ref.pool_arrival.size()) {
    why << "pool arrivals: library " << lib.pool_arrival.size() << ", oracle "
        << ref.pool_arrival.size() << "; ";
    c.ok = false;
  }
  for (const auto& [id, t] : ref.pool_arrival) {
    auto it = lib.pool_arrival.find(id);
    if (it == lib.pool_arrival.end()) {
      if (c.ok) why << "tile " << id << " missing from library; ";
      c.ok = false;
      continue;
    }
    const double err = std::abs(it->second - t);
    c.max_error_s = std::max(c.max_error_s, err);
    if (err > tolerance_s) {
      if (c.ok) why << "tile " << id << ": library " << it->second << " oracle " << t << "; ";
      c.ok = false;
    }
  }
  if (lib.outcomes.size() != ref.outcomes.size()) {
    why << "frame count: library " << lib.outcomes.size() << ", oracle " << ref.outcomes.size();
    c.ok = false;
  } else {
    for (std::size_t i = 0; i < ref.outcomes.size(); ++i) {
      const auto& a = lib.outcomes[i];
      const auto& b = ref.outcomes[i];
      const bool same = a.user == b.user && a.frame_slot == b.frame && a.fg_feasible == b.fg_ok &&
                        a.bg_feasible == b.bg_ok && a.merged == b.merged &&
                        a.chosen_bg_sensor_slot == b.k_star && std::abs(a.age_s - b.age_s) <= 1e-9;
      if (!same) {
        if (c.ok)
          why << "frame " << b.frame << " user " << b.user << ": library (" << a.fg_feasible
              << a.bg_feasible << " k*=" << a.chosen_bg_sensor_slot << ") oracle (" << b.fg_ok
              << b.bg_ok << " k*=" << b.k_star << ")";
        c.ok = false;
      }
    }
  }
  if (lib.ledger.dropped != ref.dropped || lib.ledger.merged != ref.merged ||
      lib.ledger.enqueued != ref.enqueued) {
    if (c.ok)
      why << "ledger: library enq/merged/dropped " << lib.ledger.enqueued << "/" << lib.ledger.merged
          << "/" << lib.ledger.dropped << ", oracle " << ref.enqueued << "/" << ref.merged << "/"
          << ref.dropped;
    c.ok = false;
  }
  c.mismatch = why.str();
  return c;
}

}  // namespace oracle

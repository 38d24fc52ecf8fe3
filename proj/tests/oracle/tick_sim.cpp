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

#include "tick_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace oracle {

namespace {

// Service order inside a tick follows the direction tiles move in.
enum Station { DEV = 0, EDGE, COMP, TX, DEC, N_STATIONS };

struct Job {
  std::uint64_t id;
  bool fg;
  int sensor;
  int frame;
  double cycles;
  double bits;
  double left;  // work remaining at the current station
  double arrival;
  bool started;
};

struct Done {
  bool fg;
  int sensor;
  int frame;
  double at;
};

struct UserState {
  std::array<std::vector<Job>, N_STATIONS> st;
  std::vector<Done> pool;
  std::vector<char> judged;
};

long to_ticks(double s, double dt) { return std::lround(s / dt); }

}  // namespace

Result simulate(const Params& p, const std::vector<SlotInput>& slots) {
  Result res;
  const double dt = p.tick_s;
  const double slot_s = static_cast<double>(p.slot_ticks) * dt;
  std::vector<UserState> us(p.users);
  std::uint64_t next_id = 0;

  // AQM thresholds in ticks, indexed [station][fg].
  long thr[N_STATIONS][2];
  const long m = to_ticks(p.merge_s, dt), c = to_ticks(p.compress_s, dt),
             d = to_ticks(p.decompress_s, dt);
  thr[EDGE][1] = m;
  thr[EDGE][0] = m + c + d;
  thr[COMP][0] = thr[COMP][1] = p.strict_compress ? m + c + d : m + d;
  thr[TX][1] = m;
  thr[TX][0] = m + d;
  thr[DEC][0] = thr[DEC][1] = m;
  thr[DEV][0] = thr[DEV][1] = m;

  auto push = [](std::vector<Job>& q, Job j) {
    auto it = q.end();
    while (it != q.begin() && std::prev(it)->arrival > j.arrival) --it;
    q.insert(it, j);
  };

  const long total = static_cast<long>(slots.size()) * p.slot_ticks;
  for (long n = 0; n < total; ++n) {
    const int k = static_cast<int>(n / p.slot_ticks);
    const SlotInput& in = slots[k];

    if (n % p.slot_ticks == 0) {
      for (auto& u : us)
        for (int s = 0; s < N_STATIONS; ++s) {
          auto& q = u.st[s];
          for (auto it = q.begin(); it != q.end();) {
            const long rest = static_cast<long>(it->frame) * p.slot_ticks + p.mtp_ticks - n;
            if (rest <= thr[s][it->fg ? 1 : 0]) {
              ++res.dropped;
              it = q.erase(it);
            } else {
              ++it;
            }
          }
        }
      const double now = static_cast<double>(k) * slot_s;
      for (int ui = 0; ui < static_cast<int>(in.users.size()); ++ui) {
        const UserInput& x = in.users[ui];
        auto& u = us[ui];
        Job fg{next_id++, true, k, k, x.fg_load, x.fg_bits, x.fg_load, now, false};
        auto& q = u.st[x.fg_device ? DEV : EDGE];
        auto pos = std::find_if(q.begin(), q.end(), [](const Job& j) { return !j.fg && !j.started; });
        q.insert(pos, fg);
        ++res.enqueued;
        for (int l = 0; l < p.window; ++l) {
          if (!x.render[l]) continue;
          Job bg{next_id++, false, k, k + l, x.bg_load[l], p.bg_bits, x.bg_load[l], now, false};
          push(u.st[x.on_device[l] ? DEV : EDGE], bg);
          ++res.enqueued;
        }
      }
    }

    const double t0 = static_cast<double>(n) * dt;
    const double t1 = static_cast<double>(n + 1) * dt;
    for (int ui = 0; ui < p.users; ++ui) {
      auto& u = us[ui];
      const double rate[N_STATIONS] = {p.device_hz, in.edge_hz[ui], 1.0, in.rate_bps[ui], 1.0};
      for (int s = 0; s < N_STATIONS; ++s) {
        auto& q = u.st[s];
        double cur = t0;
        while (!q.empty()) {
          Job& j = q.front();
          cur = std::max(cur, j.arrival);
          if (cur >= t1) break;
          double fin;
          if (j.left <= 0.0) {
            fin = cur;
          } else {
            if (rate[s] <= 0.0) break;
            const double cap = (t1 - cur) * rate[s];
            if (j.left > cap) {
              j.left -= cap;
              j.started = true;
              break;
            }
            fin = cur + j.left / rate[s];
          }
          Job moved = j;
          q.erase(q.begin());
          cur = fin;
          moved.arrival = fin;
          moved.started = false;
          int next = -1;
          if (s == EDGE) {
            next = moved.fg ? TX : COMP;
            moved.left = moved.fg ? moved.bits : p.compress_s;
          } else if (s == COMP) {
            next = TX;
            moved.left = p.alpha * p.bg_bits;
          } else if (s == TX && !moved.fg) {
            next = DEC;
            moved.left = p.decompress_s;
          }
          if (next >= 0) {
            push(u.st[next], moved);
            continue;
          }
          res.pool_arrival[moved.id] = fin;
          const bool late = moved.frame < static_cast<int>(u.judged.size()) && u.judged[moved.frame];
          if (!late) u.pool.push_back({moved.fg, moved.sensor, moved.frame, fin});
        }
      }
    }

    // Frames whose deadline is the end of this tick.
    const long end = n + 1;
    if ((end - p.mtp_ticks) % p.slot_ticks != 0 || end < p.mtp_ticks) continue;
    const int f = static_cast<int>((end - p.mtp_ticks) / p.slot_ticks);
    if (f >= static_cast<int>(slots.size()) || slots[f].users.empty()) continue;
    const double base = static_cast<double>(f) * slot_s;
    const double budget = static_cast<double>(p.mtp_ticks) * dt;
    for (int ui = 0; ui < p.users; ++ui) {
      auto& u = us[ui];
      Outcome o;
      o.user = ui;
      o.frame = f;
      for (const Done& t : u.pool) {
        if (t.frame != f) continue;
        if (t.fg) {
          o.fg_ok = (t.at - base) + p.merge_s <= budget + 1e-9;
        } else {
          const double start = static_cast<double>(t.sensor) * slot_s;
          const double allow = static_cast<double>(f - t.sensor) * slot_s + budget;
          if ((t.at - start) + p.merge_s <= allow + 1e-9) o.k_star = std::max(o.k_star, t.sensor);
        }
      }
      o.bg_ok = o.k_star >= 0;
      o.merged = o.fg_ok && o.bg_ok;
      o.age_s = o.merged ? static_cast<double>(f - o.k_star) * slot_s : p.atw_s;
      if (o.merged) res.merged += 2;
      std::erase_if(u.pool, [f](const Done& t) { return t.frame <= f; });
      if (static_cast<int>(u.judged.size()) <= f) u.judged.resize(f + 1, 0);
      u.judged[f] = 1;
      res.outcomes.push_back(o);
    }
  }
  return res;
}

}  // namespace oracle

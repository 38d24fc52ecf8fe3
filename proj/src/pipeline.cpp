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

#include "edgevr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace edgevr {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("pipeline.") + name + " must be positive and finite");
}

double& stage_work(Tile& t, Stage s) {
  switch (s) {
    case Stage::edge_render:
    case Stage::device_render:
      return t.load_cycles;
    case Stage::transmit:
      return t.bits;
    case Stage::compress:
    case Stage::decompress:
      return t.fixed_s;
    default:
      throw std::logic_error("stage_work: tile is not in a service queue");
  }
}

}  // namespace

void PipelineParams::validate() const {
  if (users < 1) throw std::invalid_argument("pipeline.users must be >= 1");
  if (window_len < 1) throw std::invalid_argument("pipeline.window_len must be >= 1");
  require_positive(slot_s, "slot_s");
  require_positive(mtp_s, "mtp_s");
  require_positive(atw_penalty_s, "atw_penalty_s");
  require_positive(merge_s, "merge_s");
  require_positive(compress_s, "compress_s");
  require_positive(decompress_s, "decompress_s");
  require_positive(compression_ratio, "compression_ratio");
  require_positive(bg_size_bits, "bg_size_bits");
  require_positive(device_gpu_hz, "device_gpu_hz");
  if (!(time_slack_s >= 0.0) || time_slack_s > 1e-6)
    throw std::invalid_argument("pipeline.time_slack_s must be in [0, 1e-6]");
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::none: return "none";
    case Stage::edge_render: return "edge_render";
    case Stage::compress: return "compress";
    case Stage::transmit: return "transmit";
    case Stage::decompress: return "decompress";
    case Stage::device_render: return "device_render";
    case Stage::pool: return "pool";
    case Stage::merged: return "merged";
    case Stage::expired: return "expired";
    case Stage::dropped: return "dropped";
  }
  return "?";
}

double age_metric(const FrameOutcome& outcome, double slot_s, double atw_penalty_s) {
  if (!outcome.merged) return atw_penalty_s;
  return static_cast<double>(outcome.frame_slot - outcome.chosen_bg_sensor_slot) * slot_s;
}

double background_deadline(int sensor_slot, int frame_slot, double slot_s, double mtp_s,
                           int window_len) {
  const int gap = frame_slot - sensor_slot;
  if (gap < 0 || gap >= window_len)
    throw std::domain_error("background_deadline: frame " + std::to_string(frame_slot) +
                            " is not in the prediction window of sensor slot " +
                            std::to_string(sensor_slot));
  return static_cast<double>(gap) * slot_s + mtp_s;
}

double device_energy(const UserDecision& decision, const RequestProfile& profile,
                     double device_gpu_hz, double beta, double decompress_energy_j) {
  double local_cycles = decision.fg_on_device ? profile.fg_load_cycles : 0.0;
  int edge_bg = 0;
  const std::size_t n = std::min(decision.render_bg.size(), profile.bg_loads_cycles.size());
  for (std::size_t j = 0; j < n; ++j) {
    if (!decision.render_bg[j]) continue;
    if (decision.bg_on_device.at(j))
      local_cycles += profile.bg_loads_cycles[j];
    else
      ++edge_bg;
  }
  return edge_bg * decompress_energy_j + beta * local_cycles * device_gpu_hz * device_gpu_hz;
}

// ---------------------------------------------------------------------------

QueueNetwork::QueueNetwork(PipelineParams params) : params_(std::move(params)) {
  params_.validate();
  reset();
}

void QueueNetwork::reset() {
  users_.assign(params_.users, UserQueues{});
  ledger_ = {};
  next_id_ = 0;
  next_window_ = 0;
}

void QueueNetwork::log(double t, const Tile& tile, Stage from, Stage to) {
  if (log_) log_->push_back({t, tile.user, tile.id, from, to});
}

const std::deque<Tile>& QueueNetwork::queue(int user, Stage stage) const {
  return users_.at(user).queues.at(queue_index(stage));
}

double QueueNetwork::last_departure(int user, Stage stage) const {
  return users_.at(user).last_departure.at(queue_index(stage));
}

double QueueNetwork::rest_time(const Tile& tile, int slot) const {
  // Slot arithmetic on integers keeps the AQM boundary cases exact.
  return static_cast<double>(tile.frame_slot - slot) * params_.slot_s + params_.mtp_s;
}

double QueueNetwork::aqm_threshold(const Tile& tile) const {
  const auto& p = params_;
  const bool fg = tile.kind == TileKind::foreground;
  switch (tile.stage) {
    case Stage::edge_render:
      return fg ? p.merge_s : p.merge_s + p.compress_s + p.decompress_s;
    case Stage::compress:
      return p.strict_compress_threshold ? p.merge_s + p.compress_s + p.decompress_s
                                         : p.merge_s + p.decompress_s;
    case Stage::transmit:
      return fg ? p.merge_s : p.merge_s + p.decompress_s;
    case Stage::decompress:
    case Stage::device_render:
      return p.merge_s;
    default:
      throw std::logic_error("aqm_threshold: tile is not queued");
  }
}

std::uint64_t QueueNetwork::enqueue_tile(int user, TileKind kind, int sensor_slot, int frame_slot,
                                         bool on_device, double load_cycles, double size_bits) {
  if (user < 0 || user >= params_.users) throw std::out_of_range("enqueue_tile: bad user");
  if (sensor_slot < next_window_)
    throw std::logic_error("enqueue_tile: slot " + std::to_string(sensor_slot) +
                           " is already simulated");
  if (kind == TileKind::foreground && frame_slot != sensor_slot)
    throw std::domain_error("enqueue_tile: foreground frame must equal its sensor slot");
  if (kind == TileKind::background)
    background_deadline(sensor_slot, frame_slot, params_.slot_s, params_.mtp_s, params_.window_len);

  Tile tile;
  tile.id = next_id_++;
  tile.user = user;
  tile.kind = kind;
  tile.sensor_slot = sensor_slot;
  tile.frame_slot = frame_slot;
  tile.load_cycles = load_cycles;
  tile.bits = size_bits;
  tile.stage = on_device ? Stage::device_render : Stage::edge_render;
  tile.enqueue_s = static_cast<double>(sensor_slot) * params_.slot_s;
  tile.deadline_s = static_cast<double>(frame_slot) * params_.slot_s + params_.mtp_s;

  auto& q = users_[user].queues[queue_index(tile.stage)];
  if (kind == TileKind::foreground) {
    auto it = std::find_if(q.begin(), q.end(), [](const Tile& t) {
      return t.kind == TileKind::background && !t.in_service;
    });
    q.insert(it, tile);
  } else {
    insert_by_arrival(q, tile);
  }
  ++ledger_.enqueued;
  log(tile.enqueue_s, tile, Stage::none, tile.stage);
  return tile.id;
}

void QueueNetwork::enqueue_decisions(int slot, const std::vector<UserDecision>& decisions,
                                     const std::vector<RequestProfile>& profiles) {
  if (static_cast<int>(decisions.size()) != params_.users ||
      static_cast<int>(profiles.size()) != params_.users)
    throw std::invalid_argument("enqueue_decisions: need one decision and profile per user");
  for (int u = 0; u < params_.users; ++u) {
    const auto& d = decisions[u];
    const auto& prof = profiles[u];
    enqueue_tile(u, TileKind::foreground, slot, slot, d.fg_on_device, prof.fg_load_cycles,
                 prof.fg_size_bits);
    const int n = std::min<int>(params_.window_len, static_cast<int>(d.render_bg.size()));
    for (int j = 0; j < n; ++j) {
      if (!d.render_bg[j]) continue;
      enqueue_tile(u, TileKind::background, slot, slot + j, d.bg_on_device.at(j) != 0,
                   prof.bg_loads_cycles.at(j), prof.bg_size_bits);
    }
  }
}

void QueueNetwork::insert_by_arrival(std::deque<Tile>& q, Tile tile) {
  auto it = q.end();
  while (it != q.begin() && std::prev(it)->enqueue_s > tile.enqueue_s) --it;
  q.insert(it, std::move(tile));
}

void QueueNetwork::route_completed(int user, Tile tile, double t) {
  const Stage from = tile.stage;
  Stage to = Stage::pool;
  switch (from) {
    case Stage::device_render:
      break;
    case Stage::edge_render:
      if (tile.kind == TileKind::background) {
        to = Stage::compress;
        tile.fixed_s = params_.compress_s;
      } else {
        to = Stage::transmit;
      }
      break;
    case Stage::compress:
      to = Stage::transmit;
      tile.bits = params_.compression_ratio * params_.bg_size_bits;
      break;
    case Stage::transmit:
      if (tile.kind == TileKind::background) {
        to = Stage::decompress;
        tile.fixed_s = params_.decompress_s;
      }
      break;
    case Stage::decompress:
      break;
    default:
      throw std::logic_error("route_completed: tile is not queued");
  }

  tile.stage = to;
  tile.enqueue_s = t;
  tile.in_service = false;
  log(t, tile, from, to);
  if (to != Stage::pool) {
    insert_by_arrival(users_[user].queues[queue_index(to)], std::move(tile));
    return;
  }
  tile.completion_s = t;
  if (frame_evaluated(user, tile.frame_slot)) {
    log(t, tile, Stage::pool, Stage::expired);
    ++ledger_.expired;
    return;
  }
  users_[user].pool.push_back(std::move(tile));
}

void QueueNetwork::serve_queue(int user, Stage stage, double rate, double t0, double t1) {
  auto& uq = users_[user];
  auto& q = uq.queues[queue_index(stage)];
  double cursor = t0;
  while (!q.empty()) {
    Tile& head = q.front();
    const double start = std::max(cursor, head.enqueue_s);
    if (start >= t1) break;
    double& work = stage_work(head, stage);
    double done;
    if (work <= 0.0) {
      done = start;
    } else if (rate > 0.0) {
      const double need = work / rate;
      if (start + need <= t1) {
        done = start + need;
      } else {
        work = std::max(0.0, work - (t1 - start) * rate);
        head.in_service = true;
        break;
      }
    } else {
      break;  // no resource this slot; the head blocks the queue
    }
    Tile tile = std::move(head);
    q.pop_front();
    work = 0.0;
    uq.last_departure[queue_index(stage)] = done;
    cursor = done;
    route_completed(user, std::move(tile), done);
  }
}

void QueueNetwork::advance(int slot, const SlotResources& res) {
  if (slot < next_window_)
    throw std::logic_error("advance: clock regression (slot " + std::to_string(slot) +
                           " after " + std::to_string(next_window_ - 1) + ")");
  if (slot > next_window_)
    throw std::logic_error("advance: slot " + std::to_string(next_window_) + " was skipped");
  const auto n = static_cast<std::size_t>(params_.users);
  if (res.edge_gpu_hz.size() != n || res.rate_bps.size() != n)
    throw std::invalid_argument("advance: resources must have one entry per user");

  const double t0 = static_cast<double>(slot) * params_.slot_s;
  const double t1 = static_cast<double>(slot + 1) * params_.slot_s;
  for (int u = 0; u < params_.users; ++u) {
    // Upstream queues first so downstream arrivals inside the window are
    // known before their queue is served.
    serve_queue(u, Stage::device_render, params_.device_gpu_hz, t0, t1);
    serve_queue(u, Stage::edge_render, res.edge_gpu_hz[u], t0, t1);
    serve_queue(u, Stage::compress, 1.0, t0, t1);
    serve_queue(u, Stage::transmit, res.rate_bps[u], t0, t1);
    serve_queue(u, Stage::decompress, 1.0, t0, t1);
  }
  next_window_ = slot + 1;
}

DropCounts QueueNetwork::apply_aqm(int slot) {
  DropCounts counts(params_.users, std::array<int, kNumQueues>{});
  const double now = static_cast<double>(slot) * params_.slot_s;
  for (int u = 0; u < params_.users; ++u) {
    for (int qi = 0; qi < kNumQueues; ++qi) {
      auto& q = users_[u].queues[qi];
      for (auto it = q.begin(); it != q.end();) {
        if (rest_time(*it, slot) <= aqm_threshold(*it)) {
          log(now, *it, it->stage, Stage::dropped);
          ++counts[u][qi];
          ++ledger_.dropped;
          it = q.erase(it);
        } else {
          ++it;
        }
      }
    }
  }
  return counts;
}

int QueueNetwork::aqm_violations(int slot) const {
  int n = 0;
  for (const auto& uq : users_)
    for (const auto& q : uq.queues)
      for (const auto& t : q)
        if (rest_time(t, slot) <= aqm_threshold(t)) ++n;
  return n;
}

bool QueueNetwork::frame_evaluated(int user, int frame) const {
  const auto& ev = users_[user].evaluated;
  return frame >= 0 && static_cast<std::size_t>(frame) < ev.size() && ev[frame];
}

FrameOutcome QueueNetwork::evaluate_frame(int user, int frame_slot) {
  if (user < 0 || user >= params_.users) throw std::out_of_range("evaluate_frame: bad user");
  if (frame_slot < 0) throw std::out_of_range("evaluate_frame: negative frame");
  auto& uq = users_[user];
  if (frame_evaluated(user, frame_slot))
    throw std::logic_error("evaluate_frame: frame " + std::to_string(frame_slot) + " of user " +
                           std::to_string(user) + " evaluated twice");
  const double deadline_slots = params_.mtp_s / params_.slot_s;
  if (static_cast<double>(next_window_ - frame_slot) < deadline_slots - 1e-9)
    throw std::logic_error("evaluate_frame: frame deadline not reached yet");
  if (uq.evaluated.size() <= static_cast<std::size_t>(frame_slot))
    uq.evaluated.resize(static_cast<std::size_t>(frame_slot) + 1, false);
  uq.evaluated[frame_slot] = true;

  const auto& p = params_;
  FrameOutcome out;
  out.user = user;
  out.frame_slot = frame_slot;

  const Tile* fg = nullptr;
  for (const auto& t : uq.pool) {
    if (t.frame_slot != frame_slot) continue;
    if (t.kind == TileKind::foreground) {
      fg = &t;
      continue;
    }
    const double latency =
        t.completion_s - static_cast<double>(t.sensor_slot) * p.slot_s + p.merge_s;
    const double budget = static_cast<double>(frame_slot - t.sensor_slot) * p.slot_s + p.mtp_s;
    if (latency <= budget + p.time_slack_s) out.chosen_bg_sensor_slot = std::max(out.chosen_bg_sensor_slot, t.sensor_slot);
  }
  if (fg) {
    out.fg_latency_s = fg->completion_s - static_cast<double>(frame_slot) * p.slot_s + p.merge_s;
    out.fg_feasible = out.fg_latency_s <= p.mtp_s + p.time_slack_s;
  }
  out.bg_feasible = out.chosen_bg_sensor_slot >= 0;
  out.merged = out.fg_feasible && out.bg_feasible;
  out.age_s = age_metric(out, p.slot_s, p.atw_penalty_s);

  const double now = static_cast<double>(frame_slot) * p.slot_s + p.mtp_s;
  std::vector<Tile> kept;
  kept.reserve(uq.pool.size());
  for (auto& t : uq.pool) {
    if (t.frame_slot > frame_slot) {
      kept.push_back(std::move(t));
      continue;
    }
    const bool used = out.merged && t.frame_slot == frame_slot &&
                      (t.kind == TileKind::foreground || t.sensor_slot == out.chosen_bg_sensor_slot);
    if (used) {
      ++ledger_.merged;
      log(now, t, Stage::pool, Stage::merged);
    } else {
      ++ledger_.expired;
      log(now, t, Stage::pool, Stage::expired);
    }
  }
  uq.pool = std::move(kept);
  return out;
}

void QueueNetwork::finish() {
  const double now = static_cast<double>(next_window_) * params_.slot_s;
  for (auto& uq : users_) {
    for (auto& q : uq.queues) {
      for (const auto& t : q) log(now, t, t.stage, Stage::expired);
      ledger_.expired += static_cast<long>(q.size());
      q.clear();
    }
    for (const auto& t : uq.pool) log(now, t, Stage::pool, Stage::expired);
    ledger_.expired += static_cast<long>(uq.pool.size());
    uq.pool.clear();
  }
}

}  // namespace edgevr

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

#include "edgevr/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace edgevr {

BaselineKind parse_baseline_kind(std::string_view name) {
  std::string s;
  for (char c : name)
    if (c != '-' && c != '_') s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "pff") return BaselineKind::pff;
  if (s == "plf") return BaselineKind::plf;
  if (s == "meclf") return BaselineKind::meclf;
  if (s == "random") return BaselineKind::random;
  throw std::invalid_argument("unknown baseline '" + std::string(name) +
                              "' (expected pff, plf, meclf or random)");
}

std::string_view baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::pff: return "pff";
    case BaselineKind::plf: return "plf";
    case BaselineKind::meclf: return "meclf";
    case BaselineKind::random: return "random";
  }
  return "?";
}

RawAction fixed_action(int users, int window_len, bool fg_on_device, int offset) {
  if (offset < 0 || offset >= window_len)
    throw std::invalid_argument("fixed_action: offset outside the prediction window");
  RawAction a = RawAction::zeros(users, window_len);
  a.zf.setConstant(fg_on_device ? 1 : 0);
  a.xb.col(offset).setOnes();
  return a;
}

FixedPolicy::FixedPolicy(BaselineKind kind, int users, int window_len) : kind_(kind) {
  const int last = window_len - 1;
  switch (kind) {
    case BaselineKind::pff:
      // With a one-frame window the next frame is not predictable; fall back
      // to the current one.
      action_ = fixed_action(users, window_len, true, std::min(1, last));
      break;
    case BaselineKind::plf:
      action_ = fixed_action(users, window_len, true, last);
      break;
    case BaselineKind::meclf:
      action_ = fixed_action(users, window_len, false, last);
      break;
    default:
      throw std::invalid_argument("FixedPolicy: not a fixed baseline");
  }
}

RandomPolicy::RandomPolicy(int users, int window_len) : users_(users), window_len_(window_len) {}

void RandomPolicy::begin_episode(int episode, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode), 0x5eedu};
  rng_.seed(seq);
}

RawAction RandomPolicy::act(const PolicyContext&) {
  RawAction a = RawAction::zeros(users_, window_len_);
  std::bernoulli_distribution coin(0.5);
  std::exponential_distribution<double> expo(1.0);
  for (int u = 0; u < users_; ++u) a.zf[u] = coin(rng_);
  for (int u = 0; u < users_; ++u)
    for (int l = 0; l < window_len_; ++l) a.xb(u, l) = coin(rng_);
  for (int u = 0; u < users_; ++u)
    for (int l = 0; l < window_len_; ++l) a.zb(u, l) = coin(rng_);
  // softmax(log E) with E ~ Exp(1) is a flat Dirichlet draw.
  for (int u = 0; u < users_; ++u) a.w_bandwidth[u] = std::log(expo(rng_));
  for (int u = 0; u < users_; ++u) a.w_gpu[u] = std::log(expo(rng_));
  return a;
}

std::unique_ptr<Policy> make_baseline(BaselineKind kind, int users, int window_len) {
  if (kind == BaselineKind::random) return std::make_unique<RandomPolicy>(users, window_len);
  return std::make_unique<FixedPolicy>(kind, users, window_len);
}

}  // namespace edgevr

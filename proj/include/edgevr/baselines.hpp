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

// Fixed reference policies. P-FF and P-LF render the foreground on the
// device and one background tile at the edge (next frame / last frame of
// the prediction window); MEC-LF renders everything at the edge. All split
// bandwidth and GPU evenly.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>

#include "edgevr/env.hpp"

namespace edgevr {

enum class BaselineKind { pff, plf, meclf, random };

/// Accepts pff, plf, meclf, random (also p-ff, p-lf, mec-lf).
BaselineKind parse_baseline_kind(std::string_view name);
std::string_view baseline_name(BaselineKind kind);

struct PolicyContext {
  int episode = 0;
  int slot = 0;
  const Eigen::VectorXd* obs = nullptr;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(int /*episode*/, std::uint64_t /*seed*/) {}
  virtual RawAction act(const PolicyContext& ctx) = 0;
};

/// One edge-rendered background tile at window offset `offset`, foreground
/// on device or edge, equal splits.
RawAction fixed_action(int users, int window_len, bool fg_on_device, int offset);

class FixedPolicy : public Policy {
 public:
  FixedPolicy(BaselineKind kind, int users, int window_len);
  std::string name() const override { return std::string(baseline_name(kind_)); }
  RawAction act(const PolicyContext&) override { return action_; }

 private:
  BaselineKind kind_;
  RawAction action_;
};

/// Fair coin per binary, allocation weights uniform on the simplex.
class RandomPolicy : public Policy {
 public:
  RandomPolicy(int users, int window_len);
  std::string name() const override { return "random"; }
  void begin_episode(int episode, std::uint64_t seed) override;
  RawAction act(const PolicyContext&) override;

 private:
  int users_;
  int window_len_;
  std::mt19937_64 rng_;
};

std::unique_ptr<Policy> make_baseline(BaselineKind kind, int users, int window_len);

}  // namespace edgevr

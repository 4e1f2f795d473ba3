// Copyright 2026 The gcomm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Learning-progress task sampling: LP_i = |r_i - mu_i| over held-out reward,
// mu an exponential average, p(i) proportional to LP_i.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/nn/random.hpp"

namespace gcomm {

class LPTracker {
 public:
  LPTracker() = default;

  /// `initial` seeds both mu and LP.
  LPTracker(std::vector<double> initial, double beta, double epsilon = 0.0)
      : mu_(std::move(initial)), lp_(mu_), beta_(beta), epsilon_(epsilon) {
    if (mu_.empty()) throw Error(ErrorCode::kInvalidArgument, "LP needs at least one task");
    if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta in (0,1]");
    if (epsilon < 0.0 || epsilon > 1.0) throw Error(ErrorCode::kInvalidArgument, "epsilon");
    for (double& v : lp_) v = std::abs(v);
    refresh();
  }

  /// LP_i = |r_i - mu_i| against the old mean, then mu_i moves toward r_i.
  void update(std::span<const double> rewards) {
    if (rewards.size() != mu_.size()) throw Error(ErrorCode::kInvalidArgument, "LP width");
    for (std::size_t i = 0; i < mu_.size(); ++i) {
      lp_[i] = std::abs(rewards[i] - mu_[i]);
      mu_[i] = (1.0 - beta_) * mu_[i] + beta_ * rewards[i];
    }
    refresh();
  }

  std::size_t sample(Rng& rng) const { return sample_categorical(p_, rng); }

  const std::vector<double>& mu() const { return mu_; }
  const std::vector<double>& lp() const { return lp_; }
  const std::vector<double>& probabilities() const { return p_; }

 private:
  void refresh() {
    const double total = std::accumulate(lp_.begin(), lp_.end(), 0.0);
    const double n = static_cast<double>(lp_.size());
    p_.assign(lp_.size(), 1.0 / n);
    if (total > 0.0) {
      for (std::size_t i = 0; i < lp_.size(); ++i) {
        p_[i] = (1.0 - epsilon_) * lp_[i] / total + epsilon_ / n;
      }
    }
  }

  std::vector<double> mu_, lp_, p_;
  double beta_ = 0.1;
  double epsilon_ = 0.0;
};

}  // namespace gcomm

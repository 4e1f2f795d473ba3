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

// Listener: a 1x1 convolution encodes every cell, the projected message
// attends over the encoded cells, and a policy head acts on what attention
// returns. Besides the attended features the head sees where the attended
// mass sits relative to the agent, how much attention each neighbouring cell
// holds and whether it is occupied, plus the agent's own heading and position.
// The pooled context alone carries no location.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gcomm/agents/speaker.hpp"
#include "gcomm/env/env.hpp"
#include "gcomm/env/grid.hpp"
#include "gcomm/error.hpp"
#include "gcomm/nn/layers.hpp"
#include "gcomm/nn/params.hpp"
#include "gcomm/nn/random.hpp"
#include "gcomm/nn/tape.hpp"

namespace gcomm {

enum class ListenerMode { kHierarchical, kSingle };

inline constexpr std::string_view name(ListenerMode m) {
  return m == ListenerMode::kHierarchical ? "hierarchical" : "single";
}

inline ListenerMode listener_mode_from_name(std::string_view s) {
  if (s == "hierarchical") return ListenerMode::kHierarchical;
  if (s == "single") return ListenerMode::kSingle;
  throw Error(ErrorCode::kConfig, "unknown listener mode " + std::string(s));
}

/// Master choices. Null hands the episode to A or B at random.
enum class Master : std::uint8_t { kA, kB, kNull };

inline constexpr std::string_view name(Master m) {
  constexpr std::array<std::string_view, 3> n{"A", "B", "Null"};
  return n[static_cast<int>(m)];
}

struct ListenerConfig {
  ListenerMode mode = ListenerMode::kSingle;
  std::size_t grid_channels = kCellChannels;
  std::size_t d_g = 12;
  std::size_t message_width = 8;
  // Single mode only: 4 = moves, 5 = moves + push, 6 = moves + push + pull.
  std::size_t single_actions = 4;

  void validate() const {
    if (d_g == 0 || message_width == 0) throw Error(ErrorCode::kConfig, "listener widths");
    if (grid_channels != kCellChannels && grid_channels != kCellChannels + 1) {
      throw Error(ErrorCode::kConfig, "grid_channels must be 17 or 18");
    }
    if (single_actions < 4 || single_actions > 6) {
      throw Error(ErrorCode::kConfig, "single_actions must be 4, 5 or 6");
    }
  }
};

// Attention readouts: offset of the attended mass from the agent (2) and the
// attention on each neighbouring cell E, S, W, N (4).
inline constexpr std::size_t kReadouts = 6;
// Heading one-hot (4), agent position / 3 (2), neighbour occupied (4).
inline constexpr std::size_t kStaticFeatures = 10;
inline constexpr std::size_t kExtraFeatures = kReadouts + kStaticFeatures;

/// Head-local action index to environment action.
inline Action head_action(ListenerMode mode, Master sub, std::size_t single_actions,
                          std::size_t index) {
  if (index < 4) return static_cast<Action>(index);
  if (mode == ListenerMode::kHierarchical) {
    return sub == Master::kA ? Action::kPush : Action::kPull;
  }
  if (index >= single_actions) throw Error(ErrorCode::kInvalidArgument, "action index");
  return index == 4 ? Action::kPush : Action::kPull;
}

/// Per-step inputs that do not depend on parameters.
struct CellGeometry {
  nn::Tensor readout;  // [kReadouts x 16], applied to the attention weights
  nn::Tensor fixed;    // kStaticFeatures values

  static CellGeometry from_observation(const nn::Tensor& obs) {
    const std::size_t n = static_cast<std::size_t>(kNumCells);
    CellGeometry g;
    g.readout = nn::Tensor({kReadouts, n});
    g.fixed = nn::Tensor({kStaticFeatures});
    // Walls set every bit, so the agent is the cell with exactly one heading.
    int agent = -1;
    for (int cell = 0; cell < kNumCells && agent < 0; ++cell) {
      double headings = 0.0;
      for (std::size_t h = 0; h < 4; ++h) headings += obs[(kHeadingChannel + h) * n + cell];
      if (obs[kAgentChannel * n + cell] == 1.0 && headings == 1.0) agent = cell;
    }
    if (agent < 0) throw Error(ErrorCode::kInvalidArgument, "observation has no agent");
    const Pos a = Pos::from_cell(agent);
    const double scale = 1.0 / (kGridSize - 1);
    for (int cell = 0; cell < kNumCells; ++cell) {
      const Pos p = Pos::from_cell(cell);
      g.readout[static_cast<std::size_t>(cell)] = (p.row - a.row) * scale;
      g.readout[n + static_cast<std::size_t>(cell)] = (p.col - a.col) * scale;
    }
    for (std::size_t h = 0; h < 4; ++h) {
      g.fixed[h] = obs[(kHeadingChannel + h) * n + static_cast<std::size_t>(agent)];
    }
    g.fixed[4] = a.row * scale;
    g.fixed[5] = a.col * scale;
    for (std::size_t d = 0; d < 4; ++d) {
      const Pos p = a + delta(static_cast<Heading>(d));
      if (!p.in_grid()) {
        g.fixed[6 + d] = 1.0;
        continue;
      }
      const std::size_t cell = static_cast<std::size_t>(p.cell());
      g.readout[(2 + d) * n + cell] = 1.0;
      // Any size, shape or color bit means an object or a wall.
      for (std::size_t ch = 0; ch < kAgentChannel; ++ch) {
        if (obs[ch * n + cell] != 0.0) g.fixed[6 + d] = 1.0;
      }
    }
    return g;
  }
};

struct ListenerStep {
  nn::Var log_probs;                      // over the active head
  nn::Tensor probs;
  std::array<double, kNumCells> alpha{};
  std::size_t index = 0;                  // head-local action
  Action action = Action::kLeft;
};

/// Grid encoding shared by every message for one observation.
struct EncodedGrid {
  nn::Var grid;  // [d_g x 16]
  CellGeometry geometry;
};

class Listener {
 public:
  Listener(nn::ParamSet& params, const ListenerConfig& cfg, Rng& init_rng) : cfg_(cfg) {
    cfg_.validate();
    kernel_ = &params.add_uniform("listener.grid.K", {cfg_.d_g, cfg_.grid_channels},
                                  cfg_.grid_channels, init_rng);
    project_ = nn::Linear::create(params, "listener.msg", cfg_.message_width, cfg_.d_g, init_rng);
    const std::size_t feat = cfg_.d_g + kExtraFeatures;
    if (cfg_.mode == ListenerMode::kHierarchical) {
      master_ = nn::Linear::create(params, "listener.master", cfg_.message_width, 3, init_rng);
      heads_.push_back(nn::Linear::create(params, "listener.policy_a", feat, 5, init_rng));
      heads_.push_back(nn::Linear::create(params, "listener.policy_b", feat, 5, init_rng));
    } else {
      heads_.push_back(
          nn::Linear::create(params, "listener.policy", feat, cfg_.single_actions, init_rng));
    }
  }

  const ListenerConfig& config() const { return cfg_; }

  /// Master distribution over {A, B, Null}; a function of the message only.
  nn::Var master_log_probs(nn::Tape& tape, nn::Var message) const {
    require_hierarchical();
    return nn::log_softmax(master_(tape, message));
  }

  nn::Tensor master_probs(const nn::Tensor& message) const {
    require_hierarchical();
    return nn::detail::softmax_values(master_.eval(message));
  }

  /// Resolves a master choice to the sub-policy that runs the episode.
  static Master resolve(Master choice, Rng& rng) {
    if (choice != Master::kNull) return choice;
    return uniform_index(rng, 2) == 0 ? Master::kA : Master::kB;
  }

  EncodedGrid encode(nn::Tape& tape, const nn::Tensor& obs) const {
    check_obs(obs);
    EncodedGrid e;
    e.geometry = CellGeometry::from_observation(obs);
    nn::Var x = tape.constant(obs.reshaped({cfg_.grid_channels, static_cast<std::size_t>(kNumCells)}));
    e.grid = nn::conv1x1(x, tape.param(*kernel_));
    return e;
  }

  /// One policy step on the tape. `sub` picks the head in hierarchical mode.
  ListenerStep act(nn::Tape& tape, nn::Var message, const EncodedGrid& enc, Master sub,
                   nn::Mode mode, Rng& rng) const {
    nn::Var z = project_(tape, message);
    nn::Var alpha = nn::softmax(nn::matvec_transposed(enc.grid, z));
    nn::Var context = nn::matvec(enc.grid, alpha);
    nn::Var readout = nn::matvec(tape.constant(enc.geometry.readout), alpha);
    nn::Var features = nn::concat({context, readout, tape.constant(enc.geometry.fixed)});
    ListenerStep s;
    s.log_probs = nn::log_softmax(head(sub)(tape, features));
    s.probs = s.log_probs.value();
    for (double& v : s.probs.values()) v = std::exp(v);
    for (std::size_t i = 0; i < static_cast<std::size_t>(kNumCells); ++i) {
      s.alpha[i] = alpha.value()[i];
    }
    s.index = mode == nn::Mode::kTrain ? sample_categorical(s.probs.values(), rng)
                                       : argmax(s.probs.values());
    s.action = head_action(cfg_.mode, sub, cfg_.single_actions, s.index);
    return s;
  }

  /// pi(. | message, G) without a tape, for counterfactual messages and
  /// evaluation. `grid` is the encoder output of the current observation.
  nn::Tensor policy_given_message(const nn::Tensor& message, const nn::Tensor& grid,
                                  const CellGeometry& geo, Master sub,
                                  std::array<double, kNumCells>* alpha_out = nullptr) const {
    const nn::Tensor z = project_.eval(message);
    const std::size_t d = cfg_.d_g, n = static_cast<std::size_t>(kNumCells);
    nn::Tensor scores({n});
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < n; ++c) scores[c] += grid[r * n + c] * z[r];
    }
    const nn::Tensor alpha = nn::detail::softmax_values(scores);
    if (alpha_out) {
      for (std::size_t c = 0; c < n; ++c) (*alpha_out)[c] = alpha[c];
    }
    nn::Tensor features({d + kExtraFeatures});
    for (std::size_t r = 0; r < d; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c) acc += grid[r * n + c] * alpha[c];
      features[r] = acc;
    }
    for (std::size_t k = 0; k < kReadouts; ++k) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c) acc += geo.readout[k * n + c] * alpha[c];
      features[d + k] = acc;
    }
    for (std::size_t k = 0; k < kStaticFeatures; ++k) features[d + kReadouts + k] = geo.fixed[k];
    return nn::detail::softmax_values(head(sub).eval(features));
  }

  /// Tape-free grid encoding, for evaluation helpers.
  nn::Tensor encode_values(const nn::Tensor& obs) const {
    check_obs(obs);
    const nn::Tensor& k = kernel_->value;
    const std::size_t d = cfg_.d_g, ch = cfg_.grid_channels, n = static_cast<std::size_t>(kNumCells);
    nn::Tensor g({d, n});
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t j = 0; j < ch; ++j) {
        const double w = k[r * ch + j];
        for (std::size_t c = 0; c < n; ++c) g[r * n + c] += w * obs[j * n + c];
      }
    }
    return g;
  }

  std::size_t head_size(Master sub) const { return head(sub).out(); }

 private:
  const nn::Linear& head(Master sub) const {
    if (cfg_.mode == ListenerMode::kSingle) return heads_[0];
    if (sub == Master::kNull) {
      throw Error(ErrorCode::kInvalidArgument, "resolve Null before acting");
    }
    return heads_[sub == Master::kA ? 0 : 1];
  }

  void require_hierarchical() const {
    if (cfg_.mode != ListenerMode::kHierarchical) {
      throw Error(ErrorCode::kInvalidArgument, "single-policy listener has no master");
    }
  }

  void check_obs(const nn::Tensor& obs) const {
    if (obs.size() != cfg_.grid_channels * kNumCells) {
      throw Error(ErrorCode::kShapeMismatch,
                  "listener expects " + std::to_string(cfg_.grid_channels) +
                      " channels, got " + nn::shape_string(obs.shape()));
    }
  }

  ListenerConfig cfg_;
  nn::Parameter* kernel_ = nullptr;
  nn::Linear project_;
  nn::Linear master_;
  std::vector<nn::Linear> heads_;
};

}  // namespace gcomm

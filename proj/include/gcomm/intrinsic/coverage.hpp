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

// Coverage reward. A discriminator q_phi(c | m) predicts every concept group
// from the message; its cross-entropy L_phi lower-bounds I(C; M) up to a
// constant, and lambda1 * (lambda2 - L_phi) is paid at the final step.

#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/lang/concept.hpp"
#include "gcomm/nn/adam.hpp"
#include "gcomm/nn/layers.hpp"
#include "gcomm/nn/params.hpp"
#include "gcomm/nn/random.hpp"
#include "gcomm/nn/tape.hpp"

namespace gcomm {

struct IntrinsicConfig {
  bool coverage = true;
  bool influence = true;
  double lambda1 = 0.01;
  double lambda2 = 2.80;
  double lambda3 = 0.01;
  std::size_t k = 10;
  double disc_lr = 1e-2;
  std::size_t disc_hidden = 32;
  std::size_t buffer_capacity = 500;
  std::size_t retrain_period = 20;
  std::size_t batch = 50;
  std::size_t batches_per_retrain = 1;
};

/// Ring buffer of (concept, message) pairs. Messages are stored as plain
/// values, so nothing in here is linked to a tape.
class DiscBuffer {
 public:
  explicit DiscBuffer(std::size_t capacity = 500) : capacity_(capacity) {
    if (capacity == 0) throw Error(ErrorCode::kConfig, "buffer capacity must be positive");
  }

  void push(const ConceptVector& c, const nn::Tensor& message) {
    if (entries_.size() < capacity_) {
      entries_.emplace_back(c, message);
    } else {
      entries_[next_] = {c, message};
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::pair<ConceptVector, nn::Tensor>& operator[](std::size_t i) const {
    return entries_.at(i);
  }

  /// Entries oldest first.
  std::vector<std::pair<ConceptVector, nn::Tensor>> ordered() const {
    std::vector<std::pair<ConceptVector, nn::Tensor>> out;
    const std::size_t start = entries_.size() < capacity_ ? 0 : next_;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      out.push_back(entries_[(start + i) % entries_.size()]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<std::pair<ConceptVector, nn::Tensor>> entries_;
};

/// Concept groups the discriminator predicts: task, shape, color, weight.
struct ConceptGroup {
  std::size_t offset;
  std::size_t width;
};
inline constexpr std::array<ConceptGroup, 4> kPredictedGroups{{
    {ConceptVector::kTaskOffset, 4},
    {ConceptVector::kShapeOffset, 4},
    {ConceptVector::kColorOffset, 4},
    {ConceptVector::kWeightOffset, 2},
}};

inline std::size_t group_label(const ConceptVector& c, const ConceptGroup& g) {
  for (std::size_t i = 0; i < g.width; ++i) {
    if (c.bits[g.offset + i]) return i;
  }
  throw Error(ErrorCode::kInvalidArgument, "concept group has no bit set");
}

class Discriminator {
 public:
  Discriminator(nn::ParamSet& params, std::size_t message_width, std::size_t hidden,
                Rng& init_rng) {
    hidden_ = nn::Linear::create(params, "disc.hidden", message_width, hidden, init_rng);
    const char* names[] = {"disc.task", "disc.shape", "disc.color", "disc.weight"};
    for (std::size_t g = 0; g < kPredictedGroups.size(); ++g) {
      heads_[g] = nn::Linear::create(params, names[g], hidden, kPredictedGroups[g].width,
                                     init_rng);
    }
  }

  /// Summed per-group cross-entropy on the tape.
  nn::Var loss(nn::Tape& tape, const ConceptVector& c, const nn::Tensor& message) const {
    nn::Var h = nn::tanh(hidden_(tape, tape.constant(message)));
    nn::Var total;
    for (std::size_t g = 0; g < kPredictedGroups.size(); ++g) {
      nn::Var ce = nn::cross_entropy(heads_[g](tape, h), group_label(c, kPredictedGroups[g]));
      total = total.valid() ? nn::add(total, ce) : ce;
    }
    return total;
  }

  /// L_phi without a tape.
  double loss_value(const ConceptVector& c, const nn::Tensor& message) const {
    nn::Tensor h = hidden_.eval(message);
    for (double& v : h.values()) v = std::tanh(v);
    double total = 0.0;
    for (std::size_t g = 0; g < kPredictedGroups.size(); ++g) {
      const nn::Tensor lp = nn::detail::log_softmax_values(heads_[g].eval(h));
      total -= lp[group_label(c, kPredictedGroups[g])];
    }
    return total;
  }

  std::vector<nn::Parameter*> parameters() const {
    std::vector<nn::Parameter*> out{hidden_.weight, hidden_.bias};
    for (const auto& h : heads_) {
      out.push_back(h.weight);
      out.push_back(h.bias);
    }
    return out;
  }

 private:
  nn::Linear hidden_;
  std::array<nn::Linear, kPredictedGroups.size()> heads_;
};

/// lambda1 * (lambda2 - L_phi). Negative while the discriminator is poor.
inline double coverage_reward(const ConceptVector& c, const nn::Tensor& message,
                              const Discriminator& disc, const IntrinsicConfig& cfg) {
  if (message.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty message");
  return cfg.lambda1 * (cfg.lambda2 - disc.loss_value(c, message));
}

/// One Adam step per batch on the mean batch loss. Returns the mean loss of
/// the last batch, or nothing when the buffer holds fewer than `batch` pairs.
inline std::optional<double> train_discriminator(const Discriminator& disc, nn::Adam& opt,
                                                 const DiscBuffer& buffer,
                                                 const IntrinsicConfig& cfg, Rng& rng) {
  if (buffer.size() < cfg.batch || cfg.batch == 0) return std::nullopt;
  double last = 0.0;
  for (std::size_t b = 0; b < cfg.batches_per_retrain; ++b) {
    nn::Tape tape;
    nn::Var total;
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      const auto& [c, m] = buffer[uniform_index(rng, buffer.size())];
      nn::Var l = disc.loss(tape, c, m);
      total = total.valid() ? nn::add(total, l) : l;
    }
    nn::Var mean = nn::scale(total, 1.0 / static_cast<double>(cfg.batch));
    opt.zero_grad();
    tape.backward(mean);
    opt.step();
    last = mean.value()[0];
  }
  return last;
}

}  // namespace gcomm

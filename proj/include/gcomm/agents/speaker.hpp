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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/lang/concept.hpp"
#include "gcomm/nn/layers.hpp"
#include "gcomm/nn/params.hpp"
#include "gcomm/nn/random.hpp"
#include "gcomm/nn/tape.hpp"

namespace gcomm {

enum class ChannelKind {
  kLearnedOneHot,
  kLearnedBinary,
  kLearnedContinuous,
  kRandom,
  kFixed,
  kPerfect,
};

inline constexpr std::string_view name(ChannelKind k) {
  switch (k) {
    case ChannelKind::kLearnedOneHot: return "learned";
    case ChannelKind::kLearnedBinary: return "learned-binary";
    case ChannelKind::kLearnedContinuous: return "learned-continuous";
    case ChannelKind::kRandom: return "random";
    case ChannelKind::kFixed: return "fixed";
    case ChannelKind::kPerfect: return "perfect";
  }
  return "?";
}

inline ChannelKind channel_kind_from_name(std::string_view s) {
  for (ChannelKind k : {ChannelKind::kLearnedOneHot, ChannelKind::kLearnedBinary,
                        ChannelKind::kLearnedContinuous, ChannelKind::kRandom,
                        ChannelKind::kFixed, ChannelKind::kPerfect}) {
    if (name(k) == s) return k;
  }
  if (s == "learned-onehot") return ChannelKind::kLearnedOneHot;
  throw Error(ErrorCode::kConfig, "unknown channel kind " + std::string(s));
}

inline bool is_learned(ChannelKind k) {
  return k == ChannelKind::kLearnedOneHot || k == ChannelKind::kLearnedBinary ||
         k == ChannelKind::kLearnedContinuous;
}

struct ChannelConfig {
  ChannelKind kind = ChannelKind::kLearnedOneHot;
  std::size_t n_m = 2;
  std::size_t d_m = 4;
  double tau = 1.0;

  std::size_t width() const { return n_m * d_m; }

  void validate() const {
    if (n_m == 0 || d_m < 2) throw Error(ErrorCode::kConfig, "channel needs n_m>=1, d_m>=2");
    if (!(tau > 0.0)) throw Error(ErrorCode::kConfig, "channel temperature must be positive");
    if (kind == ChannelKind::kPerfect && width() < ConceptVector::kWidth) {
      throw Error(ErrorCode::kConfig, "perfect channel needs n_m*d_m >= 18");
    }
  }
};

struct MessageBundle {
  std::vector<std::size_t> symbols;  // one index per slot
  std::vector<nn::Tensor> dists;     // per-slot distributions, learned one-hot only
  nn::Tensor concat;                 // n_m * d_m values handed to the listener
  nn::Var var;                       // `concat` on the tape; straight-through for learned kinds
  nn::Var log_prob;                  // log p(symbols | concept), learned one-hot only
};

/// LSTM encoder fed the concept once per message slot; a shared linear layer
/// maps each hidden state to the slot's logits.
class Speaker {
 public:
  Speaker(nn::ParamSet& params, const ChannelConfig& channel, std::size_t hidden,
          Rng& init_rng)
      : channel_(channel) {
    channel_.validate();
    if (is_learned(channel_.kind)) {
      cell_ = nn::LstmCell::create(params, "speaker.lstm", ConceptVector::kWidth, hidden,
                                   init_rng);
      out_ = nn::Linear::create(params, "speaker.out", hidden, channel_.d_m, init_rng);
    }
  }

  const ChannelConfig& channel() const { return channel_; }

  MessageBundle speak(nn::Tape& tape, const ConceptVector& concept_in, nn::Mode mode,
                      Rng& rng) const {
    if (!concept_in.valid()) throw Error(ErrorCode::kInvalidArgument, "invalid concept");
    MessageBundle m;
    const std::size_t n = channel_.n_m, d = channel_.d_m;
    m.concat = nn::Tensor({n * d});

    switch (channel_.kind) {
      case ChannelKind::kRandom:
        for (std::size_t i = 0; i < n; ++i) {
          m.symbols.push_back(uniform_index(rng, d));
          m.concat[i * d + m.symbols.back()] = 1.0;
        }
        m.var = tape.constant(m.concat);
        return m;
      case ChannelKind::kFixed:
        m.concat.fill(1.0);
        m.symbols.assign(n, 0);
        m.var = tape.constant(m.concat);
        return m;
      case ChannelKind::kPerfect:
        for (std::size_t k = 0; k < ConceptVector::kWidth; ++k) m.concat[k] = concept_in.bits[k];
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t sym = 0;
          for (std::size_t j = 0; j < d; ++j) {
            if (m.concat[i * d + j] != 0.0) sym |= std::size_t{1} << j;
          }
          m.symbols.push_back(sym);
        }
        m.var = tape.constant(m.concat);
        return m;
      default:
        break;
    }

    nn::Var x = tape.constant(concept_in.as_tensor());
    const std::size_t dh = cell_.hidden();
    nn::Var h = tape.constant(nn::Tensor({dh}));
    nn::Var c = tape.constant(nn::Tensor({dh}));
    std::vector<nn::Var> parts;
    for (std::size_t i = 0; i < n; ++i) {
      nn::LstmState st = nn::lstm_step(tape, x, h, c, cell_);
      h = st.h;
      c = st.c;
      nn::Var logits = out_(tape, h);
      if (channel_.kind == ChannelKind::kLearnedOneHot) {
        nn::CategoricalSample s = nn::st_categorical_sample(logits, channel_.tau, mode, rng);
        m.symbols.push_back(s.index);
        m.dists.push_back(std::move(s.probs));
        nn::Var lp = nn::pick(nn::log_softmax(nn::scale(logits, 1.0 / channel_.tau)), s.index);
        m.log_prob = m.log_prob.valid() ? nn::add(m.log_prob, lp) : lp;
        parts.push_back(s.onehot);
      } else if (channel_.kind == ChannelKind::kLearnedBinary) {
        nn::BinarySample s = nn::st_binary_sample(logits, channel_.tau, mode, rng);
        std::size_t sym = 0;
        for (std::size_t j = 0; j < d; ++j) {
          if (s.bits.value()[j] != 0.0) sym |= std::size_t{1} << j;
        }
        m.symbols.push_back(sym);
        parts.push_back(s.bits);
      } else {
        m.symbols.push_back(argmax(logits.value().values()));
        parts.push_back(logits);
      }
    }
    m.var = nn::concat(parts);
    m.concat = m.var.value();
    return m;
  }

  /// Eval-mode message without keeping a tape around.
  MessageBundle speak_eval(const ConceptVector& concept_in, Rng& rng) const {
    nn::Tape tape;
    MessageBundle m = speak(tape, concept_in, nn::Mode::kEval, rng);
    m.var = {};
    return m;
  }

 private:
  ChannelConfig channel_;
  nn::LstmCell cell_;
  nn::Linear out_;
};

/// Rebuilds a one-hot bundle from symbol indices (pseudo messages, tests).
inline MessageBundle onehot_bundle(const std::vector<std::size_t>& symbols, std::size_t d_m) {
  MessageBundle m;
  m.symbols = symbols;
  m.concat = nn::Tensor({symbols.size() * d_m});
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] >= d_m) throw Error(ErrorCode::kInvalidArgument, "symbol out of range");
    m.concat[i * d_m + symbols[i]] = 1.0;
  }
  return m;
}

}  // namespace gcomm

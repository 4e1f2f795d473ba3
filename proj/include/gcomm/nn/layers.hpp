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

#include <cmath>
#include <string>
#include <utility>

#include "gcomm/nn/params.hpp"
#include "gcomm/nn/random.hpp"
#include "gcomm/nn/tape.hpp"

namespace gcomm::nn {

enum class Mode { kTrain, kEval };

/// Weight [out x in] plus bias [out], registered as `<prefix>.W`/`<prefix>.b`.
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear create(ParamSet& params, const std::string& prefix,
                       std::size_t in, std::size_t out, Rng& rng) {
    Linear l;
    l.weight = &params.add_uniform(prefix + ".W", {out, in}, in, rng);
    l.bias = &params.add_uniform(prefix + ".b", {out}, in, rng);
    return l;
  }

  std::size_t in() const { return weight->value.cols(); }
  std::size_t out() const { return weight->value.rows(); }

  Var operator()(Tape& tape, Var x) const {
    return linear(x, tape.param(*weight), tape.param(*bias));
  }

  /// Tape-free forward with identical arithmetic order.
  Tensor eval(const Tensor& x) const {
    const Tensor& w = weight->value;
    const std::size_t rows = w.rows(), cols = w.cols();
    if (x.size() != cols) {
      throw Error(ErrorCode::kShapeMismatch, "linear eval input width");
    }
    Tensor y({rows});
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = bias->value[r];
      for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * x[c];
      y[r] = acc;
    }
    return y;
  }
};

/// Single-layer LSTM cell with fused gate weights in i, f, g, o order.
struct LstmCell {
  Parameter* input_weight = nullptr;   // [4h x in]
  Parameter* hidden_weight = nullptr;  // [4h x h]
  Parameter* bias = nullptr;           // [4h]

  static LstmCell create(ParamSet& params, const std::string& prefix,
                         std::size_t in, std::size_t hidden, Rng& rng) {
    LstmCell cell;
    cell.input_weight =
        &params.add_uniform(prefix + ".W", {4 * hidden, in}, hidden, rng);
    cell.hidden_weight =
        &params.add_uniform(prefix + ".U", {4 * hidden, hidden}, hidden, rng);
    cell.bias = &params.add_uniform(prefix + ".b", {4 * hidden}, hidden, rng);
    // forget gate starts open
    for (std::size_t k = hidden; k < 2 * hidden; ++k) cell.bias->value[k] = 1.0;
    return cell;
  }

  std::size_t hidden() const { return hidden_weight->value.cols(); }
};

struct LstmState {
  Var h;
  Var c;
};

inline LstmState lstm_step(Tape& tape, Var x, Var h, Var c,
                           const LstmCell& cell) {
  const std::size_t dh = cell.hidden();
  if (h.value().size() != dh || c.value().size() != dh) {
    throw Error(ErrorCode::kShapeMismatch, "lstm state width");
  }
  Var gates = add(linear(x, tape.param(*cell.input_weight), tape.param(*cell.bias)),
                  matvec(tape.param(*cell.hidden_weight), h));
  Var i = sigmoid(slice(gates, 0, dh));
  Var f = sigmoid(slice(gates, dh, dh));
  Var g = tanh(slice(gates, 2 * dh, dh));
  Var o = sigmoid(slice(gates, 3 * dh, dh));
  Var c_next = add(mul(f, c), mul(i, g));
  Var h_next = mul(o, tanh(c_next));
  return {h_next, c_next};
}

/// Per-cell linear map: K[out x channels] applied to grid[channels x H x W].
inline Var conv1x1(Var grid, Var kernel) {
  const Tensor& k = kernel.value();
  const Tensor& x = grid.value();
  if (k.rank() != 2 || k.cols() != x.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "conv1x1: kernel " + shape_string(k.shape()) + " vs grid " +
                    shape_string(x.shape()));
  }
  return matmul(kernel, grid);
}

struct CategoricalSample {
  Var onehot;          // forward: hard one-hot, backward: softmax(logits / tau)
  Tensor probs;        // softmax(logits / tau)
  std::size_t index = 0;
};

/// Straight-through categorical draw. Train mode samples from
/// softmax(logits / tau); eval mode takes the argmax.
inline CategoricalSample st_categorical_sample(Var logits, double tau, Mode mode,
                                               Rng& rng) {
  if (!logits.value().all_finite()) {
    throw Error(ErrorCode::kNonFinite, "non-finite logits");
  }
  Var soft = softmax(scale(logits, 1.0 / tau));
  CategoricalSample s;
  s.probs = soft.value();
  s.index = mode == Mode::kTrain ? sample_categorical(s.probs.values(), rng)
                                 : argmax(s.probs.values());
  Tensor hard(s.probs.shape());
  hard[s.index] = 1.0;
  s.onehot = straight_through(std::move(hard), soft);
  return s;
}

struct BinarySample {
  Var bits;       // forward: hard {0,1}, backward: relaxed sigmoid
  Tensor probs;   // sigmoid(logits / tau), the per-bit Bernoulli parameters
};

/// Straight-through binary Gumbel-softmax: logistic noise in train mode,
/// threshold at 0 in eval mode.
inline BinarySample st_binary_sample(Var logits, double tau, Mode mode,
                                     Rng& rng) {
  if (!logits.value().all_finite()) {
    throw Error(ErrorCode::kNonFinite, "non-finite logits");
  }
  const std::size_t n = logits.value().size();
  Tensor noise({n});
  if (mode == Mode::kTrain) {
    for (std::size_t k = 0; k < n; ++k) {
      const double u = std::clamp(uniform01(rng), 1e-12, 1.0 - 1e-12);
      noise[k] = std::log(u) - std::log1p(-u);
    }
  }
  Tape& tape = *logits.tape;
  Var relaxed = sigmoid(scale(add(logits, tape.constant(noise)), 1.0 / tau));
  BinarySample s;
  s.probs = Tensor(logits.value().shape());
  for (std::size_t k = 0; k < n; ++k) {
    s.probs[k] = 1.0 / (1.0 + std::exp(-logits.value()[k] / tau));
  }
  Tensor hard(relaxed.value().shape());
  for (std::size_t k = 0; k < n; ++k) hard[k] = relaxed.value()[k] > 0.5 ? 1.0 : 0.0;
  s.bits = straight_through(std::move(hard), relaxed);
  return s;
}

}  // namespace gcomm::nn

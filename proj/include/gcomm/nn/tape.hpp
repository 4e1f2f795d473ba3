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

// Reverse-mode differentiation over a flat operation record. Nodes are
// appended in evaluation order, so parents always precede children and the
// backward sweep is a single reverse pass.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <unordered_map>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/nn/params.hpp"
#include "gcomm/nn/tensor.hpp"

namespace gcomm::nn {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  bool valid() const { return tape != nullptr; }
  const Tensor& value() const;
};

enum class Op : std::uint8_t {
  kConstant,
  kParam,
  kAdd,
  kSub,
  kMul,
  kScale,
  kMatVec,
  kLinear,
  kMatTVec,
  kMatMul,
  kSigmoid,
  kTanh,
  kSoftmax,
  kLogSoftmax,
  kConcat,
  kSlice,
  kPick,
  kSum,
  kDot,
  kCrossEntropy,
  kStraightThrough,
};

class Tape {
 public:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) {
    Node n;
    n.op = Op::kConstant;
    n.value = std::move(value);
    return push(std::move(n));
  }

  /// Leaf bound to a parameter. Repeated calls within one recording return
  /// the same node, so gradients from every use accumulate once.
  Var param(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
      return Var{this, it->second};
    }
    Node n;
    n.op = Op::kParam;
    n.value = p.value;
    n.param = &p;
    Var v = push(std::move(n));
    param_nodes_.emplace(&p, v.id);
    return v;
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t size() const { return nodes_.size(); }

  void clear() {
    nodes_.clear();
    param_nodes_.clear();
  }

  /// Gradient of a scalar node with respect to every reachable node. Parameter
  /// gradients are added into Parameter::grad; call ParamSet::zero_grad first
  /// when a fresh gradient is wanted.
  void backward(Var loss) {
    check_owner(loss);
    if (nodes_[loss.id].value.size() != 1) {
      throw Error(ErrorCode::kShapeMismatch, "backward needs a scalar output");
    }
    grads_.assign(loss.id + 1, Tensor());
    grads_[loss.id] = Tensor::filled(nodes_[loss.id].value.shape(), 1.0);
    for (std::uint32_t i = loss.id + 1; i-- > 0;) {
      if (grads_[i].empty() && nodes_[i].value.size() != 0) continue;
      propagate(i);
    }
    for (std::uint32_t i = 0; i <= loss.id; ++i) {
      Node& n = nodes_[i];
      if (n.op != Op::kParam || grads_[i].empty()) continue;
      auto dst = n.param->grad.values();
      auto src = grads_[i].values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }

  /// Gradient recorded for a node by the last backward() call.
  const Tensor& grad(Var v) const {
    static const Tensor kEmpty;
    return v.id < grads_.size() ? grads_[v.id] : kEmpty;
  }

 private:
  struct Node {
    Op op = Op::kConstant;
    Tensor value;
    std::array<std::uint32_t, 3> in{kNone, kNone, kNone};
    std::vector<std::uint32_t> many;  // concat operands
    double scalar = 0.0;
    std::size_t index = 0;
    Parameter* param = nullptr;
    Tensor aux;  // cached forward quantity needed by backward
  };

  friend Var record(Tape&, Op, Tensor, std::initializer_list<Var>, double,
                    std::size_t, Tensor);
  friend Var concat(std::initializer_list<Var>);
  friend Var concat(const std::vector<Var>&);

  Var push(Node n) {
    if (!n.value.all_finite()) {
      throw Error(ErrorCode::kNonFinite, "non-finite value produced on tape");
    }
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  void check_owner(Var v) const {
    if (v.tape != this || v.id >= nodes_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "variable from another tape");
    }
  }

  Tensor& g(std::uint32_t i) {
    if (grads_[i].empty()) grads_[i] = Tensor(nodes_[i].value.shape());
    return grads_[i];
  }

  void propagate(std::uint32_t i) {
    const Node& n = nodes_[i];
    const Tensor& gy = grads_[i];
    switch (n.op) {
      case Op::kConstant:
      case Op::kParam:
        return;
      case Op::kAdd: {
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) ga[k] += gy[k];
        Tensor& gb = g(n.in[1]);
        for (std::size_t k = 0; k < gy.size(); ++k) gb[k] += gy[k];
        return;
      }
      case Op::kSub: {
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) ga[k] += gy[k];
        Tensor& gb = g(n.in[1]);
        for (std::size_t k = 0; k < gy.size(); ++k) gb[k] -= gy[k];
        return;
      }
      case Op::kMul: {
        const Tensor& a = nodes_[n.in[0]].value;
        const Tensor& b = nodes_[n.in[1]].value;
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) ga[k] += gy[k] * b[k];
        Tensor& gb = g(n.in[1]);
        for (std::size_t k = 0; k < gy.size(); ++k) gb[k] += gy[k] * a[k];
        return;
      }
      case Op::kScale: {
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) ga[k] += n.scalar * gy[k];
        return;
      }
      case Op::kMatVec:
      case Op::kLinear: {
        // y = W x (+ b)
        const Tensor& w = nodes_[n.in[0]].value;
        const Tensor& x = nodes_[n.in[1]].value;
        const std::size_t rows = w.rows(), cols = w.cols();
        Tensor& gw = g(n.in[0]);
        for (std::size_t r = 0; r < rows; ++r) {
          const double gr = gy[r];
          if (gr == 0.0) continue;
          for (std::size_t c = 0; c < cols; ++c) gw[r * cols + c] += gr * x[c];
        }
        Tensor& gx = g(n.in[1]);
        for (std::size_t r = 0; r < rows; ++r) {
          const double gr = gy[r];
          if (gr == 0.0) continue;
          for (std::size_t c = 0; c < cols; ++c) gx[c] += w[r * cols + c] * gr;
        }
        if (n.op == Op::kLinear) {
          Tensor& gb = g(n.in[2]);
          for (std::size_t r = 0; r < rows; ++r) gb[r] += gy[r];
        }
        return;
      }
      case Op::kMatTVec: {
        // y = A^T x
        const Tensor& a = nodes_[n.in[0]].value;
        const Tensor& x = nodes_[n.in[1]].value;
        const std::size_t rows = a.rows(), cols = a.cols();
        Tensor& ga = g(n.in[0]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += x[r] * gy[c];
        }
        Tensor& gx = g(n.in[1]);
        for (std::size_t r = 0; r < rows; ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < cols; ++c) acc += a[r * cols + c] * gy[c];
          gx[r] += acc;
        }
        return;
      }
      case Op::kMatMul: {
        // C[m x n] = A[m x k] B[k x n]
        const Tensor& a = nodes_[n.in[0]].value;
        const Tensor& b = nodes_[n.in[1]].value;
        const std::size_t m = a.rows(), kk = a.cols(), nn = b.cols();
        Tensor& ga = g(n.in[0]);
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t j = 0; j < kk; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < nn; ++c) acc += gy[r * nn + c] * b[j * nn + c];
            ga[r * kk + j] += acc;
          }
        }
        Tensor& gb = g(n.in[1]);
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t j = 0; j < kk; ++j) {
            const double arj = a[r * kk + j];
            if (arj == 0.0) continue;
            for (std::size_t c = 0; c < nn; ++c) gb[j * nn + c] += arj * gy[r * nn + c];
          }
        }
        return;
      }
      case Op::kSigmoid: {
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) {
          const double y = n.value[k];
          ga[k] += gy[k] * y * (1.0 - y);
        }
        return;
      }
      case Op::kTanh: {
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) {
          const double y = n.value[k];
          ga[k] += gy[k] * (1.0 - y * y);
        }
        return;
      }
      case Op::kSoftmax: {
        double dot = 0.0;
        for (std::size_t k = 0; k < gy.size(); ++k) dot += gy[k] * n.value[k];
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) {
          ga[k] += n.value[k] * (gy[k] - dot);
        }
        return;
      }
      case Op::kLogSoftmax: {
        double total = 0.0;
        for (std::size_t k = 0; k < gy.size(); ++k) total += gy[k];
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) {
          ga[k] += gy[k] - std::exp(n.value[k]) * total;
        }
        return;
      }
      case Op::kConcat: {
        std::size_t offset = 0;
        for (std::uint32_t src : n.many) {
          Tensor& gs = g(src);
          for (std::size_t k = 0; k < gs.size(); ++k) gs[k] += gy[offset + k];
          offset += gs.size();
        }
        return;
      }
      case Op::kSlice: {
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) ga[n.index + k] += gy[k];
        return;
      }
      case Op::kPick: {
        g(n.in[0])[n.index] += gy[0];
        return;
      }
      case Op::kSum: {
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += gy[0];
        return;
      }
      case Op::kDot: {
        const Tensor& a = nodes_[n.in[0]].value;
        const Tensor& b = nodes_[n.in[1]].value;
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < a.size(); ++k) ga[k] += gy[0] * b[k];
        Tensor& gb = g(n.in[1]);
        for (std::size_t k = 0; k < b.size(); ++k) gb[k] += gy[0] * a[k];
        return;
      }
      case Op::kCrossEntropy: {
        // aux holds softmax(logits)
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < ga.size(); ++k) {
          const double target = k == n.index ? 1.0 : 0.0;
          ga[k] += gy[0] * (n.aux[k] - target);
        }
        return;
      }
      case Op::kStraightThrough: {
        Tensor& ga = g(n.in[0]);
        for (std::size_t k = 0; k < gy.size(); ++k) ga[k] += gy[k];
        return;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

inline Var record(Tape& tape, Op op, Tensor value, std::initializer_list<Var> in,
                  double scalar = 0.0, std::size_t index = 0, Tensor aux = {}) {
  Tape::Node n;
  n.op = op;
  n.value = std::move(value);
  std::size_t i = 0;
  for (Var v : in) {
    tape.check_owner(v);
    n.in[i++] = v.id;
  }
  n.scalar = scalar;
  n.index = index;
  n.aux = std::move(aux);
  return tape.push(std::move(n));
}

namespace detail {

inline Tape& same_tape(Var a, Var b, const char* what) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + ": operands on different tapes");
  }
  return *a.tape;
}

inline void same_size(const Tensor& a, const Tensor& b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": " + shape_string(a.shape()) + " vs " +
                    shape_string(b.shape()));
  }
}

inline Tensor softmax_values(const Tensor& x) {
  Tensor y(x.shape());
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x.values()) mx = std::max(mx, v);
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    y[k] = std::exp(x[k] - mx);
    total += y[k];
  }
  for (double& v : y.values()) v /= total;
  return y;
}

inline Tensor log_softmax_values(const Tensor& x) {
  Tensor y(x.shape());
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x.values()) mx = std::max(mx, v);
  double total = 0.0;
  for (double v : x.values()) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] - lse;
  return y;
}

}  // namespace detail

inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b, "add");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  detail::same_size(x, y, "add");
  Tensor out(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] + y[k];
  return record(t, Op::kAdd, std::move(out), {a, b});
}

inline Var sub(Var a, Var b) {
  Tape& t = detail::same_tape(a, b, "sub");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  detail::same_size(x, y, "sub");
  Tensor out(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] - y[k];
  return record(t, Op::kSub, std::move(out), {a, b});
}

inline Var mul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b, "mul");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  detail::same_size(x, y, "mul");
  Tensor out(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] * y[k];
  return record(t, Op::kMul, std::move(out), {a, b});
}

inline Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= s;
  return record(*a.tape, Op::kScale, std::move(out), {a}, s);
}

/// W[out x in] * x[in]
inline Var matvec(Var w, Var x) {
  Tape& t = detail::same_tape(w, x, "matvec");
  const Tensor& wm = w.value();
  const Tensor& xv = x.value();
  if (wm.rank() != 2 || wm.cols() != xv.size()) {
    throw Error(ErrorCode::kShapeMismatch, "matvec: " + shape_string(wm.shape()) +
                                               " * " + shape_string(xv.shape()));
  }
  const std::size_t rows = wm.rows(), cols = wm.cols();
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wm[r * cols + c] * xv[c];
    out[r] = acc;
  }
  return record(t, Op::kMatVec, std::move(out), {w, x});
}

/// y = W x + b
inline Var linear(Var x, Var w, Var b) {
  Tape& t = detail::same_tape(w, x, "linear");
  detail::same_tape(w, b, "linear");
  const Tensor& wm = w.value();
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  if (wm.rank() != 2 || wm.cols() != xv.size() || bv.size() != wm.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "linear: W" + shape_string(wm.shape()) + " x" +
                    shape_string(xv.shape()) + " b" + shape_string(bv.shape()));
  }
  const std::size_t rows = wm.rows(), cols = wm.cols();
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bv[r];
    for (std::size_t c = 0; c < cols; ++c) acc += wm[r * cols + c] * xv[c];
    out[r] = acc;
  }
  return record(t, Op::kLinear, std::move(out), {w, x, b});
}

/// A[m x n]^T * x[m]
inline Var matvec_transposed(Var a, Var x) {
  Tape& t = detail::same_tape(a, x, "matvec_transposed");
  const Tensor& am = a.value();
  const Tensor& xv = x.value();
  if (am.rows() != xv.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "matvec_transposed: " + shape_string(am.shape()) + " vs " +
                    shape_string(xv.shape()));
  }
  const std::size_t rows = am.rows(), cols = am.cols();
  Tensor out({cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const double xr = xv[r];
    for (std::size_t c = 0; c < cols; ++c) out[c] += am[r * cols + c] * xr;
  }
  return record(t, Op::kMatTVec, std::move(out), {a, x});
}

/// A[m x k] * B[k x ...]; the trailing dims of B are kept in the output.
inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b, "matmul");
  const Tensor& am = a.value();
  const Tensor& bm = b.value();
  if (am.rank() != 2 || am.cols() != bm.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "matmul: " + shape_string(am.shape()) +
                                               " * " + shape_string(bm.shape()));
  }
  const std::size_t m = am.rows(), kk = am.cols(), n = bm.cols();
  Shape shape = bm.shape();
  shape[0] = m;
  Tensor out(std::move(shape));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < kk; ++j) {
      const double arj = am[r * kk + j];
      if (arj == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) out[r * n + c] += arj * bm[j * n + c];
    }
  }
  return record(t, Op::kMatMul, std::move(out), {a, b});
}

inline Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  return record(*a.tape, Op::kSigmoid, std::move(out), {a});
}

inline Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  return record(*a.tape, Op::kTanh, std::move(out), {a});
}

inline Var softmax(Var a) {
  return record(*a.tape, Op::kSoftmax, detail::softmax_values(a.value()), {a});
}

inline Var log_softmax(Var a) {
  return record(*a.tape, Op::kLogSoftmax, detail::log_softmax_values(a.value()),
                {a});
}

inline Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "concat of nothing");
  }
  Tape& t = *parts.front().tape;
  std::vector<double> data;
  Tape::Node n;
  n.op = Op::kConcat;
  for (Var v : parts) {
    t.check_owner(v);
    const auto vals = v.value().values();
    data.insert(data.end(), vals.begin(), vals.end());
    n.many.push_back(v.id);
  }
  n.value = Tensor::vector(std::move(data));
  return t.push(std::move(n));
}

inline Var concat(std::initializer_list<Var> parts) {
  return concat(std::vector<Var>(parts));
}

inline Var slice(Var a, std::size_t offset, std::size_t length) {
  const Tensor& x = a.value();
  if (offset + length > x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "slice out of range");
  }
  std::vector<double> data(x.data().begin() + offset,
                           x.data().begin() + offset + length);
  return record(*a.tape, Op::kSlice, Tensor::vector(std::move(data)), {a}, 0.0,
                offset);
}

inline Var pick(Var a, std::size_t index) {
  const Tensor& x = a.value();
  if (index >= x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "pick out of range");
  }
  return record(*a.tape, Op::kPick, Tensor::vector({x[index]}), {a}, 0.0, index);
}

inline Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return record(*a.tape, Op::kSum, Tensor::vector({total}), {a});
}

inline Var dot(Var a, Var b) {
  Tape& t = detail::same_tape(a, b, "dot");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  detail::same_size(x, y, "dot");
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) total += x[k] * y[k];
  return record(t, Op::kDot, Tensor::vector({total}), {a, b});
}

/// -log softmax(logits)[label]
inline Var cross_entropy(Var logits, std::size_t label) {
  const Tensor& x = logits.value();
  if (label >= x.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "label " + std::to_string(label) + " out of range for " +
                    std::to_string(x.size()) + " classes");
  }
  Tensor logp = detail::log_softmax_values(x);
  Tensor probs = detail::softmax_values(x);
  return record(*logits.tape, Op::kCrossEntropy, Tensor::vector({-logp[label]}),
                {logits}, 0.0, label, std::move(probs));
}

/// Forward value `hard`, gradient routed unchanged into `soft`.
inline Var straight_through(Tensor hard, Var soft) {
  detail::same_size(hard, soft.value(), "straight_through");
  return record(*soft.tape, Op::kStraightThrough, std::move(hard), {soft});
}

}  // namespace gcomm::nn

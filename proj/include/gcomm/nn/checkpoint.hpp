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

// Checkpoint byte layout, version 1. Every integer is little-endian, every
// float is an IEEE-754 binary64 written little-endian.
//
//   magic        8 bytes  "GCOMMCKP"
//   version      u32      = 1
//   n_params     u32
//   n_params times:
//     name_len   u32, name bytes (UTF-8, no terminator)
//     rank       u32, dims u64[rank]
//     values     f64[prod(dims)]
//   n_optim      u32
//   n_optim times:
//     name_len   u32, name bytes
//     steps      u64
//     n_entries  u32
//     n_entries times:
//       name_len u32, parameter name bytes
//       m        f64[size of that parameter]
//       v        f64[size of that parameter]
//   checksum     u64      FNV-1a of every preceding byte
//
// Loading writes into an already-constructed ParamSet; names and shapes must
// match exactly.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/nn/adam.hpp"
#include "gcomm/nn/params.hpp"

namespace gcomm::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'G', 'C', 'O', 'M', 'M', 'C', 'K', 'P'};

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) { raw_le(v); }
  void u64(std::uint64_t v) { raw_le(v); }
  void f64(double v) { raw_le(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  std::vector<char>& buffer() { return buf_; }

 private:
  template <class T>
  void raw_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }
  std::vector<char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const char> data) : data_(data) {}

  std::uint32_t u32() { return raw_le<std::uint32_t>(); }
  std::uint64_t u64() { return raw_le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(raw_le<std::uint64_t>()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw Error(ErrorCode::kCheckpoint, "truncated checkpoint");
    }
  }
  template <class T>
  T raw_le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  std::span<const char> data_;
  std::size_t pos_ = 0;
};

inline std::uint64_t fnv1a(std::span<const char> bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

/// Optimizers saved alongside parameters, keyed by a caller-chosen name.
using NamedOptimizers = std::vector<std::pair<std::string, Adam*>>;

inline std::vector<char> serialize_checkpoint(const ParamSet& params,
                                              const NamedOptimizers& optimizers) {
  detail::ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic, 8));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) w.u64(d);
    for (double v : p.value.values()) w.f64(v);
  }
  w.u32(static_cast<std::uint32_t>(optimizers.size()));
  for (const auto& [name, adam] : optimizers) {
    w.str(name);
    w.u64(adam->steps());
    w.u32(static_cast<std::uint32_t>(adam->params().size()));
    for (std::size_t i = 0; i < adam->params().size(); ++i) {
      w.str(adam->params()[i]->name);
      for (double v : adam->first_moments()[i].values()) w.f64(v);
      for (double v : adam->second_moments()[i].values()) w.f64(v);
    }
  }
  const std::uint64_t sum = detail::fnv1a(w.buffer());
  w.u64(sum);
  return std::move(w.buffer());
}

inline void deserialize_checkpoint(std::span<const char> bytes, ParamSet& params,
                                   const NamedOptimizers& optimizers) {
  if (bytes.size() < 8 + 4 + 8) {
    throw Error(ErrorCode::kCheckpoint, "file too short");
  }
  const std::span<const char> body = bytes.first(bytes.size() - 8);
  detail::ByteReader tail(bytes.last(8));
  if (tail.u64() != detail::fnv1a(body)) {
    throw Error(ErrorCode::kCheckpoint, "checksum mismatch");
  }
  detail::ByteReader r(body);
  if (r.bytes(8) != std::string_view(kCheckpointMagic, 8)) {
    throw Error(ErrorCode::kCheckpoint, "bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kCheckpoint,
                "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t n = r.u32();
  if (n != params.size()) {
    throw Error(ErrorCode::kCheckpoint, "parameter count mismatch");
  }
  // Decode fully before touching the destination so a bad file leaves it intact.
  std::vector<std::pair<Parameter*, Tensor>> staged;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = r.str();
    if (!params.contains(name)) {
      throw Error(ErrorCode::kCheckpoint, "unknown parameter " + name);
    }
    Parameter& p = params.get(name);
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    if (shape != p.value.shape()) {
      throw Error(ErrorCode::kCheckpoint, "shape mismatch for " + name);
    }
    Tensor t(shape);
    for (double& v : t.values()) v = r.f64();
    staged.emplace_back(&p, std::move(t));
  }
  std::map<std::string, Adam*> by_name(optimizers.begin(), optimizers.end());
  struct StagedAdam {
    Adam* adam;
    std::uint64_t steps;
    std::vector<Tensor> m, v;
  };
  std::vector<StagedAdam> staged_adam;
  const std::uint32_t n_optim = r.u32();
  for (std::uint32_t i = 0; i < n_optim; ++i) {
    const std::string name = r.str();
    auto it = by_name.find(name);
    Adam* adam = it == by_name.end() ? nullptr : it->second;
    StagedAdam sa{adam, r.u64(), {}, {}};
    const std::uint32_t entries = r.u32();
    if (adam && entries != adam->params().size()) {
      throw Error(ErrorCode::kCheckpoint, "optimizer layout mismatch for " + name);
    }
    for (std::uint32_t e = 0; e < entries; ++e) {
      const std::string pname = r.str();
      if (!params.contains(pname)) {
        throw Error(ErrorCode::kCheckpoint, "optimizer references " + pname);
      }
      const Shape& shape = params.get(pname).value.shape();
      Tensor m(shape), v(shape);
      for (double& x : m.values()) x = r.f64();
      for (double& x : v.values()) x = r.f64();
      if (adam && adam->params()[e]->name != pname) {
        throw Error(ErrorCode::kCheckpoint, "optimizer order mismatch for " + name);
      }
      sa.m.push_back(std::move(m));
      sa.v.push_back(std::move(v));
    }
    if (adam) staged_adam.push_back(std::move(sa));
  }
  if (r.pos() != body.size()) {
    throw Error(ErrorCode::kCheckpoint, "trailing bytes");
  }
  for (auto& [p, t] : staged) p->value = std::move(t);
  for (auto& sa : staged_adam) {
    sa.adam->set_steps(sa.steps);
    sa.adam->first_moments() = std::move(sa.m);
    sa.adam->second_moments() = std::move(sa.v);
  }
}

inline void save_checkpoint(const std::string& path, const ParamSet& params,
                            const NamedOptimizers& optimizers = {}) {
  const std::vector<char> bytes = serialize_checkpoint(params, optimizers);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

inline void load_checkpoint(const std::string& path, ParamSet& params,
                            const NamedOptimizers& optimizers = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  deserialize_checkpoint(bytes, params, optimizers);
}

}  // namespace gcomm::nn

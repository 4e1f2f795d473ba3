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
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/nn/random.hpp"
#include "gcomm/nn/tensor.hpp"

namespace gcomm::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }
};

/// Owns every trainable tensor under a stable name. Addresses of registered
/// parameters never change, so models hold raw pointers into the set.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;
  ParamSet(ParamSet&&) = default;
  ParamSet& operator=(ParamSet&&) = default;

  Parameter& add(std::string name, Tensor init) {
    if (index_.contains(name)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "parameter registered twice: " + name);
    }
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->grad = Tensor(init.shape());
    p->value = std::move(init);
    index_.emplace(std::move(name), params_.size());
    params_.push_back(std::move(p));
    return *params_.back();
  }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Parameter& add_uniform(std::string name, Shape shape, std::size_t fan_in,
                         Rng& rng) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.values()) v = dist(rng);
    return add(std::move(name), std::move(t));
  }

  Parameter& get(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
      throw Error(ErrorCode::kMissingData,
                  "unknown parameter: " + std::string(name));
    }
    return *params_[it->second];
  }
  const Parameter& get(std::string_view name) const {
    return const_cast<ParamSet*>(this)->get(name);
  }

  bool contains(std::string_view name) const {
    return index_.contains(std::string(name));
  }

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  /// Parameters whose name starts with `prefix`, in registration order.
  std::vector<Parameter*> with_prefix(std::string_view prefix) {
    std::vector<Parameter*> out;
    for (auto& p : params_) {
      if (p->name.starts_with(prefix)) out.push_back(p.get());
    }
    return out;
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  /// Order-sensitive FNV-1a over names and values; used to prove that a
  /// code path left parameters untouched.
  std::uint64_t checksum(std::string_view prefix = "") const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* bytes, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(bytes);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
      }
    };
    for (const auto& p : params_) {
      if (!p->name.starts_with(prefix)) continue;
      mix(p->name.data(), p->name.size());
      mix(p->value.data().data(), p->value.size() * sizeof(double));
    }
    return h;
  }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace gcomm::nn

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

// Influence reward: KL(pi(a | m, G) || p(a | G)), where the marginal p(a | G)
// is a Monte-Carlo average of pi over k pseudo messages.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gcomm/agents/speaker.hpp"
#include "gcomm/error.hpp"
#include "gcomm/nn/random.hpp"
#include "gcomm/nn/tensor.hpp"

namespace gcomm {

inline constexpr double kProbFloor = 1e-12;

/// KL(p || mean of qs), probabilities clamped at 1e-12 before the log.
inline double kl_to_mixture(const nn::Tensor& p, const std::vector<nn::Tensor>& qs) {
  if (qs.empty()) throw Error(ErrorCode::kInvalidArgument, "no pseudo distributions");
  const std::size_t n = p.size();
  std::vector<double> mix(n, 0.0);
  for (const auto& q : qs) {
    if (q.size() != n) throw Error(ErrorCode::kShapeMismatch, "pseudo distribution width");
    for (std::size_t a = 0; a < n; ++a) mix[a] += q[a];
  }
  double kl = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double pa = std::max(p[a], kProbFloor);
    const double qa = std::max(mix[a] / static_cast<double>(qs.size()), kProbFloor);
    if (p[a] > 0.0) kl += p[a] * (std::log(pa) - std::log(qa));
  }
  return std::max(kl, 0.0);
}

/// `policy(message) -> probs` must be side-effect free; `sample(rng) ->
/// message` draws one pseudo message.
template <class Policy, class Sampler>
double influence_reward(const nn::Tensor& actual, Policy&& policy, Sampler&& sample,
                        std::size_t k, Rng& rng) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  std::vector<nn::Tensor> pseudo;
  pseudo.reserve(k);
  for (std::size_t j = 0; j < k; ++j) pseudo.push_back(policy(sample(rng)));
  return kl_to_mixture(actual, pseudo);
}

/// Draws a one-hot bundle slot by slot from the speaker's distributions.
inline nn::Tensor sample_from_dists(const std::vector<nn::Tensor>& dists, Rng& rng) {
  if (dists.empty()) throw Error(ErrorCode::kInvalidArgument, "message has no distributions");
  const std::size_t d = dists.front().size();
  nn::Tensor m({dists.size() * d});
  for (std::size_t i = 0; i < dists.size(); ++i) {
    m[i * d + sample_categorical(dists[i].values(), rng)] = 1.0;
  }
  return m;
}

}  // namespace gcomm

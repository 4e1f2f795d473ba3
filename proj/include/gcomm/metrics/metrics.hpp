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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/lang/concept.hpp"

namespace gcomm {

using Symbols = std::vector<std::size_t>;

struct LanguageEntry {
  ConceptVector concept_vector;
  Symbols message;
};
using LanguageSample = std::vector<LanguageEntry>;

inline std::size_t levenshtein(const Symbols& a, const Symbols& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::size_t hamming(const ConceptVector& a, const ConceptVector& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < ConceptVector::kWidth; ++i) d += a.bits[i] != b.bits[i];
  return d;
}

/// Pearson correlation; nullopt when either side is constant.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kShapeMismatch, "pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

/// Ranks starting at 1; ties share their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

enum class Correlation { kSpearman, kPearson };

/// Correlation between all-pairs concept hamming distances and message edit
/// distances. nullopt when either distance vector is constant.
inline std::optional<double> topsim(const LanguageSample& sample,
                                    Correlation flavor = Correlation::kSpearman) {
  if (sample.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "topsim needs at least two entries");
  }
  std::vector<double> dc, dm;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = i + 1; j < sample.size(); ++j) {
      dc.push_back(static_cast<double>(hamming(sample[i].concept_vector, sample[j].concept_vector)));
      dm.push_back(static_cast<double>(levenshtein(sample[i].message, sample[j].message)));
    }
  }
  return flavor == Correlation::kSpearman ? spearman(dc, dm) : pearson(dc, dm);
}

/// Dense co-occurrence counts, rows x cols.
class CountTable {
 public:
  CountTable(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), n_(rows * cols, 0.0) {}

  void add(std::size_t r, std::size_t c, double w = 1.0) {
    if (r >= rows_ || c >= cols_) throw Error(ErrorCode::kInvalidArgument, "count out of range");
    if (w < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative count");
    n_[r * cols_ + c] += w;
  }
  double at(std::size_t r, std::size_t c) const { return n_[r * cols_ + c]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double total() const { return std::accumulate(n_.begin(), n_.end(), 0.0); }
  double row_sum(std::size_t r) const {
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) s += at(r, c);
    return s;
  }
  double col_sum(std::size_t c) const {
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) s += at(r, c);
    return s;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> n_;
};

/// Rows are concept values, columns message elements. For each concept value c
/// with m_c = argmax_m p(c | m): CI = mean_c p(c | m_c) p(m_c | c). Concept
/// values never seen contribute 0.
inline double context_independence(const CountTable& t) {
  if (t.total() <= 0.0) throw Error(ErrorCode::kMissingData, "empty count table");
  double ci = 0.0;
  for (std::size_t c = 0; c < t.rows(); ++c) {
    const double rc = t.row_sum(c);
    if (rc <= 0.0) continue;
    double best = -1.0;
    std::size_t best_m = 0;
    for (std::size_t m = 0; m < t.cols(); ++m) {
      const double cm = t.col_sum(m);
      const double p = cm > 0.0 ? t.at(c, m) / cm : 0.0;
      if (p > best) {
        best = p;
        best_m = m;
      }
    }
    ci += best * (t.at(c, best_m) / rc);
  }
  return ci / static_cast<double>(t.rows());
}

/// Plug-in mutual information in nats.
inline double mutual_information(const CountTable& t) {
  const double n = t.total();
  if (n <= 0.0) throw Error(ErrorCode::kMissingData, "empty count table");
  std::vector<double> pr(t.rows()), pc(t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) pr[r] = t.row_sum(r) / n;
  for (std::size_t c = 0; c < t.cols(); ++c) pc[c] = t.col_sum(c) / n;
  double mi = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const double p = t.at(r, c) / n;
      if (p > 0.0) mi += p * std::log(p / (pr[r] * pc[c]));
    }
  }
  return std::max(mi, 0.0);
}

/// CIC: I(m; a) from (message bundle, action) counts.
inline double cic(const CountTable& message_action) { return mutual_information(message_action); }

/// Concept-value x (slot, symbol) table of a language sample. Rows are the
/// 18 concept bits; every set bit co-occurs with every slot's symbol.
inline CountTable concept_symbol_counts(const LanguageSample& sample, std::size_t alphabet) {
  if (sample.empty()) throw Error(ErrorCode::kMissingData, "empty language sample");
  const std::size_t slots = sample.front().message.size();
  CountTable t(ConceptVector::kWidth, slots * alphabet);
  for (const auto& e : sample) {
    if (e.message.size() != slots) throw Error(ErrorCode::kInvalidArgument, "ragged messages");
    for (std::size_t b = 0; b < ConceptVector::kWidth; ++b) {
      if (!e.concept_vector.bits[b]) continue;
      for (std::size_t s = 0; s < slots; ++s) {
        if (e.message[s] >= alphabet) throw Error(ErrorCode::kInvalidArgument, "symbol out of range");
        t.add(b, s * alphabet + e.message[s]);
      }
    }
  }
  return t;
}

/// CI of a language sample over the concept bits that vary in it; constant
/// bits (the task in a single-task run) would otherwise inflate the score.
/// Probabilities are per entry: p(c | m) is the share of messages holding
/// (slot, symbol) m whose concept has bit c, and p(m | c) the converse.
inline double context_independence(const LanguageSample& sample, std::size_t alphabet) {
  const CountTable joint = concept_symbol_counts(sample, alphabet);
  const std::size_t slots = sample.front().message.size();
  std::vector<double> n_c(ConceptVector::kWidth, 0.0), n_m(joint.cols(), 0.0);
  for (const auto& e : sample) {
    for (std::size_t b = 0; b < ConceptVector::kWidth; ++b) n_c[b] += e.concept_vector.bits[b];
    for (std::size_t s = 0; s < slots; ++s) n_m[s * alphabet + e.message[s]] += 1.0;
  }
  const double n = static_cast<double>(sample.size());
  double ci = 0.0;
  std::size_t varying = 0;
  for (std::size_t b = 0; b < ConceptVector::kWidth; ++b) {
    if (n_c[b] == 0.0 || n_c[b] == n) continue;
    ++varying;
    double best = -1.0;
    std::size_t best_m = 0;
    for (std::size_t m = 0; m < joint.cols(); ++m) {
      const double p = n_m[m] > 0.0 ? joint.at(b, m) / n_m[m] : 0.0;
      if (p > best) {
        best = p;
        best_m = m;
      }
    }
    ci += best * joint.at(b, best_m) / n_c[b];
  }
  if (varying == 0) throw Error(ErrorCode::kMissingData, "no concept bit varies");
  return ci / static_cast<double>(varying);
}

}  // namespace gcomm

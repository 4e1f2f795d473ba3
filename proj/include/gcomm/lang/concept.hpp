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

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "gcomm/error.hpp"
#include "gcomm/lang/attributes.hpp"
#include "gcomm/nn/tensor.hpp"

namespace gcomm {

/// The speaker's 18-bit input:
///   [0-3] size 1..4, [4-7] shape, [8-11] color, [12-13] weight, [14-17] task.
struct ConceptVector {
  static constexpr std::size_t kWidth = 18;
  static constexpr std::size_t kSizeOffset = 0;
  static constexpr std::size_t kShapeOffset = 4;
  static constexpr std::size_t kColorOffset = 8;
  static constexpr std::size_t kWeightOffset = 12;
  static constexpr std::size_t kTaskOffset = 14;

  std::array<std::uint8_t, kWidth> bits{};

  static ConceptVector make(Task task, Shape shape, Color color, Weight weight,
                            std::optional<int> size = std::nullopt) {
    ConceptVector c;
    if (size) {
      if (*size < 1 || *size > 4) {
        throw Error(ErrorCode::kInvalidArgument, "size must be in 1..4");
      }
      c.bits[kSizeOffset + *size - 1] = 1;
    }
    c.bits[kShapeOffset + static_cast<int>(shape)] = 1;
    c.bits[kColorOffset + static_cast<int>(color)] = 1;
    c.bits[kWeightOffset + static_cast<int>(weight)] = 1;
    c.bits[kTaskOffset + static_cast<int>(task)] = 1;
    return c;
  }

  /// One-hot per group (size may be empty).
  bool valid() const {
    auto count = [this](std::size_t off, std::size_t n) {
      int c = 0;
      for (std::size_t i = off; i < off + n; ++i) {
        if (bits[i] > 1) return -1;
        c += bits[i];
      }
      return c;
    };
    const int size = count(kSizeOffset, 4);
    return (size == 0 || size == 1) && count(kShapeOffset, 4) == 1 &&
           count(kColorOffset, 4) == 1 && count(kWeightOffset, 2) == 1 &&
           count(kTaskOffset, 4) == 1;
  }

  Task task() const { return static_cast<Task>(group_index(kTaskOffset, 4)); }
  Shape shape() const { return static_cast<Shape>(group_index(kShapeOffset, 4)); }
  Color color() const { return static_cast<Color>(group_index(kColorOffset, 4)); }
  Weight weight() const { return static_cast<Weight>(group_index(kWeightOffset, 2)); }

  nn::Tensor as_tensor() const {
    nn::Tensor t({kWidth});
    for (std::size_t i = 0; i < kWidth; ++i) t[i] = bits[i];
    return t;
  }

  std::string to_string() const {
    std::string s;
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
  }

  friend bool operator==(const ConceptVector&, const ConceptVector&) = default;
  friend auto operator<=>(const ConceptVector&, const ConceptVector&) = default;

 private:
  std::size_t group_index(std::size_t off, std::size_t n) const {
    for (std::size_t i = 0; i < n; ++i) {
      if (bits[off + i]) return i;
    }
    throw Error(ErrorCode::kInvalidArgument, "concept group has no bit set");
  }
};

}  // namespace gcomm

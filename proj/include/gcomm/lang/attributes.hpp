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
#include <string_view>

#include "gcomm/error.hpp"

namespace gcomm {

// Enumerator order is the bit order of the concept and cell encodings.

enum class Task : std::uint8_t { kWalk, kPush, kPull, kPickup };
enum class Shape : std::uint8_t { kSquare, kCylinder, kCircle, kDiamond };
enum class Color : std::uint8_t { kRed, kBlue, kYellow, kGreen };
enum class Weight : std::uint8_t { kLight, kHeavy };
enum class SizeTerm : std::uint8_t { kSmall, kBig };

inline constexpr std::array kAllTasks = {Task::kWalk, Task::kPush, Task::kPull,
                                         Task::kPickup};
inline constexpr std::array kAllShapes = {Shape::kSquare, Shape::kCylinder,
                                          Shape::kCircle, Shape::kDiamond};
inline constexpr std::array kAllColors = {Color::kRed, Color::kBlue,
                                          Color::kYellow, Color::kGreen};
inline constexpr std::array kAllWeights = {Weight::kLight, Weight::kHeavy};

inline constexpr std::string_view name(Task t) {
  constexpr std::array<std::string_view, 4> n{"walk", "push", "pull", "pickup"};
  return n[static_cast<int>(t)];
}
inline constexpr std::string_view name(Shape s) {
  constexpr std::array<std::string_view, 4> n{"square", "cylinder", "circle",
                                              "diamond"};
  return n[static_cast<int>(s)];
}
inline constexpr std::string_view name(Color c) {
  constexpr std::array<std::string_view, 4> n{"red", "blue", "yellow", "green"};
  return n[static_cast<int>(c)];
}
inline constexpr std::string_view name(Weight w) {
  return w == Weight::kLight ? "light" : "heavy";
}

inline Task task_from_name(std::string_view s) {
  for (Task t : kAllTasks) {
    if (name(t) == s) return t;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown task " + std::string(s));
}
inline Shape shape_from_name(std::string_view s) {
  for (Shape v : kAllShapes) {
    if (name(v) == s) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown shape " + std::string(s));
}
inline Color color_from_name(std::string_view s) {
  for (Color v : kAllColors) {
    if (name(v) == s) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown color " + std::string(s));
}
inline Weight weight_from_name(std::string_view s) {
  for (Weight v : kAllWeights) {
    if (name(v) == s) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown weight " + std::string(s));
}

}  // namespace gcomm

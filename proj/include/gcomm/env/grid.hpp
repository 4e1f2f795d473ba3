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
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/lang/attributes.hpp"

namespace gcomm {

inline constexpr int kGridSize = 4;
inline constexpr int kNumCells = kGridSize * kGridSize;

struct Pos {
  int row = 0;
  int col = 0;

  bool in_grid() const {
    return row >= 0 && row < kGridSize && col >= 0 && col < kGridSize;
  }
  int cell() const { return row * kGridSize + col; }
  static Pos from_cell(int cell) { return {cell / kGridSize, cell % kGridSize}; }

  friend Pos operator+(Pos a, Pos b) { return {a.row + b.row, a.col + b.col}; }
  friend Pos operator-(Pos a, Pos b) { return {a.row - b.row, a.col - b.col}; }
  friend auto operator<=>(const Pos&, const Pos&) = default;
};

// Order matches the direction bits of the cell encoding.
enum class Heading : std::uint8_t { kEast, kSouth, kWest, kNorth };

inline constexpr Pos delta(Heading h) {
  switch (h) {
    case Heading::kEast: return {0, 1};
    case Heading::kSouth: return {1, 0};
    case Heading::kWest: return {0, -1};
    case Heading::kNorth: return {-1, 0};
  }
  return {0, 0};
}

inline constexpr std::string_view name(Heading h) {
  constexpr std::array<std::string_view, 4> n{"E", "S", "W", "N"};
  return n[static_cast<int>(h)];
}

enum class Action : std::uint8_t {
  kLeft,
  kRight,
  kForward,
  kBackward,
  kPush,
  kPull,
  kPickup,
  kDrop,
};
inline constexpr int kNumActions = 8;

inline constexpr std::string_view name(Action a) {
  constexpr std::array<std::string_view, kNumActions> n{
      "left", "right", "forward", "backward", "push", "pull", "pickup", "drop"};
  return n[static_cast<int>(a)];
}

inline Action action_from_name(std::string_view s) {
  for (int i = 0; i < kNumActions; ++i) {
    if (name(static_cast<Action>(i)) == s) return static_cast<Action>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown action " + std::string(s));
}

inline bool is_move(Action a) { return static_cast<int>(a) < 4; }

/// Movement is absolute: left=W, right=E, forward=N, backward=S.
inline Heading move_heading(Action a) {
  switch (a) {
    case Action::kLeft: return Heading::kWest;
    case Action::kRight: return Heading::kEast;
    case Action::kForward: return Heading::kNorth;
    case Action::kBackward: return Heading::kSouth;
    default: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "not a movement action");
}

struct GridObject {
  Shape shape = Shape::kSquare;
  Color color = Color::kRed;
  int size = 1;  // 1..4
  Weight weight = Weight::kLight;
  Pos pos;

  friend bool operator==(const GridObject&, const GridObject&) = default;
};

enum class Split : std::uint8_t {
  kNone,
  kVisualTrain,
  kVisualTest,
  kNumeralTrain,
  kNumeralTest,
};

inline constexpr std::string_view name(Split s) {
  constexpr std::array<std::string_view, 5> n{"none", "visual-train", "visual-test",
                                              "numeral-train", "numeral-test"};
  return n[static_cast<int>(s)];
}

inline Split split_from_name(std::string_view s) {
  for (int i = 0; i < 5; ++i) {
    if (name(static_cast<Split>(i)) == s) return static_cast<Split>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown split " + std::string(s));
}

inline bool is_numeral(Split s) {
  return s == Split::kNumeralTrain || s == Split::kNumeralTest;
}

/// What the listener must do. `weight` is the target's weight, so heavy
/// force tasks are the "twice" variants.
struct TaskSpec {
  Task task = Task::kWalk;
  Weight weight = Weight::kLight;

  bool twice() const {
    return weight == Weight::kHeavy && (task == Task::kPush || task == Task::kPull);
  }
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct GridState {
  std::vector<GridObject> objects;
  std::size_t target = 0;
  std::vector<Pos> walls;
  Pos agent;
  Heading heading = Heading::kEast;
  TaskSpec task;
  int step_count = 0;
  int max_steps = 20;
  int force_count = 0;  // consecutive force actions of the same kind on the target
  Action last_force = Action::kPush;
  bool done = false;

  const GridObject& target_object() const { return objects.at(target); }

  const GridObject* object_at(Pos p) const {
    for (const auto& o : objects) {
      if (o.pos == p) return &o;
    }
    return nullptr;
  }

  bool is_wall(Pos p) const {
    for (const auto& w : walls) {
      if (w == p) return true;
    }
    return false;
  }

  friend bool operator==(const GridState&, const GridState&) = default;
};

}  // namespace gcomm

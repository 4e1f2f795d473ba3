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
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "gcomm/env/grid.hpp"
#include "gcomm/error.hpp"
#include "gcomm/lang/concept.hpp"
#include "gcomm/lang/instruction.hpp"
#include "gcomm/nn/random.hpp"
#include "gcomm/nn/tensor.hpp"

namespace gcomm {

struct EnvConfig {
  int max_steps = 20;
  int num_distractors = 2;
  // Fraction of the cells left after target and distractors that receive an
  // extra object not matching the target's shape and color.
  double other_objects_sample_percentage = 0.0;
  bool oracle = false;  // adds the target-cell channel to observations
};

struct Episode {
  GridState state;
  Instruction instruction;
  ConceptVector concept_vector;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  bool success = false;
  bool displaced = false;  // target moved this step
  bool committed_wrong = false;  // ended on a non-target object or the wrong force
};

// Per-cell channels: size 0-3, shape 4-7, color 8-11, agent 12, heading 13-16,
// then the optional oracle target bit.
inline constexpr std::size_t kCellChannels = 17;
inline constexpr std::size_t kAgentChannel = 12;
inline constexpr std::size_t kHeadingChannel = 13;
inline constexpr std::size_t kOracleChannel = 17;

inline std::size_t observation_channels(bool oracle) {
  return oracle ? kCellChannels + 1 : kCellChannels;
}

inline Slots slots_for(const TaskSpec& task, const GridObject& target) {
  Slots s;
  s.verb = task.task;
  s.color = target.color;
  s.noun = target.shape;
  s.twice = task.twice();
  return s;
}

/// Tasks allowed under a split, with the weight each implies.
inline bool split_admits(Split split, const TaskSpec& t, Shape shape, Color color) {
  const bool red_square = shape == Shape::kSquare && color == Color::kRed;
  switch (split) {
    case Split::kNone:
      return t.weight == Weight::kLight;
    case Split::kVisualTrain:
      return t.weight == Weight::kLight && !red_square;
    case Split::kVisualTest:
      return t.weight == Weight::kLight && red_square;
    case Split::kNumeralTrain:
      return (t.task == Task::kPush) ||
             (t.task == Task::kPull && t.weight == Weight::kLight);
    case Split::kNumeralTest:
      return t.task == Task::kPull && t.weight == Weight::kHeavy;
  }
  return false;
}

namespace detail {

inline void check_task(Task task, Split split) {
  if (task == Task::kPickup) {
    throw Error(ErrorCode::kUnsatisfiable, "pickup has no completion rule");
  }
  if (split == Split::kNumeralTrain && task == Task::kWalk) {
    throw Error(ErrorCode::kUnsatisfiable, "numeral-train holds only push and pull");
  }
  if (split == Split::kNumeralTest && task != Task::kPull) {
    throw Error(ErrorCode::kUnsatisfiable,
                "numeral-test holds only pull twice, not " + std::string(name(task)));
  }
}

inline int random_size(Rng& rng) { return 1 + static_cast<int>(uniform_index(rng, 4)); }

}  // namespace detail

/// Samples a fresh episode for `task` under `split`. Outside the numeral split
/// every object is light; inside it weights are drawn independently of size.
inline Episode reset(const EnvConfig& cfg, Task task, Split split, Rng& rng) {
  detail::check_task(task, split);
  if (cfg.num_distractors < 0 || cfg.num_distractors + 2 > kNumCells) {
    throw Error(ErrorCode::kConfig, "num_distractors out of range");
  }
  if (cfg.max_steps < 1) throw Error(ErrorCode::kConfig, "max_steps must be positive");
  if (cfg.other_objects_sample_percentage < 0.0 ||
      cfg.other_objects_sample_percentage > 1.0) {
    throw Error(ErrorCode::kConfig, "other_objects_sample_percentage must be in [0,1]");
  }

  const bool numeral = is_numeral(split);
  auto draw_weight = [&]() {
    return numeral ? kAllWeights[uniform_index(rng, 2)] : Weight::kLight;
  };

  TaskSpec spec{task, Weight::kLight};
  GridObject target;
  if (split == Split::kVisualTest) {
    target.shape = Shape::kSquare;
    target.color = Color::kRed;
  } else if (split == Split::kNumeralTest) {
    spec.weight = Weight::kHeavy;
  }
  // Rejection over the 16 (or 32) descriptions; every filter admits at least
  // one, so the loop terminates.
  for (;;) {
    if (split != Split::kVisualTest) {
      target.shape = kAllShapes[uniform_index(rng, 4)];
      target.color = kAllColors[uniform_index(rng, 4)];
    }
    if (split == Split::kNumeralTrain) spec.weight = draw_weight();
    if (split_admits(split, spec, target.shape, target.color)) break;
  }
  target.weight = spec.weight;
  target.size = detail::random_size(rng);

  // Every distractor shares the same attribute with the target and differs in
  // the other, pairwise distinct while possible. A mixed layout (one sharing
  // color, one sharing shape) would single the target out as the object that
  // resembles both, with no message needed.
  std::vector<GridObject> objects{target};
  const bool share_color = uniform_index(rng, 2) == 0;
  std::array<std::size_t, 3> offsets{1, 2, 3};
  std::shuffle(offsets.begin(), offsets.end(), rng);
  for (int i = 0; i < cfg.num_distractors; ++i) {
    GridObject d;
    const std::size_t other = offsets[static_cast<std::size_t>(i) % offsets.size()];
    if (share_color) {
      d.color = target.color;
      d.shape = kAllShapes[(static_cast<std::size_t>(target.shape) + other) % 4];
    } else {
      d.shape = target.shape;
      d.color = kAllColors[(static_cast<std::size_t>(target.color) + other) % 4];
    }
    d.size = detail::random_size(rng);
    d.weight = draw_weight();
    objects.push_back(d);
  }
  const int free_after = kNumCells - 1 - static_cast<int>(objects.size());
  const int extras = static_cast<int>(
      std::floor(cfg.other_objects_sample_percentage * free_after + 1e-9));
  for (int i = 0; i < extras; ++i) {
    GridObject o;
    do {
      o.shape = kAllShapes[uniform_index(rng, 4)];
      o.color = kAllColors[uniform_index(rng, 4)];
    } while (o.shape == target.shape && o.color == target.color);
    o.size = detail::random_size(rng);
    o.weight = draw_weight();
    objects.push_back(o);
  }

  std::array<int, kNumCells> cells;
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  for (std::size_t i = 0; i < objects.size(); ++i) objects[i].pos = Pos::from_cell(cells[i]);

  Episode ep;
  GridState& s = ep.state;
  s.objects = std::move(objects);
  s.target = 0;
  s.task = spec;
  s.max_steps = cfg.max_steps;
  // The agent may start on a distractor but never on the target.
  do {
    s.agent = Pos::from_cell(static_cast<int>(uniform_index(rng, kNumCells)));
  } while (s.agent == s.target_object().pos);
  s.heading = static_cast<Heading>(uniform_index(rng, 4));

  ep.instruction = generate_instruction(slots_for(spec, s.target_object()));
  ep.concept_vector = encode_concept(ep.instruction.slots, spec.weight);
  return ep;
}

inline bool blocked(const GridState& s, Pos p) {
  return !p.in_grid() || s.is_wall(p);
}

/// Advances the state in place.
inline StepResult step(GridState& s, Action a) {
  if (s.done) throw Error(ErrorCode::kEpisodeDone, "step after done");
  StepResult r;
  ++s.step_count;
  GridObject& target = s.objects.at(s.target);

  const GridObject* here = s.object_at(s.agent);
  if (is_move(a)) {
    s.heading = move_heading(a);
    const Pos next = s.agent + delta(s.heading);
    if (!blocked(s, next)) {
      s.agent = next;
      // Walking onto an object commits to it.
      const GridObject* entered = s.object_at(next);
      r.committed_wrong = s.task.task == Task::kWalk && entered && entered != &target;
    }
    s.force_count = 0;
  } else if ((a == Action::kPush || a == Action::kPull) && here == &target) {
    s.force_count = (s.force_count > 0 && s.last_force == a) ? s.force_count + 1 : 1;
    s.last_force = a;
    const int needed = target.weight == Weight::kHeavy ? 2 : 1;
    if (s.force_count >= needed) {
      const Pos d = delta(s.heading);
      const Pos dest = a == Action::kPush ? target.pos + d : target.pos - d;
      if (!blocked(s, dest) && s.object_at(dest) == nullptr) {
        target.pos = dest;
        r.displaced = true;
        s.force_count = 0;
      }
    }
  } else if ((a == Action::kPush || a == Action::kPull) && here != nullptr) {
    // Forcing a distractor commits to the wrong object.
    r.committed_wrong = true;
    s.force_count = 0;
  } else {
    // Force on an empty cell, pickup and drop do nothing.
    s.force_count = 0;
  }

  switch (s.task.task) {
    case Task::kWalk:
      r.success = s.agent == target.pos;
      break;
    case Task::kPush:
      r.success = r.displaced && a == Action::kPush;
      r.committed_wrong = r.committed_wrong || (r.displaced && !r.success);
      break;
    case Task::kPull:
      r.success = r.displaced && a == Action::kPull;
      r.committed_wrong = r.committed_wrong || (r.displaced && !r.success);
      break;
    case Task::kPickup:
      break;
  }
  r.reward = r.success ? 1.0 : 0.0;
  r.done = r.success || r.committed_wrong || s.step_count >= s.max_steps;
  s.done = r.done;
  return r;
}

/// Listener view: {channels, 4, 4}; carries no task or target information
/// unless `oracle` is set. Weight is not observable.
inline nn::Tensor observe(const GridState& s, bool oracle = false) {
  const std::size_t ch = observation_channels(oracle);
  nn::Tensor out({ch, static_cast<std::size_t>(kGridSize),
                  static_cast<std::size_t>(kGridSize)});
  auto set = [&out](std::size_t channel, Pos p) {
    out[channel * kNumCells + static_cast<std::size_t>(p.cell())] = 1.0;
  };
  for (const auto& w : s.walls) {
    for (std::size_t c = 0; c < ch; ++c) set(c, w);
  }
  for (const auto& o : s.objects) {
    set(static_cast<std::size_t>(o.size - 1), o.pos);
    set(4 + static_cast<std::size_t>(o.shape), o.pos);
    set(8 + static_cast<std::size_t>(o.color), o.pos);
  }
  set(kAgentChannel, s.agent);
  set(kHeadingChannel + static_cast<std::size_t>(s.heading), s.agent);
  if (oracle) set(kOracleChannel, s.target_object().pos);
  return out;
}

/// Throws if any state invariant is broken.
inline void validate(const GridState& s) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidArgument, why); };
  if (s.target >= s.objects.size()) fail("target index out of range");
  if (!s.agent.in_grid()) fail("agent off grid");
  std::array<int, kNumCells> used{};
  for (const auto& o : s.objects) {
    if (!o.pos.in_grid()) fail("object off grid");
    if (o.size < 1 || o.size > 4) fail("object size out of range");
    if (++used[static_cast<std::size_t>(o.pos.cell())] > 1) fail("two objects share a cell");
    if (s.is_wall(o.pos)) fail("object inside a wall");
  }
  const GridObject& t = s.target_object();
  int matches = 0;
  for (const auto& o : s.objects) {
    matches += o.shape == t.shape && o.color == t.color && o.weight == t.weight;
  }
  if (matches != 1) fail("target description is not unique");
}

}  // namespace gcomm

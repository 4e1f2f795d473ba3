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

// ASCII frames. An object is its shape initial (s, c, o, d) followed by its
// color letter (R, B, Y, G); the agent is '@' plus a heading arrow; empty
// cells are '.', walls '#'. Debug renders append '*' to the target.

#include <algorithm>
#include <array>
#include <sstream>
#include <string>
#include <vector>

#include "gcomm/env/grid.hpp"
#include "gcomm/env/record.hpp"
#include "gcomm/error.hpp"

namespace gcomm {

inline std::string glyph(const GridObject& o) {
  constexpr std::array<char, 4> shapes{'s', 'c', 'o', 'd'};
  constexpr std::array<char, 4> colors{'R', 'B', 'Y', 'G'};
  return {shapes[static_cast<int>(o.shape)], colors[static_cast<int>(o.color)]};
}

inline char heading_arrow(Heading h) {
  constexpr std::array<char, 4> a{'>', 'v', '<', '^'};
  return a[static_cast<int>(h)];
}

struct RenderOptions {
  bool mark_target = false;
};

/// The 4x4 grid, one line per row, cells padded to a fixed width.
inline std::string render_grid(const GridState& s, const RenderOptions& opt = {}) {
  constexpr std::size_t kCellWidth = 6;
  std::ostringstream out;
  for (int row = 0; row < kGridSize; ++row) {
    std::string line;
    for (int col = 0; col < kGridSize; ++col) {
      const Pos p{row, col};
      std::string cell;
      if (s.agent == p) cell += std::string("@") + heading_arrow(s.heading);
      if (const GridObject* o = s.object_at(p)) {
        cell += glyph(*o);
        if (opt.mark_target && o == &s.target_object()) cell += '*';
      } else if (s.is_wall(p)) {
        cell += '#';
      }
      if (cell.empty()) cell = ".";
      if (col + 1 < kGridSize) cell.resize(std::max(cell.size() + 1, kCellWidth), ' ');
      line += cell;
    }
    out << line << '\n';
  }
  return out.str();
}

/// Frame t of a record: instruction, the action that led here, the steps
/// left, then the grid. A record with n actions yields n + 1 frames.
inline std::string render_frame(const EpisodeRecord& r, std::size_t t, int max_steps,
                                const RenderOptions& opt = {}) {
  if (t >= r.frames.size()) throw Error(ErrorCode::kInvalidArgument, "frame out of range");
  std::ostringstream out;
  out << "instruction: " << r.instruction << '\n';
  out << "action: " << (t == 0 ? std::string("-") : std::string(name(r.actions[t - 1])));
  if (t > 0 && r.rewards[t - 1] > 0.0) out << " (reward " << r.rewards[t - 1] << ")";
  out << '\n';
  out << "countdown: " << std::max(0, max_steps - static_cast<int>(t)) << '\n';
  out << render_grid(state_at(r, t), opt);
  return out.str();
}

inline std::vector<std::string> render_episode(const EpisodeRecord& r, int max_steps,
                                               const RenderOptions& opt = {}) {
  if (r.frames.size() != r.actions.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument, "record frames and actions disagree");
  }
  std::vector<std::string> frames;
  for (std::size_t t = 0; t < r.frames.size(); ++t) {
    frames.push_back(render_frame(r, t, max_steps, opt));
  }
  return frames;
}

}  // namespace gcomm

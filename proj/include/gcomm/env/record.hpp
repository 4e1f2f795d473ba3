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

// Episode logs, one JSON object per line. Records are self-contained:
// per-step frames store everything the renderers need, so nothing has to be
// re-simulated to inspect a run.

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcomm/env/env.hpp"
#include "gcomm/error.hpp"

namespace gcomm {

struct Frame {
  Pos agent;
  Heading heading = Heading::kEast;
  Pos target;

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline Frame frame_of(const GridState& s) {
  return {s.agent, s.heading, s.target_object().pos};
}

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::int64_t episode = 0;
  Split split = Split::kNone;
  TaskSpec task;
  std::string instruction;
  ConceptVector concept_vector;
  std::vector<GridObject> objects;  // initial placement
  std::size_t target = 0;
  std::vector<Frame> frames;        // frames[t] is the state before action t
  std::vector<Action> actions;
  std::vector<double> rewards;      // environment rewards
  std::vector<double> shaped;       // after intrinsic shaping, when trained
  std::vector<int> message;         // symbol index per message slot
  std::optional<std::string> master;
  std::vector<std::array<double, kNumCells>> attention;  // per step
  bool success = false;

  int done_step() const { return static_cast<int>(actions.size()); }

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

/// Starts a record from a freshly reset episode.
inline EpisodeRecord begin_record(const Episode& ep, std::uint64_t seed, Split split) {
  EpisodeRecord r;
  r.seed = seed;
  r.split = split;
  r.task = ep.state.task;
  r.instruction = ep.instruction.text();
  r.concept_vector = ep.concept_vector;
  r.objects = ep.state.objects;
  r.target = ep.state.target;
  r.frames.push_back(frame_of(ep.state));
  return r;
}

inline void record_step(EpisodeRecord& r, const GridState& after, Action a,
                        const StepResult& res) {
  r.actions.push_back(a);
  r.rewards.push_back(res.reward);
  r.frames.push_back(frame_of(after));
  if (res.success) r.success = true;
}

/// Grid state at step t rebuilt from the record.
inline GridState state_at(const EpisodeRecord& r, std::size_t t) {
  if (t >= r.frames.size()) throw Error(ErrorCode::kInvalidArgument, "frame out of range");
  GridState s;
  s.objects = r.objects;
  s.target = r.target;
  s.task = r.task;
  s.agent = r.frames[t].agent;
  s.heading = r.frames[t].heading;
  s.objects.at(s.target).pos = r.frames[t].target;
  s.step_count = static_cast<int>(t);
  return s;
}

inline nlohmann::json to_json(const EpisodeRecord& r) {
  using nlohmann::json;
  json objects = json::array();
  for (const auto& o : r.objects) {
    objects.push_back({{"shape", name(o.shape)},
                       {"color", name(o.color)},
                       {"size", o.size},
                       {"weight", name(o.weight)},
                       {"pos", {o.pos.row, o.pos.col}}});
  }
  json frames = json::array();
  for (const auto& f : r.frames) {
    frames.push_back({{"agent", {f.agent.row, f.agent.col}},
                      {"heading", name(f.heading)},
                      {"target", {f.target.row, f.target.col}}});
  }
  json actions = json::array();
  for (Action a : r.actions) actions.push_back(name(a));
  json j = {{"seed", r.seed},
            {"episode", r.episode},
            {"split", name(r.split)},
            {"task", name(r.task.task)},
            {"weight", name(r.task.weight)},
            {"instruction", r.instruction},
            {"concept", r.concept_vector.to_string()},
            {"objects", objects},
            {"target", r.target},
            {"frames", frames},
            {"actions", actions},
            {"rewards", r.rewards},
            {"shaped", r.shaped},
            {"message", r.message},
            {"attention", r.attention},
            {"success", r.success},
            {"done_step", r.done_step()}};
  if (r.master) j["master"] = *r.master;
  return j;
}

inline EpisodeRecord record_from_json(const nlohmann::json& j) {
  try {
    EpisodeRecord r;
    auto pos = [](const nlohmann::json& p) { return Pos{p.at(0).get<int>(), p.at(1).get<int>()}; };
    auto heading = [](const std::string& s) {
      for (int i = 0; i < 4; ++i) {
        if (name(static_cast<Heading>(i)) == s) return static_cast<Heading>(i);
      }
      throw Error(ErrorCode::kParse, "unknown heading " + s);
    };
    r.seed = j.at("seed").get<std::uint64_t>();
    r.episode = j.at("episode").get<std::int64_t>();
    r.split = split_from_name(j.at("split").get<std::string>());
    r.task.task = task_from_name(j.at("task").get<std::string>());
    r.task.weight = weight_from_name(j.at("weight").get<std::string>());
    r.instruction = j.at("instruction").get<std::string>();
    const auto bits = j.at("concept").get<std::string>();
    if (bits.size() != ConceptVector::kWidth) {
      throw Error(ErrorCode::kParse, "concept must have 18 bits");
    }
    for (std::size_t i = 0; i < bits.size(); ++i) r.concept_vector.bits[i] = bits[i] == '1';
    for (const auto& o : j.at("objects")) {
      r.objects.push_back({shape_from_name(o.at("shape").get<std::string>()),
                           color_from_name(o.at("color").get<std::string>()),
                           o.at("size").get<int>(),
                           weight_from_name(o.at("weight").get<std::string>()),
                           pos(o.at("pos"))});
    }
    r.target = j.at("target").get<std::size_t>();
    for (const auto& f : j.at("frames")) {
      r.frames.push_back({pos(f.at("agent")), heading(f.at("heading").get<std::string>()),
                          pos(f.at("target"))});
    }
    for (const auto& a : j.at("actions")) r.actions.push_back(action_from_name(a.get<std::string>()));
    r.rewards = j.at("rewards").get<std::vector<double>>();
    r.shaped = j.value("shaped", std::vector<double>{});
    r.message = j.value("message", std::vector<int>{});
    r.attention = j.value("attention", std::vector<std::array<double, kNumCells>>{});
    r.success = j.at("success").get<bool>();
    if (j.contains("master")) r.master = j.at("master").get<std::string>();
    if (r.target >= r.objects.size() || r.frames.size() != r.actions.size() + 1 ||
        r.rewards.size() != r.actions.size()) {
      throw Error(ErrorCode::kParse, "inconsistent episode record");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed episode record: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw;
    throw Error(ErrorCode::kParse, e.what());
  }
}

inline std::vector<EpisodeRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<EpisodeRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(line_no) + ": bad JSON");
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

}  // namespace gcomm

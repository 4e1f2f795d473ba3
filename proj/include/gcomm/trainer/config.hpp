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

// Run configuration. The on-disk form is a JSON tree; `--set a.b=v` style
// overrides are applied to the tree and must name a key that already exists.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gcomm/agents/listener.hpp"
#include "gcomm/agents/speaker.hpp"
#include "gcomm/env/env.hpp"
#include "gcomm/error.hpp"
#include "gcomm/intrinsic/coverage.hpp"

namespace gcomm {

enum class SplitMode { kNone, kVisual, kNumeral };

inline constexpr std::string_view name(SplitMode s) {
  switch (s) {
    case SplitMode::kNone: return "none";
    case SplitMode::kVisual: return "visual";
    case SplitMode::kNumeral: return "numeral";
  }
  return "?";
}

inline SplitMode split_mode_from_name(std::string_view s) {
  if (s == "none") return SplitMode::kNone;
  if (s == "visual") return SplitMode::kVisual;
  if (s == "numeral") return SplitMode::kNumeral;
  throw Error(ErrorCode::kConfig, "unknown split " + std::string(s));
}

inline Split train_filter(SplitMode s) {
  switch (s) {
    case SplitMode::kVisual: return Split::kVisualTrain;
    case SplitMode::kNumeral: return Split::kNumeralTrain;
    default: return Split::kNone;
  }
}

inline Split test_filter(SplitMode s) {
  switch (s) {
    case SplitMode::kVisual: return Split::kVisualTest;
    case SplitMode::kNumeral: return Split::kNumeralTest;
    default: return Split::kNone;
  }
}

enum class PseudoSource { kEpisode, kMarginal };

struct RunConfig {
  std::string name = "run";
  std::uint64_t seed = 0;
  std::size_t episodes = 30000;
  std::vector<Task> tasks{Task::kWalk};
  SplitMode split = SplitMode::kNone;

  EnvConfig env;
  ChannelConfig channel;
  std::size_t speaker_hidden = 4;
  ListenerMode listener_mode = ListenerMode::kSingle;
  std::size_t d_g = 12;
  bool oracle_listener = false;

  IntrinsicConfig intrinsic;
  PseudoSource pseudo_source = PseudoSource::kEpisode;

  double lr = 4e-4;
  double gamma = 1.0;
  bool baseline = false;
  double baseline_decay = 0.99;
  bool external_reward = true;
  bool speaker_reinforce = false;  // adds G_0 log p(message) to the objective

  std::size_t train_log_every = 50;   // mean training reward over the window
  std::size_t eval_every = 1000;
  std::size_t eval_episodes = 100;    // per task, validation during training
  std::size_t final_eval_episodes = 500;

  bool lp_enabled = true;
  std::size_t lp_init_episodes = 500;
  std::size_t lp_update_every = 200;
  std::size_t lp_heldout = 50;
  double lp_beta = 0.1;
  double lp_epsilon = 0.0;  // uniform mixing into the LP distribution

  std::size_t record_every = 0;  // training episodes written to episodes.jsonl; 0: none
  std::size_t checkpoint_every = 0;  // 0: only at the end

  bool multi_task() const { return tasks.size() > 1; }

  ListenerConfig listener_config() const {
    ListenerConfig l;
    l.mode = listener_mode;
    l.grid_channels = observation_channels(oracle_listener);
    l.d_g = d_g;
    l.message_width = channel.width();
    bool force = false;
    for (Task t : tasks) force = force || t != Task::kWalk;
    l.single_actions = force ? 6 : 4;
    return l;
  }

  void validate() const {
    if (tasks.empty()) throw Error(ErrorCode::kConfig, "tasks must not be empty");
    for (Task t : tasks) {
      if (t == Task::kPickup) throw Error(ErrorCode::kConfig, "pickup is not trainable");
      if (split == SplitMode::kNumeral && t == Task::kWalk) {
        throw Error(ErrorCode::kConfig, "the numeral split holds push and pull only");
      }
    }
    if (episodes == 0) throw Error(ErrorCode::kConfig, "episodes must be positive");
    if (!(lr > 0.0) || !(intrinsic.disc_lr > 0.0)) throw Error(ErrorCode::kConfig, "learning rates must be positive");
    if (gamma < 0.0 || gamma > 1.0) throw Error(ErrorCode::kConfig, "gamma must be in [0,1]");
    if (lp_beta <= 0.0 || lp_beta > 1.0) throw Error(ErrorCode::kConfig, "lp.beta must be in (0,1]");
    if (lp_epsilon < 0.0 || lp_epsilon > 1.0) throw Error(ErrorCode::kConfig, "lp.epsilon must be in [0,1]");
    if (intrinsic.k == 0) throw Error(ErrorCode::kConfig, "intrinsic.k must be positive");
    if (intrinsic.buffer_capacity == 0) throw Error(ErrorCode::kConfig, "buffer capacity");
    if (intrinsic.retrain_period == 0) throw Error(ErrorCode::kConfig, "retrain period");
    channel.validate();
    listener_config().validate();
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json tasks = nlohmann::json::array();
  for (Task t : c.tasks) tasks.push_back(name(t));
  return {
      {"name", c.name},
      {"seed", c.seed},
      {"episodes", c.episodes},
      {"tasks", tasks},
      {"split", name(c.split)},
      {"env",
       {{"max_steps", c.env.max_steps},
        {"num_distractors", c.env.num_distractors},
        {"other_objects_sample_percentage", c.env.other_objects_sample_percentage}}},
      {"channel",
       {{"kind", name(c.channel.kind)},
        {"n_m", c.channel.n_m},
        {"d_m", c.channel.d_m},
        {"tau", c.channel.tau}}},
      {"speaker", {{"hidden", c.speaker_hidden}}},
      {"listener",
       {{"mode", name(c.listener_mode)}, {"d_g", c.d_g}, {"oracle", c.oracle_listener}}},
      {"intrinsic",
       {{"coverage", c.intrinsic.coverage},
        {"influence", c.intrinsic.influence},
        {"lambda1", c.intrinsic.lambda1},
        {"lambda2", c.intrinsic.lambda2},
        {"lambda3", c.intrinsic.lambda3},
        {"k", c.intrinsic.k},
        {"disc_lr", c.intrinsic.disc_lr},
        {"disc_hidden", c.intrinsic.disc_hidden},
        {"buffer", c.intrinsic.buffer_capacity},
        {"retrain_period", c.intrinsic.retrain_period},
        {"batch", c.intrinsic.batch},
        {"batches_per_retrain", c.intrinsic.batches_per_retrain},
        {"pseudo_source", c.pseudo_source == PseudoSource::kEpisode ? "episode" : "marginal"}}},
      {"train",
       {{"lr", c.lr},
        {"gamma", c.gamma},
        {"baseline", c.baseline},
        {"baseline_decay", c.baseline_decay},
        {"external_reward", c.external_reward},
        {"speaker_reinforce", c.speaker_reinforce}}},
      {"eval",
       {{"train_window", c.train_log_every},
        {"every", c.eval_every},
        {"episodes", c.eval_episodes},
        {"final_episodes", c.final_eval_episodes}}},
      {"lp",
       {{"enabled", c.lp_enabled},
        {"init_episodes", c.lp_init_episodes},
        {"update_every", c.lp_update_every},
        {"heldout", c.lp_heldout},
        {"beta", c.lp_beta},
        {"epsilon", c.lp_epsilon}}},
      {"log", {{"record_every", c.record_every}, {"checkpoint_every", c.checkpoint_every}}},
  };
}

namespace detail {

/// Recursively checks that `j` only uses keys present in `schema`, with
/// compatible value types.
inline void check_against(const nlohmann::json& schema, const nlohmann::json& j,
                          const std::string& path) {
  if (schema.is_object()) {
    if (!j.is_object()) throw Error(ErrorCode::kConfig, path + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string key = path.empty() ? it.key() : path + "." + it.key();
      if (!schema.contains(it.key())) throw Error(ErrorCode::kConfig, "unknown config key " + key);
      check_against(schema.at(it.key()), it.value(), key);
    }
    return;
  }
  const bool ok = (schema.is_number() && j.is_number()) ||
                  (schema.is_boolean() && j.is_boolean()) ||
                  (schema.is_string() && j.is_string()) || (schema.is_array() && j.is_array());
  if (!ok) throw Error(ErrorCode::kConfig, "wrong type for " + path);
  if (schema.is_number_unsigned() && j.is_number_integer() && j.get<std::int64_t>() < 0) {
    throw Error(ErrorCode::kConfig, path + " must be non-negative");
  }
  if (schema.is_number_integer() && j.is_number_float()) {
    throw Error(ErrorCode::kConfig, path + " must be an integer");
  }
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  const nlohmann::json schema = to_json(RunConfig{});
  detail::check_against(schema, j, "");
  nlohmann::json merged = schema;
  merged.merge_patch(j);
  try {
    RunConfig c;
    c.name = merged["name"].get<std::string>();
    c.seed = merged["seed"].get<std::uint64_t>();
    c.episodes = merged["episodes"].get<std::size_t>();
    c.tasks.clear();
    for (const auto& t : merged["tasks"]) c.tasks.push_back(task_from_name(t.get<std::string>()));
    c.split = split_mode_from_name(merged["split"].get<std::string>());
    const auto& env = merged["env"];
    c.env.max_steps = env["max_steps"].get<int>();
    c.env.num_distractors = env["num_distractors"].get<int>();
    c.env.other_objects_sample_percentage = env["other_objects_sample_percentage"].get<double>();
    const auto& ch = merged["channel"];
    c.channel.kind = channel_kind_from_name(ch["kind"].get<std::string>());
    c.channel.n_m = ch["n_m"].get<std::size_t>();
    c.channel.d_m = ch["d_m"].get<std::size_t>();
    c.channel.tau = ch["tau"].get<double>();
    c.speaker_hidden = merged["speaker"]["hidden"].get<std::size_t>();
    const auto& l = merged["listener"];
    c.listener_mode = listener_mode_from_name(l["mode"].get<std::string>());
    c.d_g = l["d_g"].get<std::size_t>();
    c.oracle_listener = l["oracle"].get<bool>();
    c.env.oracle = c.oracle_listener;
    const auto& in = merged["intrinsic"];
    c.intrinsic.coverage = in["coverage"].get<bool>();
    c.intrinsic.influence = in["influence"].get<bool>();
    c.intrinsic.lambda1 = in["lambda1"].get<double>();
    c.intrinsic.lambda2 = in["lambda2"].get<double>();
    c.intrinsic.lambda3 = in["lambda3"].get<double>();
    c.intrinsic.k = in["k"].get<std::size_t>();
    c.intrinsic.disc_lr = in["disc_lr"].get<double>();
    c.intrinsic.disc_hidden = in["disc_hidden"].get<std::size_t>();
    c.intrinsic.buffer_capacity = in["buffer"].get<std::size_t>();
    c.intrinsic.retrain_period = in["retrain_period"].get<std::size_t>();
    c.intrinsic.batch = in["batch"].get<std::size_t>();
    c.intrinsic.batches_per_retrain = in["batches_per_retrain"].get<std::size_t>();
    const auto src = in["pseudo_source"].get<std::string>();
    if (src != "episode" && src != "marginal") {
      throw Error(ErrorCode::kConfig, "intrinsic.pseudo_source must be episode or marginal");
    }
    c.pseudo_source = src == "episode" ? PseudoSource::kEpisode : PseudoSource::kMarginal;
    const auto& tr = merged["train"];
    c.lr = tr["lr"].get<double>();
    c.gamma = tr["gamma"].get<double>();
    c.baseline = tr["baseline"].get<bool>();
    c.baseline_decay = tr["baseline_decay"].get<double>();
    c.external_reward = tr["external_reward"].get<bool>();
    c.speaker_reinforce = tr["speaker_reinforce"].get<bool>();
    const auto& ev = merged["eval"];
    c.train_log_every = ev["train_window"].get<std::size_t>();
    c.eval_every = ev["every"].get<std::size_t>();
    c.eval_episodes = ev["episodes"].get<std::size_t>();
    c.final_eval_episodes = ev["final_episodes"].get<std::size_t>();
    const auto& lp = merged["lp"];
    c.lp_enabled = lp["enabled"].get<bool>();
    c.lp_init_episodes = lp["init_episodes"].get<std::size_t>();
    c.lp_update_every = lp["update_every"].get<std::size_t>();
    c.lp_heldout = lp["heldout"].get<std::size_t>();
    c.lp_beta = lp["beta"].get<double>();
    c.lp_epsilon = lp["epsilon"].get<double>();
    c.record_every = merged["log"]["record_every"].get<std::size_t>();
    c.checkpoint_every = merged["log"]["checkpoint_every"].get<std::size_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kConfig, e.what());
  }
}

/// Applies `a.b.c=value`. The value is parsed as JSON when possible and
/// taken as a string otherwise; comma lists become string arrays.
inline void apply_override(nlohmann::json& tree, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorCode::kConfig, "override must look like key=value: " + std::string(assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  const nlohmann::json schema = to_json(RunConfig{});
  const nlohmann::json* node = &schema;
  nlohmann::json* target = &tree;
  std::string part;
  std::istringstream parts(key);
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!node->is_object() || !node->contains(path[i])) {
      throw Error(ErrorCode::kConfig, "unknown config key " + key);
    }
    node = &node->at(path[i]);
    target = &(*target)[path[i]];
  }
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded() || (node->is_string() && !value.is_string())) value = raw;
  if (node->is_array() && !value.is_array()) {
    value = nlohmann::json::array();
    std::istringstream items(raw);
    std::string item;
    while (std::getline(items, item, ',')) value.push_back(item);
  }
  *target = value;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false, true);
  if (j.is_discarded()) throw Error(ErrorCode::kConfig, "config is not valid JSON: " + path);
  return j;
}

}  // namespace gcomm

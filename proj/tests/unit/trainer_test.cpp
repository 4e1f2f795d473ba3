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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "gcomm/trainer/config.hpp"
#include "gcomm/trainer/lp.hpp"
#include "gcomm/trainer/trainer.hpp"

namespace gcomm {
namespace {

RunConfig tiny(std::size_t episodes = 200) {
  RunConfig c;
  c.episodes = episodes;
  c.eval_every = 100;
  c.eval_episodes = 10;
  c.final_eval_episodes = 20;
  c.lp_init_episodes = 20;
  c.lp_update_every = 50;
  c.lp_heldout = 5;
  return c;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gcomm_trainer_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

TEST(Returns, SparseTerminalRewardIsCarriedBack) {
  const auto g = discounted_returns({0, 0, 0, 1}, 1.0);
  for (double v : g) EXPECT_EQ(v, 1.0);
  const auto h = discounted_returns({0, 0, 1}, 0.5);
  EXPECT_DOUBLE_EQ(h[0], 0.25);
  EXPECT_DOUBLE_EQ(h[1], 0.5);
  EXPECT_DOUBLE_EQ(h[2], 1.0);
}

TEST(Returns, RandomRewardsMatchDirectSum) {
  Rng rng = make_rng(5, Stream::kEval);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> r(1 + uniform_index(rng, 20));
    for (double& v : r) v = uniform01(rng) - 0.5;
    const double gamma = uniform01(rng);
    const auto g = discounted_returns(r, gamma);
    for (std::size_t t = 0; t < r.size(); ++t) {
      double direct = 0.0;
      for (std::size_t u = t; u < r.size(); ++u) direct += std::pow(gamma, u - t) * r[u];
      EXPECT_NEAR(g[t], direct, 1e-12);
    }
  }
}

TEST(LearningProgress, ProportionalToInitialRewards) {
  LPTracker lp({0.4, 0.1, 0.1}, 0.1);
  EXPECT_NEAR(lp.probabilities()[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(lp.probabilities()[1], 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(lp.probabilities()[2], 1.0 / 6.0, 1e-12);
}

TEST(LearningProgress, EqualOrZeroProgressIsUniform) {
  LPTracker eq({0.3, 0.3, 0.3}, 0.1);
  for (double p : eq.probabilities()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
  LPTracker zero({0.0, 0.0, 0.0}, 0.1);
  for (double p : zero.probabilities()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
  zero.update(std::vector<double>{0.0, 0.0, 0.0});
  for (double p : zero.probabilities()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
}

TEST(LearningProgress, MeanFollowsGeometricAverage) {
  const double beta = 0.1, r = 0.8;
  LPTracker lp({0.2}, beta);
  for (int n = 1; n <= 30; ++n) {
    const double before = lp.mu()[0];
    lp.update(std::vector<double>{r});
    EXPECT_NEAR(lp.lp()[0], std::abs(r - before), 1e-12);
    EXPECT_NEAR(lp.mu()[0], r + (0.2 - r) * std::pow(1.0 - beta, n), 1e-12);
  }
}

TEST(LearningProgress, EpsilonMixesInUniform) {
  LPTracker lp({1.0, 0.0}, 0.1, 0.2);
  EXPECT_NEAR(lp.probabilities()[0], 0.8 + 0.1, 1e-12);
  EXPECT_NEAR(lp.probabilities()[1], 0.1, 1e-12);
}

TEST(LearningProgress, SamplingMatchesProbabilities) {
  LPTracker lp({0.6, 0.3, 0.1}, 0.1);
  Rng rng = make_rng(9, Stream::kTask);
  std::vector<double> counts(3, 0.0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) counts[lp.sample(rng)] += 1.0;
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(counts[i] / n, lp.probabilities()[i], 0.015);
}

TEST(LearningProgress, RejectsBadArguments) {
  EXPECT_THROW(LPTracker({}, 0.1), Error);
  EXPECT_THROW(LPTracker({0.1}, 0.0), Error);
  LPTracker lp({0.1, 0.2}, 0.1);
  EXPECT_THROW(lp.update(std::vector<double>{0.1}), Error);
}

TEST(Config, DefaultsRoundTripThroughJson) {
  const RunConfig c;
  const auto j = to_json(c);
  EXPECT_EQ(to_json(config_from_json(j)), j);
  EXPECT_EQ(to_json(config_from_json(nlohmann::json::object())), j);
}

TEST(Config, OverridesReachNestedKeys) {
  auto tree = to_json(RunConfig{});
  apply_override(tree, "train.lr=0.001");
  apply_override(tree, "channel.kind=perfect");
  apply_override(tree, "channel.n_m=5");
  apply_override(tree, "tasks=push,pull");
  apply_override(tree, "listener.oracle=true");
  apply_override(tree, "split=numeral");
  const RunConfig c = config_from_json(tree);
  EXPECT_DOUBLE_EQ(c.lr, 0.001);
  EXPECT_EQ(c.channel.kind, ChannelKind::kPerfect);
  ASSERT_EQ(c.tasks.size(), 2u);
  EXPECT_EQ(c.tasks[0], Task::kPush);
  EXPECT_EQ(c.tasks[1], Task::kPull);
  EXPECT_TRUE(c.oracle_listener);
  EXPECT_EQ(c.split, SplitMode::kNumeral);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, UnknownKeysAndBadValuesAreConfigErrors) {
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  auto tree = to_json(RunConfig{});
  EXPECT_EQ(code_of([&] { apply_override(tree, "train.learning_rate=1"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { apply_override(tree, "no_equals_sign"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { config_from_json({{"bogus", 1}}); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { config_from_json({{"train", {{"lr", "fast"}}}}); }),
            ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { config_from_json({{"split", "sideways"}}); }), ErrorCode::kConfig);

  RunConfig walk_numeral;
  walk_numeral.split = SplitMode::kNumeral;
  EXPECT_EQ(code_of([&] { walk_numeral.validate(); }), ErrorCode::kConfig);
  RunConfig pickup;
  pickup.tasks = {Task::kPickup};
  EXPECT_EQ(code_of([&] { pickup.validate(); }), ErrorCode::kConfig);
}

TEST(Config, SingleListenerWidthFollowsTasks) {
  RunConfig c;
  EXPECT_EQ(c.listener_config().single_actions, 4u);
  c.tasks = {Task::kWalk, Task::kPush};
  EXPECT_EQ(c.listener_config().single_actions, 6u);
}

TEST(TrainEpisode, ZeroRewardWithoutBaselineLeavesParametersUnchanged) {
  RunConfig c = tiny();
  c.external_reward = false;
  c.intrinsic.coverage = false;
  c.intrinsic.influence = false;
  Agents agents(c);
  Streams rng(c.seed);
  nn::Tape tape;
  const auto before = agents.params().checksum();
  for (int i = 0; i < 20; ++i) {
    EpisodeOutcome out = train_episode(agents, Task::kWalk, Split::kNone, rng, tape);
    for (double v : out.record.shaped) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(agents.params().checksum(), before);
}

TEST(TrainEpisode, WithoutIntrinsicShapedRewardIsEnvironmentReward) {
  RunConfig c = tiny();
  c.intrinsic.coverage = false;
  c.intrinsic.influence = false;
  c.channel.kind = ChannelKind::kPerfect;
  c.channel.n_m = 5;
  Agents agents(c);
  Streams rng(c.seed);
  nn::Tape tape;
  for (int i = 0; i < 50; ++i) {
    EpisodeOutcome out = train_episode(agents, Task::kWalk, Split::kNone, rng, tape);
    EXPECT_EQ(out.record.shaped, out.record.rewards);
    EXPECT_EQ(out.influence, 0.0);
    EXPECT_EQ(out.coverage, 0.0);
  }
}

TEST(TrainEpisode, IntrinsicTermsAreAddedToShapedReward) {
  RunConfig c = tiny();
  Agents agents(c);
  Streams rng(c.seed);
  nn::Tape tape;
  for (int i = 0; i < 30; ++i) {
    EpisodeOutcome out = train_episode(agents, Task::kWalk, Split::kNone, rng, tape);
    double shaped = 0.0, env = 0.0;
    for (double v : out.record.shaped) shaped += v;
    for (double v : out.record.rewards) env += v;
    EXPECT_NEAR(shaped, env + c.intrinsic.lambda3 * out.influence + out.coverage, 1e-12);
    EXPECT_GE(out.influence, 0.0);
  }
}

TEST(TrainEpisode, ToggleDoesNotShiftEnvironmentStream) {
  RunConfig on = tiny();
  RunConfig off = on;
  off.intrinsic.coverage = false;
  off.intrinsic.influence = false;
  Agents a(on), b(off);
  Streams ra(on.seed), rb(off.seed);
  nn::Tape tape;
  for (int i = 0; i < 40; ++i) {
    const auto x = train_episode(a, Task::kWalk, Split::kNone, ra, tape).record;
    const auto y = train_episode(b, Task::kWalk, Split::kNone, rb, tape).record;
    EXPECT_EQ(x.objects, y.objects);
    EXPECT_EQ(x.target, y.target);
    EXPECT_EQ(x.instruction, y.instruction);
  }
}

TEST(Train, SameSeedGivesIdenticalMetrics) {
  RunConfig c = tiny(150);
  const auto a = train(c);
  const auto b = train(c);
  ASSERT_EQ(a.metrics.size(), b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    EXPECT_EQ(csv_line(a.metrics[i]), csv_line(b.metrics[i]));
  }
  c.seed = 1;
  const auto d = train(c);
  EXPECT_NE(a.agents->params().checksum(), d.agents->params().checksum());
}

TEST(Train, MultiTaskRunLogsTaskProbabilities) {
  RunConfig c = tiny(100);
  c.tasks = {Task::kWalk, Task::kPush, Task::kPull};
  c.listener_mode = ListenerMode::kHierarchical;
  const auto r = train(c);
  std::size_t lp_rows = 0;
  double sum_at_zero = 0.0;
  for (const auto& m : r.metrics) {
    if (!m.metric.starts_with("lp_p_")) continue;
    ++lp_rows;
    if (m.episode == 0) sum_at_zero += m.value;
  }
  EXPECT_EQ(lp_rows, 3u * 3u);  // init plus two updates
  EXPECT_NEAR(sum_at_zero, 1.0, 1e-12);
}

TEST(Train, WritesRunDirectory) {
  const auto dir = scratch_dir("rundir");
  RunConfig c = tiny(100);
  c.split = SplitMode::kVisual;
  c.record_every = 50;
  const auto r = train(c, dir);
  for (const char* f : {"config.json", "metrics.csv", "episodes.jsonl", "summary.json",
                        "checkpoint.bin"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream metrics(dir / "metrics.csv");
  std::string header;
  std::getline(metrics, header);
  EXPECT_EQ(header, kMetricsHeader);

  const auto summary = read_json_file((dir / "summary.json").string());
  EXPECT_EQ(summary.at("version"), kVersion);
  EXPECT_TRUE(summary.contains("zero_shot"));
  EXPECT_EQ(config_from_json(read_json_file((dir / "config.json").string())).split,
            SplitMode::kVisual);

  std::ifstream episodes(dir / "episodes.jsonl");
  std::size_t train_lines = 0, eval_lines = 0;
  for (std::string line; std::getline(episodes, line);) {
    const auto j = nlohmann::json::parse(line);
    (j.at("phase") == "train" ? train_lines : eval_lines) += 1;
  }
  EXPECT_EQ(train_lines, 2u);
  EXPECT_EQ(eval_lines, c.final_eval_episodes);
  std::filesystem::remove_all(dir);
}

TEST(Train, CheckpointRestoresPolicy) {
  const auto dir = scratch_dir("ckpt");
  RunConfig c = tiny(100);
  c.split = SplitMode::kVisual;
  const auto r = train(c, dir);
  Agents fresh(c);
  EXPECT_NE(fresh.params().checksum(), r.agents->params().checksum());
  fresh.load((dir / "checkpoint.bin").string());
  EXPECT_EQ(fresh.params().checksum(), r.agents->params().checksum());
  const auto a = evaluate(*r.agents, c.tasks, Split::kVisualTrain, 30, kValidationBase, true);
  const auto b = evaluate(fresh, c.tasks, Split::kVisualTrain, 30, kValidationBase, true);
  EXPECT_EQ(a.records, b.records);
  std::filesystem::remove_all(dir);
}

TEST(Eval, LeavesParametersAndBufferUntouched) {
  RunConfig c = tiny();
  Agents agents(c);
  const auto before = agents.params().checksum();
  const auto res = evaluate(agents, c.tasks, Split::kNone, 40, kValidationBase, true);
  EXPECT_EQ(agents.params().checksum(), before);
  EXPECT_EQ(agents.buffer().size(), 0u);
  EXPECT_EQ(res.records.size(), 40u);
  EXPECT_GE(res.mean_reward, 0.0);
  EXPECT_LE(res.mean_reward, 1.0);
}

TEST(Eval, FailedAttentionStatisticCountsFirstStepArgmax) {
  RunConfig c = tiny();
  Agents agents(c);
  auto res = evaluate(agents, c.tasks, Split::kNone, 50, kValidationBase, true);
  std::vector<EpisodeRecord> failed;
  for (auto& r : res.records) {
    if (!r.success && !r.attention.empty()) failed.push_back(r);
  }
  ASSERT_GE(failed.size(), 2u);
  // Point the first record's attention at its target, the rest elsewhere.
  for (std::size_t i = 0; i < failed.size(); ++i) {
    auto& a = failed[i].attention.front();
    a.fill(0.0);
    const int target = failed[i].frames.front().target.cell();
    a[i == 0 ? target : (target + 1) % kNumCells] = 1.0;
  }
  const auto stat = failed_attention_on_target(failed);
  ASSERT_TRUE(stat.has_value());
  EXPECT_NEAR(*stat, 1.0 / static_cast<double>(failed.size()), 1e-12);

  failed.front().success = true;
  for (auto& r : failed) r.success = true;
  EXPECT_FALSE(failed_attention_on_target(failed).has_value());
}

}  // namespace
}  // namespace gcomm

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
#include <numbers>

#include <gtest/gtest.h>

#include "gcomm/agents/speaker.hpp"
#include "gcomm/intrinsic/coverage.hpp"
#include "gcomm/intrinsic/influence.hpp"

namespace gcomm {
namespace {

nn::Tensor vec(std::initializer_list<double> v) {
  nn::Tensor t({v.size()});
  std::size_t i = 0;
  for (double x : v) t[i++] = x;
  return t;
}

TEST(Influence, ZeroForMessageBlindPolicy) {
  Rng rng = make_rng(1, Stream::kPseudo);
  const auto p = vec({0.1, 0.2, 0.3, 0.4});
  auto policy = [&](const nn::Tensor&) { return p; };
  auto sampler = [](Rng& r) { return onehot_bundle({uniform_index(r, 4), 0}, 4).concat; };
  EXPECT_NEAR(influence_reward(p, policy, sampler, 10, rng), 0.0, 1e-15);
}

TEST(Influence, DeterministicTwoMessagePolicyGivesLn2) {
  // pi(a | m) puts all mass on action m; the marginal over fair pseudo
  // messages is uniform on two actions, so the KL is ln 2.
  Rng rng = make_rng(2, Stream::kPseudo);
  auto policy = [](const nn::Tensor& m) { return m[0] == 1.0 ? vec({1, 0}) : vec({0, 1}); };
  auto sampler = [](Rng& r) { return uniform_index(r, 2) == 0 ? vec({1, 0}) : vec({0, 1}); };
  const double r = influence_reward(vec({1, 0}), policy, sampler, 1000, rng);
  EXPECT_NEAR(r, std::numbers::ln2, 0.05);
}

TEST(Influence, KlMatchesDirectFormula) {
  Rng rng = make_rng(3, Stream::kPseudo);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<nn::Tensor> qs;
    nn::Tensor p({5});
    double sp = 0.0;
    for (std::size_t a = 0; a < 5; ++a) sp += p[a] = uniform01(rng) + 1e-3;
    for (std::size_t a = 0; a < 5; ++a) p[a] /= sp;
    std::vector<double> mix(5, 0.0);
    for (int j = 0; j < 4; ++j) {
      nn::Tensor q({5});
      double s = 0.0;
      for (std::size_t a = 0; a < 5; ++a) s += q[a] = uniform01(rng) + 1e-3;
      for (std::size_t a = 0; a < 5; ++a) mix[a] += (q[a] /= s) / 4.0;
      qs.push_back(q);
    }
    double expected = 0.0;
    for (std::size_t a = 0; a < 5; ++a) expected += p[a] * std::log(p[a] / mix[a]);
    EXPECT_NEAR(kl_to_mixture(p, qs), expected, 1e-12);
    EXPECT_GE(kl_to_mixture(p, qs), 0.0);
  }
}

TEST(Influence, ClampsZeroMixtureMass) {
  const double kl = kl_to_mixture(vec({1, 0}), {vec({0, 1})});
  EXPECT_NEAR(kl, -std::log(kProbFloor), 1e-9);
  EXPECT_THROW(kl_to_mixture(vec({1, 0}), {}), Error);
}

TEST(Influence, SampleFromDistsFollowsSlots) {
  Rng rng = make_rng(4, Stream::kPseudo);
  std::vector<nn::Tensor> d{vec({0, 0, 1, 0}), vec({0.5, 0.5, 0, 0})};
  int first = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto m = sample_from_dists(d, rng);
    EXPECT_EQ(m[2], 1.0);
    EXPECT_EQ(m[6] + m[7], 0.0);
    first += m[4] == 1.0;
  }
  EXPECT_NEAR(first / 2000.0, 0.5, 0.05);
}

TEST(Coverage, RewardFormula) {
  IntrinsicConfig cfg;
  nn::ParamSet params;
  Rng init = make_rng(5, Stream::kInit);
  Discriminator disc(params, 8, 32, init);
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value.fill(0.0);
  // All-zero weights: every head is uniform, so L = ln4 + ln4 + ln4 + ln2.
  const double l = 3 * std::log(4.0) + std::log(2.0);
  const auto c = ConceptVector::make(Task::kWalk, Shape::kCircle, Color::kRed, Weight::kLight);
  const auto m = onehot_bundle({1, 2}, 4).concat;
  EXPECT_NEAR(disc.loss_value(c, m), l, 1e-12);
  EXPECT_NEAR(coverage_reward(c, m, disc, cfg), 0.01 * (2.80 - l), 1e-12);
  nn::Tape tape;
  EXPECT_NEAR(disc.loss(tape, c, m).value()[0], l, 1e-12);
}

TEST(Coverage, WorkedExamples) {
  IntrinsicConfig cfg;
  // With lambda1 = 0.01 and lambda2 = 2.80 a perfect discriminator pays 0.028.
  EXPECT_NEAR(cfg.lambda1 * (cfg.lambda2 - 0.0), 0.028, 1e-12);
  nn::ParamSet params;
  Rng init = make_rng(6, Stream::kInit);
  Discriminator disc(params, 8, 8, init);
  // Saturate the heads on the right labels through their biases.
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value.fill(0.0);
  const auto c = ConceptVector::make(Task::kPull, Shape::kDiamond, Color::kGreen, Weight::kHeavy);
  for (const char* h : {"disc.task", "disc.shape", "disc.color", "disc.weight"}) {
    auto& b = params.get(std::string(h) + ".b");
    b.value.fill(-40.0);
  }
  params.get("disc.task.b").value[2] = 40.0;
  params.get("disc.shape.b").value[3] = 40.0;
  params.get("disc.color.b").value[3] = 40.0;
  params.get("disc.weight.b").value[1] = 40.0;
  EXPECT_NEAR(coverage_reward(c, onehot_bundle({0, 0}, 4).concat, disc, cfg), 0.028, 1e-9);
}

TEST(Coverage, IdentityCodeIsLearned) {
  IntrinsicConfig cfg;
  nn::ParamSet params;
  Rng init = make_rng(7, Stream::kInit);
  Discriminator disc(params, 8, cfg.disc_hidden, init);
  nn::Adam opt(disc.parameters(), {.lr = cfg.disc_lr});
  DiscBuffer buf(cfg.buffer_capacity);
  // Messages encode shape in slot 0 and color in slot 1, always a walk task.
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t col = 0; col < 4; ++col) {
      const auto c = ConceptVector::make(Task::kWalk, static_cast<Shape>(s),
                                         static_cast<Color>(col), Weight::kLight);
      for (int rep = 0; rep < 4; ++rep) buf.push(c, onehot_bundle({s, col}, 4).concat);
    }
  }
  Rng rng = make_rng(7, Stream::kDisc);
  double last = 1e9;
  for (int u = 0; u < 200; ++u) last = *train_discriminator(disc, opt, buf, cfg, rng);
  EXPECT_LT(last, 0.1);
}

TEST(Coverage, RandomMessagesHitEntropyFloor) {
  IntrinsicConfig cfg;
  nn::ParamSet params;
  Rng init = make_rng(8, Stream::kInit);
  Discriminator disc(params, 8, cfg.disc_hidden, init);
  nn::Adam opt(disc.parameters(), {.lr = cfg.disc_lr});
  DiscBuffer buf(cfg.buffer_capacity);
  Rng rng = make_rng(8, Stream::kEnv);
  // Shape and color uniform, task and weight fixed: the best achievable loss is 2 ln 4.
  for (int i = 0; i < 500; ++i) {
    const auto c = ConceptVector::make(Task::kWalk, static_cast<Shape>(uniform_index(rng, 4)),
                                       static_cast<Color>(uniform_index(rng, 4)), Weight::kLight);
    buf.push(c, onehot_bundle({uniform_index(rng, 4), uniform_index(rng, 4)}, 4).concat);
  }
  Rng drng = make_rng(8, Stream::kDisc);
  for (int u = 0; u < 400; ++u) train_discriminator(disc, opt, buf, cfg, drng);
  double mean = 0.0;
  for (std::size_t i = 0; i < buf.size(); ++i) mean += disc.loss_value(buf[i].first, buf[i].second);
  mean /= static_cast<double>(buf.size());
  EXPECT_NEAR(mean, 2 * std::log(4.0), 0.1 * 2 * std::log(4.0));
}

TEST(Coverage, TrainingTouchesOnlyDiscriminator) {
  IntrinsicConfig cfg;
  nn::ParamSet params;
  Rng init = make_rng(9, Stream::kInit);
  Speaker sp(params, ChannelConfig{}, 4, init);
  Discriminator disc(params, 8, 16, init);
  nn::Adam opt(disc.parameters(), {.lr = cfg.disc_lr});
  DiscBuffer buf(60);
  Rng rng = make_rng(9, Stream::kSpeaker);
  for (int i = 0; i < 60; ++i) {
    const auto c = ConceptVector::make(Task::kWalk, static_cast<Shape>(i % 4),
                                       static_cast<Color>(i / 4 % 4), Weight::kLight);
    buf.push(c, sp.speak_eval(c, rng).concat);
  }
  const auto speaker_sum = params.checksum("speaker.");
  const auto disc_sum = params.checksum("disc.");
  Rng drng = make_rng(9, Stream::kDisc);
  ASSERT_TRUE(train_discriminator(disc, opt, buf, cfg, drng).has_value());
  EXPECT_EQ(params.checksum("speaker."), speaker_sum);
  EXPECT_NE(params.checksum("disc."), disc_sum);
}

TEST(Coverage, BufferEvictsOldest) {
  DiscBuffer buf(3);
  const auto c = ConceptVector::make(Task::kWalk, Shape::kSquare, Color::kRed, Weight::kLight);
  for (int i = 0; i < 5; ++i) buf.push(c, vec({static_cast<double>(i)}));
  EXPECT_EQ(buf.size(), 3u);
  const auto o = buf.ordered();
  EXPECT_EQ(o[0].second[0], 2.0);
  EXPECT_EQ(o[2].second[0], 4.0);
  EXPECT_THROW(DiscBuffer(0), Error);

  IntrinsicConfig cfg;
  nn::ParamSet params;
  Rng init = make_rng(10, Stream::kInit);
  Discriminator disc(params, 1, 4, init);
  nn::Adam opt(disc.parameters(), {});
  Rng rng = make_rng(10, Stream::kDisc);
  EXPECT_FALSE(train_discriminator(disc, opt, buf, cfg, rng).has_value());
}

}  // namespace
}  // namespace gcomm

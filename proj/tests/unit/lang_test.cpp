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

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "gcomm/lang/instruction.hpp"

namespace gcomm {
namespace {

Slots walk_to(Color c, Shape s) {
  Slots slots;
  slots.verb = Task::kWalk;
  slots.color = c;
  slots.noun = s;
  return slots;
}

/// Every slot assignment the grammar can produce.
std::vector<Slots> enumerate_grammar() {
  std::vector<Slots> all;
  const std::array<std::optional<SizeTerm>, 3> sizes{std::nullopt, SizeTerm::kSmall,
                                                     SizeTerm::kBig};
  const std::array<std::optional<Weight>, 3> weights{std::nullopt, Weight::kLight,
                                                     Weight::kHeavy};
  for (Task t : kAllTasks) {
    for (bool twice : {false, true}) {
      if (twice && !takes_twice(t)) continue;
      for (auto sz : sizes) {
        for (auto w : weights) {
          for (Color c : kAllColors) {
            for (Shape s : kAllShapes) {
              all.push_back(Slots{t, sz, w, c, s, twice});
            }
          }
        }
      }
    }
  }
  return all;
}

TEST(Generate, WalkToRedSquare) {
  EXPECT_EQ(generate_instruction(walk_to(Color::kRed, Shape::kSquare)).text(),
            "walk to a red square");
}

TEST(Generate, PullRedSquareTwice) {
  Slots s{Task::kPull, std::nullopt, std::nullopt, Color::kRed, Shape::kSquare, true};
  EXPECT_EQ(generate_instruction(s).text(), "pull a red square twice");
}

TEST(Generate, PushYellowSquare) {
  Slots s{Task::kPush, std::nullopt, std::nullopt, Color::kYellow, Shape::kSquare, false};
  EXPECT_EQ(generate_instruction(s).text(), "push a yellow square");
}

TEST(Generate, TwiceOnWalkRejected) {
  Slots s = walk_to(Color::kRed, Shape::kCircle);
  s.twice = true;
  EXPECT_THROW(generate_instruction(s), Error);
}

TEST(Parse, WalkToRedSquare) {
  Slots s = parse("walk to a red square");
  EXPECT_EQ(s, walk_to(Color::kRed, Shape::kSquare));
}

TEST(Parse, PullTwice) {
  Slots s = parse("pull a red square twice");
  EXPECT_EQ(s.verb, Task::kPull);
  EXPECT_EQ(s.color, Color::kRed);
  EXPECT_EQ(s.noun, Shape::kSquare);
  EXPECT_TRUE(s.twice);
}

TEST(Parse, StackedAdjectives) {
  Slots s = parse("push a big heavy blue cylinder");
  EXPECT_EQ(s, (Slots{Task::kPush, SizeTerm::kBig, Weight::kHeavy, Color::kBlue,
                      Shape::kCylinder, false}));
  EXPECT_EQ(generate_instruction(s).text(), "push a big heavy blue cylinder");
}

TEST(Parse, UnknownTokenNamed) {
  try {
    parse("walk to a purple square");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("purple"), std::string::npos);
  }
}

TEST(Parse, StructuralErrors) {
  EXPECT_THROW(parse("walk a red square"), Error);           // missing "to"
  EXPECT_THROW(parse("push to a red square"), Error);        // stray "to"
  EXPECT_THROW(parse("push a red blue square"), Error);      // two colors
  EXPECT_THROW(parse("push a red"), Error);                  // no noun
  EXPECT_THROW(parse("walk to a red square twice"), Error);  // adverb on walk
  EXPECT_THROW(parse("push a red square square"), Error);    // trailing
  EXPECT_THROW(parse(""), Error);
}

TEST(RoundTrip, ParseOfGenerateIsIdentityOverGrammar) {
  const auto all = enumerate_grammar();
  EXPECT_LT(all.size(), 1000u);
  for (const Slots& s : all) {
    const Instruction ins = generate_instruction(s);
    for (const auto& tok : ins.tokens) EXPECT_TRUE(Lexicon{}.contains(tok)) << tok;
    ASSERT_EQ(parse(ins), s) << ins.text();
    ASSERT_EQ(parse(ins.text()), s) << ins.text();
  }
}

TEST(RoundTrip, CustomLexiconFile) {
  const Lexicon lex = Lexicon::parse(R"(
    # alternative surface forms
    [verbs] go shove tug grab
    [colors] rouge bleu jaune vert
    [articles] the
  )");
  Slots s{Task::kPull, std::nullopt, std::nullopt, Color::kGreen, Shape::kCircle, true};
  const Instruction ins = generate_instruction(s, lex);
  EXPECT_EQ(ins.text(), "tug the vert circle twice");
  EXPECT_EQ(parse(ins, lex), s);
}

TEST(Lexicon, MalformedFilesRejected) {
  EXPECT_THROW(Lexicon::parse("[verbs] walk push"), Error);
  EXPECT_THROW(Lexicon::parse("walk"), Error);
  EXPECT_THROW(Lexicon::parse("[nouns] a b c d"), Error);
  EXPECT_THROW(Lexicon::parse("[colors] red red yellow green"), Error);
}

TEST(Encode, WalkRedSquareLight) {
  ConceptVector c = encode_concept(walk_to(Color::kRed, Shape::kSquare), Weight::kLight);
  std::array<std::uint8_t, 18> expected{};
  expected[4] = 1;   // square
  expected[8] = 1;   // r
  expected[12] = 1;  // light
  expected[14] = 1;  // walk
  EXPECT_EQ(c.bits, expected);
}

TEST(Encode, PullGreenCircleHeavy) {
  Slots s{Task::kPull, std::nullopt, std::nullopt, Color::kGreen, Shape::kCircle, true};
  ConceptVector c = encode_concept(s, Weight::kHeavy);
  std::array<std::uint8_t, 18> expected{};
  expected[6] = 1;   // circle
  expected[11] = 1;  // g
  expected[13] = 1;  // heavy
  expected[16] = 1;  // pull
  EXPECT_EQ(c.bits, expected);
}

TEST(Encode, SixteenColorShapePairsDistinct) {
  std::set<ConceptVector> seen;
  for (Color c : kAllColors) {
    for (Shape s : kAllShapes) seen.insert(encode_concept(walk_to(c, s), Weight::kLight));
  }
  EXPECT_EQ(seen.size(), 16u);
}

TEST(Encode, ConflictsRejected) {
  Slots s{Task::kPush, std::nullopt, std::nullopt, Color::kRed, Shape::kSquare, true};
  EXPECT_THROW(encode_concept(s, Weight::kLight), Error);
  s.twice = false;
  s.weight = Weight::kHeavy;
  EXPECT_THROW(encode_concept(s, Weight::kLight), Error);
  s.weight.reset();
  s.color.reset();
  EXPECT_THROW(encode_concept(s, Weight::kLight), Error);
}

TEST(Encode, InjectiveAndValidOverGrammar) {
  std::map<ConceptVector, Slots> seen;
  for (Slots s : enumerate_grammar()) {
    // Adjectives only restate the target's weight or size, so skip them.
    if (s.size || s.weight) continue;
    for (Weight w : kAllWeights) {
      if (s.twice && w == Weight::kLight) continue;
      if (!s.twice && w == Weight::kHeavy && takes_twice(s.verb)) continue;
      ConceptVector c = encode_concept(s, w);
      EXPECT_TRUE(c.valid());
      auto [it, inserted] = seen.emplace(c, s);
      EXPECT_TRUE(inserted) << generate_instruction(s).text();
    }
  }
}

TEST(Encode, SizeBitOnlyWhenRequested) {
  Slots s = walk_to(Color::kBlue, Shape::kDiamond);
  EXPECT_EQ(encode_concept(s, Weight::kLight).bits[2], 0);
  EXPECT_EQ(encode_concept(s, Weight::kLight, 3).bits[2], 1);
  s.size = SizeTerm::kSmall;
  EXPECT_THROW(encode_concept(s, Weight::kLight, 4), Error);
}

}  // namespace
}  // namespace gcomm

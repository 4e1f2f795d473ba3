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

// Closed instruction grammar:
//
//   instruction := VERB ["to"] ARTICLE ADJ* NOUN ["twice"]
//
// "to" appears exactly when the verb is intransitive (walk). Generated
// adjectives follow size, weight, color order; the parser accepts any order
// but at most one adjective per class.

#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/lang/attributes.hpp"
#include "gcomm/lang/concept.hpp"
#include "gcomm/lang/lexicon.hpp"

namespace gcomm {

/// Parsed slot form <VERB, ADJ*, NOUN, ADV?>.
struct Slots {
  Task verb = Task::kWalk;
  std::optional<SizeTerm> size;
  std::optional<Weight> weight;
  std::optional<Color> color;
  Shape noun = Shape::kSquare;
  bool twice = false;

  friend bool operator==(const Slots&, const Slots&) = default;
};

struct Instruction {
  Slots slots;
  std::vector<std::string> tokens;

  std::string text() const {
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out.push_back(' ');
      out += t;
    }
    return out;
  }
};

inline bool is_intransitive(Task t) { return t == Task::kWalk; }
inline bool takes_twice(Task t) { return t == Task::kPush || t == Task::kPull; }

inline Instruction generate_instruction(const Slots& slots,
                                        const Lexicon& lex = Lexicon{}) {
  if (slots.twice && !takes_twice(slots.verb)) {
    throw Error(ErrorCode::kInvalidArgument,
                "'" + std::string(lex.twice) + "' needs a force verb, got " +
                    std::string(lex.verb(slots.verb)));
  }
  Instruction ins;
  ins.slots = slots;
  ins.tokens.emplace_back(lex.verb(slots.verb));
  if (is_intransitive(slots.verb)) ins.tokens.push_back(lex.preposition);
  ins.tokens.push_back(lex.article);
  if (slots.size) ins.tokens.emplace_back(lex.adjective(*slots.size));
  if (slots.weight) ins.tokens.emplace_back(lex.adjective(*slots.weight));
  if (slots.color) ins.tokens.emplace_back(lex.adjective(*slots.color));
  ins.tokens.emplace_back(lex.noun(slots.noun));
  if (slots.twice) ins.tokens.push_back(lex.twice);
  return ins;
}

namespace detail {

template <class Array>
std::optional<std::size_t> find_term(const Array& terms, std::string_view tok) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i] == tok) return i;
  }
  return std::nullopt;
}

[[noreturn]] inline void parse_fail(const std::string& why, std::size_t pos,
                                    std::string_view token) {
  throw Error(ErrorCode::kParse, why + " '" + std::string(token) + "' at token " +
                                     std::to_string(pos));
}

}  // namespace detail

inline Slots parse(const std::vector<std::string>& tokens,
                   const Lexicon& lex = Lexicon{}) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!lex.contains(tokens[i])) detail::parse_fail("token not in lexicon", i, tokens[i]);
  }
  if (tokens.empty()) throw Error(ErrorCode::kParse, "empty instruction");

  Slots s;
  std::size_t pos = 0;
  auto verb = detail::find_term(lex.verbs, tokens[pos]);
  if (!verb) detail::parse_fail("expected verb, got", pos, tokens[pos]);
  s.verb = static_cast<Task>(*verb);
  ++pos;

  if (is_intransitive(s.verb)) {
    if (pos >= tokens.size() || tokens[pos] != lex.preposition) {
      throw Error(ErrorCode::kParse, "expected '" + lex.preposition + "' after " +
                                         std::string(lex.verb(s.verb)));
    }
    ++pos;
  }
  if (pos >= tokens.size() || tokens[pos] != lex.article) {
    throw Error(ErrorCode::kParse, "expected article at token " + std::to_string(pos));
  }
  ++pos;

  bool have_noun = false;
  for (; pos < tokens.size(); ++pos) {
    const std::string& tok = tokens[pos];
    if (auto v = detail::find_term(lex.sizes, tok)) {
      if (s.size) detail::parse_fail("second size adjective", pos, tok);
      s.size = static_cast<SizeTerm>(*v);
    } else if (auto v = detail::find_term(lex.weights, tok)) {
      if (s.weight) detail::parse_fail("second weight adjective", pos, tok);
      s.weight = static_cast<Weight>(*v);
    } else if (auto v = detail::find_term(lex.colors, tok)) {
      if (s.color) detail::parse_fail("second color adjective", pos, tok);
      s.color = static_cast<Color>(*v);
    } else if (auto v = detail::find_term(lex.shapes, tok)) {
      s.noun = static_cast<Shape>(*v);
      have_noun = true;
      ++pos;
      break;
    } else {
      detail::parse_fail("unexpected", pos, tok);
    }
  }
  if (!have_noun) throw Error(ErrorCode::kParse, "missing noun");
  if (pos < tokens.size() && tokens[pos] == lex.twice) {
    if (!takes_twice(s.verb)) detail::parse_fail("adverb needs a force verb", pos, tokens[pos]);
    s.twice = true;
    ++pos;
  }
  if (pos != tokens.size()) detail::parse_fail("trailing", pos, tokens[pos]);
  return s;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline Slots parse(std::string_view text, const Lexicon& lex = Lexicon{}) {
  return parse(tokenize(text), lex);
}

inline Slots parse(const Instruction& ins, const Lexicon& lex = Lexicon{}) {
  return parse(ins.tokens, lex);
}

/// Slots to the speaker's concept bits. `weight` is the target's actual
/// weight; "twice" carries no bit of its own and must agree with heavy.
/// The size bit is written only when `size` is given.
inline ConceptVector encode_concept(const Slots& s, Weight weight,
                                    std::optional<int> size = std::nullopt) {
  if (!s.color) {
    throw Error(ErrorCode::kInvalidArgument, "concept needs a color");
  }
  if (s.twice && weight != Weight::kHeavy) {
    throw Error(ErrorCode::kInvalidArgument, "'twice' conflicts with a light target");
  }
  if (s.weight && *s.weight != weight) {
    throw Error(ErrorCode::kInvalidArgument, "weight adjective conflicts with target weight");
  }
  if (size && s.size) {
    const bool big = *size >= 3;
    if (big != (*s.size == SizeTerm::kBig)) {
      throw Error(ErrorCode::kInvalidArgument, "size adjective conflicts with target size");
    }
  }
  return ConceptVector::make(s.verb, s.noun, *s.color, weight, size);
}

}  // namespace gcomm

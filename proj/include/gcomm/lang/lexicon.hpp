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

// Surface vocabulary for instructions. A lexicon file has one section per
// term class; terms inside a section are whitespace separated and listed in
// attribute order:
//
//   # comment
//   [verbs]        walk push pull pickup
//   [shapes]       square cylinder circle diamond
//   [colors]       red blue yellow green
//   [sizes]        small big
//   [weights]      light heavy
//   [adverbs]      twice
//   [articles]     a
//   [prepositions] to

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gcomm/error.hpp"
#include "gcomm/lang/attributes.hpp"

namespace gcomm {

struct Lexicon {
  std::array<std::string, 4> verbs{"walk", "push", "pull", "pickup"};
  std::array<std::string, 4> shapes{"square", "cylinder", "circle", "diamond"};
  std::array<std::string, 4> colors{"red", "blue", "yellow", "green"};
  std::array<std::string, 2> sizes{"small", "big"};
  std::array<std::string, 2> weights{"light", "heavy"};
  std::string twice = "twice";
  std::string article = "a";
  std::string preposition = "to";

  std::string_view verb(Task t) const { return verbs[static_cast<int>(t)]; }
  std::string_view noun(Shape s) const { return shapes[static_cast<int>(s)]; }
  std::string_view adjective(Color c) const { return colors[static_cast<int>(c)]; }
  std::string_view adjective(SizeTerm s) const { return sizes[static_cast<int>(s)]; }
  std::string_view adjective(Weight w) const { return weights[static_cast<int>(w)]; }

  std::vector<std::string> all_terms() const {
    std::vector<std::string> out;
    out.insert(out.end(), verbs.begin(), verbs.end());
    out.insert(out.end(), shapes.begin(), shapes.end());
    out.insert(out.end(), colors.begin(), colors.end());
    out.insert(out.end(), sizes.begin(), sizes.end());
    out.insert(out.end(), weights.begin(), weights.end());
    out.push_back(twice);
    out.push_back(article);
    out.push_back(preposition);
    return out;
  }

  bool contains(std::string_view token) const {
    for (const auto& t : all_terms()) {
      if (t == token) return true;
    }
    return false;
  }

  static Lexicon parse(std::string_view text) {
    std::map<std::string, std::vector<std::string>> sections;
    std::string current;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream words(line);
      std::string word;
      while (words >> word) {
        if (word.front() == '[') {
          if (word.back() != ']' || word.size() < 3) {
            throw Error(ErrorCode::kParse, "malformed section header on line " +
                                               std::to_string(line_no));
          }
          current = word.substr(1, word.size() - 2);
          if (sections.contains(current)) {
            throw Error(ErrorCode::kParse, "duplicate section [" + current + "]");
          }
          sections[current];
        } else {
          if (current.empty()) {
            throw Error(ErrorCode::kParse,
                        "term outside a section on line " + std::to_string(line_no));
          }
          sections[current].push_back(word);
        }
      }
    }

    Lexicon lex;
    auto fill = [&sections](const char* key, auto& dst) {
      auto it = sections.find(key);
      if (it == sections.end()) return;
      if (it->second.size() != dst.size()) {
        throw Error(ErrorCode::kParse, std::string("section [") + key + "] needs " +
                                           std::to_string(dst.size()) + " terms");
      }
      std::copy(it->second.begin(), it->second.end(), dst.begin());
      sections.erase(it);
    };
    auto fill_one = [&sections](const char* key, std::string& dst) {
      auto it = sections.find(key);
      if (it == sections.end()) return;
      if (it->second.size() != 1) {
        throw Error(ErrorCode::kParse, std::string("section [") + key + "] needs 1 term");
      }
      dst = it->second.front();
      sections.erase(it);
    };
    fill("verbs", lex.verbs);
    fill("shapes", lex.shapes);
    fill("colors", lex.colors);
    fill("sizes", lex.sizes);
    fill("weights", lex.weights);
    fill_one("adverbs", lex.twice);
    fill_one("articles", lex.article);
    fill_one("prepositions", lex.preposition);
    if (!sections.empty()) {
      throw Error(ErrorCode::kParse, "unknown section [" + sections.begin()->first + "]");
    }
    auto terms = lex.all_terms();
    std::sort(terms.begin(), terms.end());
    if (auto dup = std::adjacent_find(terms.begin(), terms.end()); dup != terms.end()) {
      throw Error(ErrorCode::kParse, "term listed twice: " + *dup);
    }
    return lex;
  }

  static Lexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open lexicon " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }
};

}  // namespace gcomm

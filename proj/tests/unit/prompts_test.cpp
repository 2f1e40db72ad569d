// Copyright 2026 The csexpand Authors.
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

#include <algorithm>
#include <random>
#include <set>

#include "csx/error.hpp"
#include "csx/prompts.hpp"
#include "csx/text.hpp"
#include "test_support.hpp"

namespace {

using csx::ErrorKind;
using csx::RelationId;
namespace ct = csx::testing;

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

const csx::Dialogue& two_turns() {
  static const auto d =
      ct::make_dialogue("d", {"Well, what's the matter with you?", "I ache all over."});
  return d;
}

TEST(ExpansionPrompt, ContainsDefinitionsContextAndInstruction) {
  const auto& cat = csx::catalog_default();
  const auto b = csx::binding_for(two_turns(), 1);
  EXPECT_EQ(b.support_speaker, "User 2");
  EXPECT_EQ(b.speaker, "User 1");
  const auto t = csx::default_templates();
  const auto p = csx::build_expansion_prompt(two_turns().turns, cat, b, t);

  const auto xattr = csx::render_definition(cat.def(RelationId::xAttr), b, std::nullopt);
  EXPECT_NE(p.text.find("1. " + xattr), std::string::npos);
  // Numbered 1..12 in canonical order.
  std::size_t last = 0;
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const auto line = std::to_string(i + 1) + ". " + csx::render_definition(cat[i], b, std::nullopt);
    const auto at = p.text.find(line);
    ASSERT_NE(at, std::string::npos) << line;
    EXPECT_GT(at, last);
    last = at;
  }
  EXPECT_NE(p.text.find("User 1: Well, what's the matter with you?"), std::string::npos);
  EXPECT_NE(p.text.find("User 2: I ache all over."), std::string::npos);
  EXPECT_LT(p.text.find("User 1: Well"), p.text.find("User 2: I ache"));
  EXPECT_NE(p.text.find("Return exactly 12 responses"), std::string::npos);
  EXPECT_EQ(p.text.find('{'), std::string::npos);
  EXPECT_EQ(p.char_count, csx::utf8_length(p.text));
}

TEST(ExpansionPrompt, OneShotExemplarsAppearOnce) {
  const auto& cat = csx::catalog_default();
  std::map<RelationId, std::string> ex;
  for (const auto& def : cat) {
    ex[def.id] = "E.g., exemplar for " + std::string(csx::relation_name(def.id)) + ".";
  }
  const auto b = csx::binding_for(two_turns(), 1);
  const auto p = csx::build_expansion_prompt(two_turns().turns, cat, b,
                                             csx::default_templates(), &ex);
  for (const auto& [_, s] : ex) EXPECT_EQ(count_of(p.text, s), 1u) << s;
}

TEST(ExpansionPrompt, PureAndRejectsEmptyContext) {
  const auto& cat = csx::catalog_default();
  const auto b = csx::binding_for(two_turns(), 1);
  const auto t = csx::default_templates();
  EXPECT_EQ(csx::build_expansion_prompt(two_turns().turns, cat, b, t).text,
            csx::build_expansion_prompt(two_turns().turns, cat, b, t).text);
  try {
    csx::build_expansion_prompt({}, cat, b, t);
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyContext);
  }
}

TEST(ExpansionPrompt, ReaskNamesMissingIndices) {
  const auto& cat = csx::catalog_default();
  const auto b = csx::binding_for(two_turns(), 1);
  const auto t = csx::default_templates();
  const auto p = csx::build_expansion_prompt(two_turns().turns, cat, b, t);
  const std::vector<std::size_t> missing = {5, 12};
  const auto r = csx::build_reask_prompt(p, missing, cat, b, t);
  EXPECT_EQ(r.text.rfind(p.text, 0), 0u);
  EXPECT_NE(r.text.find("5, 12"), std::string::npos) << r.text.substr(p.text.size());
}

TEST(EvaluationPrompt, Structure) {
  const auto& cat = csx::catalog_default();
  const auto b = csx::binding_for(two_turns(), 1);
  auto t = csx::default_templates();
  const std::vector<csx::Turn> ctx(two_turns().turns.begin(), two_turns().turns.begin() + 1);
  const auto p = csx::build_evaluation_prompt(ctx, "I ache all over", cat, b, t);
  for (std::size_t i = 0; i < cat.size(); ++i) {
    EXPECT_NE(p.text.find("[" + std::to_string(i + 1) + "] " +
                          csx::render_definition(cat[i], b, std::nullopt)),
              std::string::npos);
  }
  EXPECT_NE(p.text.find("I ache all over"), std::string::npos);
  EXPECT_NE(p.text.find("3 > 7 > 1 > 12"), std::string::npos);
  EXPECT_NE(p.text.find("User 1:"), std::string::npos);
  // Relation names never leak into the ranking prompt.
  for (const auto& def : cat) {
    EXPECT_EQ(p.text.find(std::string(csx::relation_name(def.id))), std::string::npos);
  }

  t.evaluation_include_context = false;
  const auto q = csx::build_evaluation_prompt(ctx, "I ache all over", cat, b, t);
  EXPECT_EQ(q.text.find("User 1:"), std::string::npos);
  EXPECT_EQ(q.text.find("User 2:"), std::string::npos);

  try {
    csx::build_evaluation_prompt(ctx, "  ", cat, b, t);
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyCandidate);
  }
}

TEST(Templates, JsonRoundTripAndDigest) {
  const auto t = csx::default_templates();
  const auto back = csx::PromptTemplateSet::from_json(t.to_json());
  EXPECT_EQ(back.to_json(), t.to_json());
  EXPECT_EQ(back.sha256(), t.sha256());
  EXPECT_EQ(t.sha256().size(), 64u);
  auto changed = t;
  changed.evaluation_include_context = false;
  EXPECT_NE(changed.sha256(), t.sha256());
  // Partial files keep defaults for what they omit.
  const auto partial = csx::PromptTemplateSet::from_json({{"version", "2"}});
  EXPECT_EQ(partial.expansion_preamble, t.expansion_preamble);
  EXPECT_THROW(csx::PromptTemplateSet::from_json({{"expansion_layout", {"Nope"}}}),
               csx::Error);
}

TEST(ExpansionReply, Examples) {
  auto r = csx::parse_expansion_reply("1. Alpha\n2. Beta", 2);
  ASSERT_EQ(r.responses.size(), 2u);
  EXPECT_EQ(r.responses[0], (csx::ExpansionItem{1, "Alpha"}));
  EXPECT_EQ(r.responses[1], (csx::ExpansionItem{2, "Beta"}));
  EXPECT_TRUE(r.gaps.empty());

  r = csx::parse_expansion_reply("Sure! Here you go:\n1) xAttr: Alpha\n3) Gamma", 3);
  ASSERT_EQ(r.responses.size(), 2u);
  EXPECT_EQ(r.responses[0], (csx::ExpansionItem{1, "Alpha"}));
  EXPECT_EQ(r.responses[1], (csx::ExpansionItem{3, "Gamma"}));
  EXPECT_EQ(r.gaps, std::vector<std::size_t>{2});

  EXPECT_THROW(csx::parse_expansion_reply("no list at all", 12), csx::Error);
}

csx::RelationCatalog three() {
  const auto& d = csx::catalog_default();
  return csx::RelationCatalog({d.def(RelationId::xAttr), d.def(RelationId::xWant),
                               d.def(RelationId::xNeed)});
}

TEST(RankingReply, Examples) {
  const auto c3 = three();
  EXPECT_EQ(csx::parse_ranking_reply("2 > 1 > 3", c3).ranking,
            (std::vector<RelationId>{RelationId::xWant, RelationId::xAttr, RelationId::xNeed}));
  EXPECT_EQ(csx::parse_ranking_reply("IsAfter > xAttr, then maybe oWant",
                                     csx::catalog_default())
                .ranking,
            (std::vector<RelationId>{RelationId::IsAfter, RelationId::xAttr, RelationId::oWant}));
  try {
    csx::parse_ranking_reply("I cannot rank these.", csx::catalog_default());
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnparseableReply);
  }
}

// Formatting any permutation (or prefix of one) and reparsing is the identity.
TEST(RankingReply, FormatRoundTripProperty) {
  const auto& cat = csx::catalog_default();
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 500; ++trial) {
    auto ids = cat.ids();
    std::shuffle(ids.begin(), ids.end(), gen);
    ids.resize(1 + gen() % ids.size());
    const auto text = csx::format_ranking(ids, cat);
    EXPECT_EQ(csx::parse_ranking_reply(text, cat).ranking, ids) << text;
  }
}

// Arbitrary digit soup never yields duplicates or foreign ids.
TEST(RankingReply, NoDuplicatesOnNoise) {
  const auto c3 = three();
  std::mt19937_64 gen(7);
  const std::string alphabet = "0123456789 >,[]\n-xAttrWant";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s;
    const auto len = gen() % 40;
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[gen() % alphabet.size()]);
    try {
      const auto r = csx::parse_ranking_reply(s, c3);
      std::set<RelationId> seen(r.ranking.begin(), r.ranking.end());
      EXPECT_EQ(seen.size(), r.ranking.size()) << s;
      for (auto id : r.ranking) EXPECT_TRUE(c3.contains(id)) << s;
      EXPECT_LE(r.ranking.size(), c3.size());
    } catch (const csx::Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kUnparseableReply) << s;
    }
  }
}

}  // namespace

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

#include <set>

#include "csx/digest.hpp"
#include "csx/error.hpp"
#include "csx/expand.hpp"
#include "csx/mock_backends.hpp"
#include "csx/text.hpp"
#include "test_support.hpp"

namespace {

using csx::ErrorKind;
using csx::RelationId;
namespace ct = csx::testing;

const std::string kLetters = "ABCDEFGHIJKL";

std::string numbered(std::size_t from, std::size_t to) {
  std::string s;
  for (std::size_t i = from; i <= to; ++i) {
    s += std::to_string(i) + ". " + kLetters[i - 1] + "\n";
  }
  return s;
}

csx::Dialogue five_turns(const std::string& id = "d1") {
  return ct::make_dialogue(id, {"Hi there.", "Hello, how are you?", "Tired, long day.",
                                "What happened?", "My train was late."});
}

csx::ExpansionJob job_for(std::vector<csx::Dialogue> dialogues) {
  csx::ExpansionJob job;
  job.dialogues = std::move(dialogues);
  job.run_id = "r1";
  job.policy.max_in_flight = 2;
  return job;
}

TEST(ExpandTurn, IndexMapsToCanonicalRelation) {
  auto job = job_for({five_turns()});
  csx::ScriptedBackend full([](const csx::ChatRequest&) { return numbered(1, 12); });
  const auto te = csx::expand_turn(job.dialogues[0], 2, job, full);
  ASSERT_EQ(te.records.size(), 12u);
  EXPECT_TRUE(te.gaps.empty());
  EXPECT_EQ(te.records[10].relation, RelationId::IsAfter);
  EXPECT_EQ(te.records[10].text, "K");
  for (std::size_t i = 0; i < 12; ++i) {
    const auto& r = te.records[i];
    EXPECT_EQ(r.relation, csx::catalog_default()[i].id);
    EXPECT_EQ(r.turn_index, 2u);
    EXPECT_EQ(r.original_text, "Tired, long day.");
    EXPECT_EQ(r.original_char_len, csx::utf8_length("Tired, long day."));
    EXPECT_EQ(r.char_len, 1u);
    EXPECT_EQ(r.run_id, "r1");
    EXPECT_EQ(r.generator_model, job.generator_model);
    EXPECT_EQ(r.template_sha, job.templates.sha256());
    EXPECT_FALSE(r.reasked);
  }
  EXPECT_EQ(full.provider_calls(), 1u);
}

TEST(ExpandTurn, GapWithoutReask) {
  auto job = job_for({five_turns()});
  job.reask_gaps = false;
  csx::ScriptedBackend eleven([](const csx::ChatRequest&) { return numbered(1, 11); });
  const auto te = csx::expand_turn(job.dialogues[0], 1, job, eleven);
  EXPECT_EQ(te.records.size(), 11u);
  EXPECT_EQ(te.gaps, std::vector<RelationId>{RelationId::HasSubEvent});
  EXPECT_EQ(eleven.provider_calls(), 1u);
}

TEST(ExpandTurn, ReaskFillsGapOnce) {
  auto job = job_for({five_turns()});
  std::vector<std::string> tags;
  csx::ScriptedBackend backend([&](const csx::ChatRequest& r) {
    tags.push_back(r.request_tag);
    if (r.request_tag.ends_with(":reask")) return std::string("12. L");
    return numbered(1, 11);
  });
  const auto te = csx::expand_turn(job.dialogues[0], 1, job, backend);
  ASSERT_EQ(te.records.size(), 12u);
  EXPECT_TRUE(te.gaps.empty());
  EXPECT_TRUE(te.reasked);
  EXPECT_TRUE(te.records[11].reasked);
  EXPECT_FALSE(te.records[0].reasked);
  ASSERT_EQ(tags.size(), 2u);
  EXPECT_EQ(tags[0], "expand:r1:d1:1");

  // A re-ask that still misses leaves the gap; there is no second re-ask.
  csx::ScriptedBackend stubborn([](const csx::ChatRequest&) { return numbered(1, 11); });
  const auto te2 = csx::expand_turn(job.dialogues[0], 1, job, stubborn);
  EXPECT_EQ(te2.gaps, std::vector<RelationId>{RelationId::HasSubEvent});
  EXPECT_EQ(stubborn.provider_calls(), 2u);
}

TEST(ExpandTurn, UnparseableAndBadPosition) {
  auto job = job_for({five_turns()});
  csx::ScriptedBackend junk([](const csx::ChatRequest&) { return std::string("no list"); });
  try {
    csx::expand_turn(job.dialogues[0], 1, job, junk);
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnparseableReply);
  }
  EXPECT_THROW(csx::expansion_context(job.dialogues[0], 0, 0), csx::Error);
  EXPECT_THROW(csx::expansion_context(job.dialogues[0], 5, 0), csx::Error);
}

TEST(ExpandTurn, ContextWindow) {
  const auto d = five_turns();
  EXPECT_EQ(csx::expansion_context(d, 4, 0).size(), 4u);
  const auto w = csx::expansion_context(d, 4, 2);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].index, 2u);
  EXPECT_EQ(w[1].index, 3u);
  EXPECT_EQ(csx::expansion_context(d, 1, 5).size(), 1u);
}

TEST(ExpandTurn, PerRelationMode) {
  auto job = job_for({five_turns()});
  job.per_relation = true;
  std::set<std::string> tags;
  csx::ScriptedBackend one([&](const csx::ChatRequest& r) {
    EXPECT_EQ(csx::count_numbered_definitions(r.user_text), 1u);
    tags.insert(r.request_tag);
    return std::string("1. reply for ") + r.request_tag;
  });
  const auto te = csx::expand_turn(job.dialogues[0], 3, job, one);
  ASSERT_EQ(te.records.size(), 12u);
  EXPECT_EQ(one.provider_calls(), 12u);
  EXPECT_EQ(tags.size(), 12u);
  for (const auto& r : te.records) {
    EXPECT_TRUE(r.text.ends_with(":" + std::string(csx::relation_name(r.relation)))) << r.text;
  }
}

TEST(Exemplars, FallbackAndPositionSpecific) {
  const auto table = csx::exemplars_from_jsonl(
      R"({"relation":"xAttr","text":"generic"})"
      "\n"
      R"({"dialogue_id":"d1","turn_index":2,"relation":"xAttr","text":"specific"})"
      "\n");
  EXPECT_EQ(table.lookup("d1", 2, RelationId::xAttr), "specific");
  EXPECT_EQ(table.lookup("d1", 3, RelationId::xAttr), "generic");
  EXPECT_EQ(table.lookup("d9", 1, RelationId::xWant), std::nullopt);

  try {
    csx::exemplars_from_jsonl(R"({"relation":"xFoo","text":"x"})");
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnknownRelation);
  }
  try {
    csx::exemplars_from_jsonl("{not json");
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedRecord);
  }
}

TEST(Exemplars, OneShotNeedsCoverage) {
  auto job = job_for({five_turns()});
  job.mode = csx::ExpansionMode::OneShot;
  csx::ExemplarTable table;
  for (const auto& def : job.catalog) {
    if (def.id != RelationId::oReact) table.add(def.id, "E.g., " + std::string(csx::relation_name(def.id)));
  }
  job.exemplars = table;
  try {
    job.validate();
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingExemplar);
  }
  // A specific entry for every position is enough even without a fallback.
  for (std::size_t pos = 1; pos < 5; ++pos) {
    table.add("d1", pos, RelationId::oReact, "E.g., at " + std::to_string(pos));
  }
  job.exemplars = table;
  EXPECT_NO_THROW(job.validate());
  const auto p = csx::expansion_prompt_for(job.dialogues[0], 3, job);
  EXPECT_NE(p.text.find("E.g., at 3"), std::string::npos);
  EXPECT_EQ(p.text.find("E.g., at 2"), std::string::npos);
  EXPECT_NE(p.text.find("E.g., xAttr"), std::string::npos);

  job.mode = csx::ExpansionMode::ZeroShot;
  EXPECT_EQ(csx::expansion_prompt_for(job.dialogues[0], 3, job).text.find("E.g.,"),
            std::string::npos);
}

TEST(Modes, Names) {
  EXPECT_EQ(csx::parse_mode("zero-shot"), csx::ExpansionMode::ZeroShot);
  EXPECT_EQ(csx::parse_mode("one-shot"), csx::ExpansionMode::OneShot);
  EXPECT_EQ(csx::mode_name(csx::ExpansionMode::OneShot), "one-shot");
  EXPECT_THROW(csx::parse_mode("few-shot"), csx::Error);
}

TEST(ExpandCorpus, CountsAndProvenance) {
  auto job = job_for({five_turns("a"), five_turns("b")});
  csx::SyntheticBackend synth(1);
  ct::TempDir dir;
  const auto s = csx::expand_corpus(job, synth, dir / "x.jsonl");
  EXPECT_EQ(s.positions_total, 8u);
  EXPECT_EQ(s.records_total, 96u);
  EXPECT_TRUE(s.failures.empty());
  EXPECT_TRUE(s.gaps.empty());
  const auto set = csx::load_expansions(dir / "x.jsonl");
  ASSERT_EQ(set.size(), 96u);
  std::set<std::tuple<std::string, std::size_t, RelationId>> keys;
  std::size_t sum_len = 0, sum_orig = 0;
  for (const auto& r : set) {
    keys.emplace(r.dialogue_id, r.turn_index, r.relation);
    const auto& d = csx::find_dialogue(job.dialogues, r.dialogue_id);
    EXPECT_EQ(r.prompt_sha, csx::sha256_hex(csx::expansion_prompt_for(d, r.turn_index, job).text));
    EXPECT_FALSE(r.text.empty());
    sum_len += r.char_len;
    sum_orig += r.original_char_len;
  }
  EXPECT_EQ(keys.size(), 96u);
  EXPECT_DOUBLE_EQ(s.length_ratio_of_sums, static_cast<double>(sum_len) / sum_orig);
  auto sorted = set;
  csx::sort_expansions(sorted);
  EXPECT_EQ(sorted, set);
  EXPECT_EQ(s.usage.calls, 8u);
  EXPECT_EQ(s.to_json()["records_total"], 96);
}

// Each item carries its relation label, so a mix-up in the index mapping
// anywhere in the pipeline shows up as a mismatch.
TEST(ExpandCorpus, LabeledGeneratorPreservesMapping) {
  auto job = job_for(ct::synthetic_corpus({"a", "b"}, 5, 21));
  csx::SyntheticBackend labeled(2, csx::catalog_default());
  ct::TempDir dir;
  const auto s = csx::expand_corpus(job, labeled, dir / "x.jsonl");
  EXPECT_EQ(s.records_total, csx::count_expandable_turns(job.dialogues) * 12);
  for (const auto& r : csx::load_expansions(dir / "x.jsonl")) {
    EXPECT_TRUE(r.text.ends_with("(label=" + std::string(csx::relation_name(r.relation)) + ")"))
        << r.text;
  }
}

TEST(ExpandCorpus, ResumeIsIdempotent) {
  auto job = job_for({five_turns("a"), five_turns("b")});
  ct::TempDir dir;
  csx::SyntheticBackend once(5);
  csx::expand_corpus(job, once, dir / "once.jsonl");
  const auto reference = csx::read_file(dir / "once.jsonl");

  csx::SyntheticBackend again(5);
  const auto s = csx::expand_corpus(job, again, dir / "once.jsonl");
  EXPECT_EQ(again.provider_calls(), 0u);
  EXPECT_EQ(s.positions_resumed, 8u);
  EXPECT_EQ(s.records_new, 0u);
  EXPECT_EQ(csx::read_file(dir / "once.jsonl"), reference);

  // Crash simulation: keep the first 30 lines plus half of the 31st.
  const auto lines = csx::split_lines(reference);
  std::string partial;
  for (std::size_t i = 0; i < 30; ++i) partial += std::string(lines[i]) + "\n";
  partial += std::string(lines[30].substr(0, lines[30].size() / 2));
  csx::write_file_atomic(dir / "torn.jsonl", partial);
  csx::SyntheticBackend resumed(5);
  const auto s2 = csx::expand_corpus(job, resumed, dir / "torn.jsonl");
  EXPECT_EQ(s2.positions_resumed, 2u);  // the third block was cut short
  EXPECT_EQ(resumed.provider_calls(), 6u);
  EXPECT_EQ(csx::read_file(dir / "torn.jsonl"), reference);
}

TEST(ExpandCorpus, GappedPositionIsRetriedOnResume) {
  auto job = job_for({five_turns("a")});
  job.reask_gaps = false;
  ct::TempDir dir;
  csx::ScriptedBackend short_at_2([](const csx::ChatRequest& r) {
    return numbered(1, r.request_tag == "expand:r1:a:2" ? 11 : 12);
  });
  const auto s = csx::expand_corpus(job, short_at_2, dir / "x.jsonl");
  EXPECT_EQ(s.records_total, 47u);
  ASSERT_EQ(s.gaps.size(), 1u);
  EXPECT_EQ(std::get<2>(s.gaps[0]), RelationId::HasSubEvent);

  csx::ScriptedBackend full([](const csx::ChatRequest&) { return numbered(1, 12); });
  const auto s2 = csx::expand_corpus(job, full, dir / "x.jsonl");
  EXPECT_EQ(full.provider_calls(), 1u);
  EXPECT_EQ(s2.positions_resumed, 3u);
  EXPECT_EQ(s2.records_total, 48u);
}

TEST(ExpandCorpus, FailuresAreIsolated) {
  auto job = job_for({five_turns("a"), five_turns("b")});
  csx::ScriptedBackend flaky([](const csx::ChatRequest& r) -> std::string {
    if (r.request_tag == "expand:r1:b:2") {
      throw csx::Error(ErrorKind::kRateLimited, "still limited");
    }
    return numbered(1, 12);
  });
  ct::TempDir dir;
  const auto s = csx::expand_corpus(job, flaky, dir / "x.jsonl");
  ASSERT_EQ(s.failures.size(), 1u);
  EXPECT_EQ(s.failures[0].dialogue_id, "b");
  EXPECT_EQ(s.failures[0].turn_index, 2u);
  EXPECT_EQ(s.failures[0].error, "RateLimited");
  EXPECT_EQ(s.failures[0].message, "still limited");
  EXPECT_EQ(s.records_total, 84u);

  // Resuming retries only the failed position.
  csx::ScriptedBackend fixed([](const csx::ChatRequest&) { return numbered(1, 12); });
  const auto s2 = csx::expand_corpus(job, fixed, dir / "x.jsonl");
  EXPECT_EQ(fixed.provider_calls(), 1u);
  EXPECT_EQ(s2.records_total, 96u);
}

TEST(Records, JsonRoundTrip) {
  auto job = job_for({five_turns()});
  csx::ScriptedBackend full([](const csx::ChatRequest&) { return numbered(1, 12); });
  const auto te = csx::expand_turn(job.dialogues[0], 2, job, full);
  for (const auto& r : te.records) {
    EXPECT_EQ(csx::ExpansionRecord::from_json(r.to_json()), r);
  }
  ct::TempDir dir;
  csx::write_file_atomic(dir / "r.jsonl", csx::to_jsonl(te.records));
  EXPECT_EQ(csx::load_expansions(dir / "r.jsonl"), te.records);
}

}  // namespace

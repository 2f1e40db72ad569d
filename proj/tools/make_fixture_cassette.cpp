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

// Regenerates the replay cassette for the bundled pipeline fixture.
//
//   make_fixture_cassette tests/fixtures/pipeline/config.json \
//       tests/fixtures/pipeline/cassette.jsonl
//
// Generator replies are synthetic except for a few turns of the first
// dialogue, which carry hand-written responses. Judge replies are seeded
// permutations with some partial, chatty, name-based and refused answers
// mixed in, so the replayed run exercises the parser and completion policy.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "csx/cassette.hpp"
#include "csx/config.hpp"
#include "csx/evaluate.hpp"
#include "csx/expand.hpp"
#include "csx/mock_backends.hpp"
#include "csx/rng.hpp"
#include "csx/text.hpp"

namespace {

using csx::RelationId;

// Keyed by (dialogue, turn); responses in the words of a larger model.
const std::map<std::pair<std::string, std::size_t>, std::map<RelationId, std::string>>
    kHandWritten = {
        {{"dd-0001", 1},
         {{RelationId::IsAfter,
           "I just had a really stressful meeting earlier, and since then, I haven't been able "
           "to shake off the negative feelings."},
          {RelationId::xAttr,
           "I've been dealing with some personal issues lately, and it's been really getting "
           "me down. I could use someone to talk to."},
          {RelationId::oReact,
           "I'm just feeling really down lately, I think it's the stress catching up to me."}}},
        {{"dd-0001", 2},
         {{RelationId::HasSubEvent,
           "Have you experienced any other symptoms along with your sore throat and chest "
           "pain, like fever or cough?"},
          {RelationId::xNeed, "Have you tried taking any medicine or drinking warm tea with honey?"},
          {RelationId::oEffect,
           "That doesn't sound good. You should take it easy and not let it get worse."}}},
};

struct Tag {
  std::string role, dialogue, relation;
  std::size_t turn = 0;
  bool reask = false;
};

Tag parse_tag(const std::string& tag) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = tag.find(':', start);
    parts.push_back(tag.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  Tag t;
  t.role = parts.at(0);
  t.dialogue = parts.at(2);
  t.turn = std::stoul(parts.at(3));
  if (parts.size() > 4) {
    if (parts[4] == "reask") {
      t.reask = true;
    } else {
      t.relation = parts[4];
    }
  }
  return t;
}

std::string generator_reply(const csx::ChatRequest& req, const Tag& t,
                            csx::SyntheticBackend& synth) {
  const auto base = synth.complete(req).text;
  const auto lines = csx::split_lines(base);
  auto hw = kHandWritten.find({t.dialogue, t.turn});
  std::string out;
  if (t.dialogue == "dd-0002" && t.turn == 1 && !t.reask) {
    out = "Sure! Here are the twelve responses:\n\n";
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto index = i + 1;
    // One gap in the first reply, filled by the follow-up request.
    if (t.dialogue == "dd-0003" && t.turn == 2 && !t.reask && index == 5) continue;
    std::string line(lines[i]);
    if (hw != kHandWritten.end() && index <= csx::kRelationCount) {
      auto it = hw->second.find(csx::catalog_default()[i].id);
      if (it != hw->second.end()) line = std::to_string(index) + ". " + it->second;
    }
    out += line + "\n";
  }
  return out;
}

std::string judge_reply(const csx::ChatRequest& req, const Tag& t,
                        csx::SyntheticBackend& synth) {
  if (t.dialogue == "dd-0004" && t.turn == 2 && t.relation == "xWant") {
    return "I'm sorry, but I cannot decide which definition fits best.";
  }
  const auto perm = synth.complete(req).text;  // "a > b > ..."
  switch (csx::fnv1a(req.request_tag) % 8) {
    case 0: {  // partial ranking, first three only
      std::size_t cut = 0;
      for (int n = 0; n < 3 && cut != std::string::npos; ++n) {
        cut = perm.find(" > ", n == 0 ? 0 : cut + 3);
      }
      return perm.substr(0, cut);
    }
    case 1:
      return "Sure. From best to worst fit, my ranking is: " + perm;
    case 2: {  // names instead of numbers
      std::string out;
      std::size_t start = 0;
      while (start < perm.size()) {
        auto end = perm.find(" > ", start);
        const auto n = std::stoul(perm.substr(start, end - start));
        if (!out.empty()) out += " > ";
        out += csx::relation_name(csx::catalog_default()[n - 1].id);
        if (end == std::string::npos) break;
        start = end + 3;
      }
      return out;
    }
    default:
      return perm;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_fixture_cassette <config.json> <cassette.jsonl>\n";
    return 2;
  }
  try {
    auto cfg = csx::RunConfig::load(argv[1]);
    cfg.policy.max_in_flight = 1;  // stable cassette line order
    std::vector<csx::Dialogue> corpus;
    for (const auto& in : cfg.corpus) {
      auto part = csx::load_corpus(cfg.resolve(in.path));
      corpus.insert(corpus.end(), part.begin(), part.end());
    }
    auto plan = cfg.sample_plan();
    if (plan.sources.empty()) {
      for (const auto& d : corpus) plan.sources.push_back(d.source);
    }
    const auto dialogues = csx::sample(corpus, plan);

    csx::SyntheticBackend synth(cfg.seed);
    csx::ScriptedBackend scripted([&](const csx::ChatRequest& req) {
      const auto t = parse_tag(req.request_tag);
      return t.role == "judge" ? judge_reply(req, t, synth) : generator_reply(req, t, synth);
    });

    const std::filesystem::path out = argv[2];
    std::filesystem::remove(out);
    csx::CassetteBackend recorder(out, csx::CassetteMode::kRecord, &scripted);
    recorder.set_recorded_at("2026-01-01T00:00:00Z");

    const auto scratch = std::filesystem::temp_directory_path() / "csx-fixture-cassette";
    std::filesystem::remove_all(scratch);
    std::filesystem::create_directories(scratch);
    auto job = csx::make_expansion_job(cfg, dialogues);
    const auto es = csx::expand_corpus(job, recorder, scratch / "expansions.jsonl");
    const auto expansions = csx::load_expansions(scratch / "expansions.jsonl");
    const auto js = csx::judge_set(expansions, dialogues, csx::make_judge_job(cfg), recorder,
                                   scratch / "rankings.jsonl");
    std::filesystem::remove_all(scratch);
    std::cout << "recorded " << recorder.cassette().size() << " exchanges ("
              << es.records_total << " expansions, " << js.judged << " judgments, " << js.failed
              << " failed)\n";
  } catch (const csx::Error& e) {
    std::cerr << e.what() << "\n";
    return csx::exit_code(e.kind());
  }
  return 0;
}

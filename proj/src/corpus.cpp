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

#include "csx/corpus.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "adapters_internal.hpp"
#include "csx/error.hpp"
#include "csx/rng.hpp"
#include "csx/text.hpp"

namespace csx {

namespace {

constexpr std::array<std::pair<Source::Kind, std::string_view>, 5> kKnownSources = {{
    {Source::Kind::DailyDialog, "DailyDialog"},
    {Source::Kind::TopicalChat, "TopicalChat"},
    {Source::Kind::EmpatheticDialogues, "EmpatheticDialogues"},
    {Source::Kind::PersonaChat, "PersonaChat"},
    {Source::Kind::WizardOfWikipedia, "WizardOfWikipedia"},
}};

std::string compact_lower(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(c);
  }
  return to_lower_ascii(out);
}

}  // namespace

std::string_view speaker_display(Speaker s) {
  return s == Speaker::User1 ? "User 1" : "User 2";
}

Speaker other(Speaker s) {
  return s == Speaker::User1 ? Speaker::User2 : Speaker::User1;
}

Source Source::other(std::string name) { return parse(name); }

Source Source::parse(std::string_view name) {
  // "dailydialog", "Daily Dialog" and "daily_dialog" all name the same dataset.
  const auto key = compact_lower(name);
  for (const auto& [kind, known] : kKnownSources) {
    if (compact_lower(known) == key) return Source(kind);
  }
  Source s;
  s.kind_ = Kind::Other;
  s.other_name_ = std::string(name);
  return s;
}

std::string Source::name() const {
  for (const auto& [kind, known] : kKnownSources) {
    if (kind == kind_) return std::string(known);
  }
  return other_name_;
}

nlohmann::json SkipReport::to_json() const {
  nlohmann::json reasons_json = nlohmann::json::object();
  for (const auto& [reason, n] : reasons) reasons_json[reason] = n;
  return {{"skipped", skipped}, {"reasons", reasons_json}};
}

namespace detail {

Validated validate(RawDialogue raw, bool fixed_labels) {
  if (raw.turns.size() < 2) return std::string("too_few_turns");
  Dialogue d;
  d.id = std::move(raw.id);
  d.source = std::move(raw.source);
  std::vector<std::string> seen_labels;
  for (std::size_t i = 0; i < raw.turns.size(); ++i) {
    auto& [label, text] = raw.turns[i];
    const auto trimmed = trim(text);
    if (trimmed.empty()) return std::string("empty_turn");
    Speaker speaker;
    if (fixed_labels) {
      const auto key = compact_lower(label);
      if (key == "user1") {
        speaker = Speaker::User1;
      } else if (key == "user2") {
        speaker = Speaker::User2;
      } else {
        return std::string("unknown_speaker");
      }
    } else {
      auto it = std::find(seen_labels.begin(), seen_labels.end(), label);
      if (it == seen_labels.end()) {
        if (seen_labels.size() == 2) return std::string("more_than_two_speakers");
        seen_labels.push_back(label);
        it = seen_labels.end() - 1;
      }
      speaker = it == seen_labels.begin() ? Speaker::User1 : Speaker::User2;
    }
    if (i > 0 && d.turns.back().speaker == speaker) {
      return std::string("speakers_not_alternating");
    }
    d.turns.push_back(Turn{i, speaker, std::string(trimmed)});
  }
  return d;
}

void Collector::add(RawDialogue raw, bool fixed_labels) {
  auto v = validate(std::move(raw), fixed_labels);
  if (auto* reason = std::get_if<std::string>(&v)) {
    out_.skips.add(*reason);
    return;
  }
  auto& d = std::get<Dialogue>(v);
  if (!ids_.insert(d.id).second) {
    out_.skips.add("duplicate_id");
    return;
  }
  out_.dialogues.push_back(std::move(d));
}

IngestResult ingest_canonical(std::string_view contents, const Source& source,
                              const IngestOptions& options) {
  IngestResult result;
  Collector collector(result);
  std::size_t line_no = 0;
  for (auto line : split_lines(contents)) {
    ++line_no;
    if (trim(line).empty()) continue;
    RawDialogue raw;
    std::string problem;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
          !j.contains("turns") || !j["turns"].is_array()) {
        problem = "expected an object with string \"id\" and array \"turns\"";
      } else {
        raw.id = j["id"].get<std::string>();
        raw.source = source;
        if (j.contains("source")) {
          if (!j["source"].is_string()) {
            problem = "\"source\" must be a string";
          } else {
            raw.source = Source::parse(j["source"].get<std::string>());
          }
        }
        for (const auto& t : j["turns"]) {
          if (!t.is_object() || !t.contains("speaker") || !t.contains("text") ||
              !t["speaker"].is_string() || !t["text"].is_string()) {
            problem = "turns need string \"speaker\" and \"text\"";
            break;
          }
          raw.turns.emplace_back(t["speaker"].get<std::string>(),
                                 t["text"].get<std::string>());
        }
      }
    } catch (const nlohmann::json::exception& e) {
      problem = e.what();
    }
    if (!problem.empty()) {
      if (options.strict) {
        throw Error(ErrorKind::kMalformedRecord,
                    "line " + std::to_string(line_no) + ": " + problem);
      }
      collector.malformed();
      continue;
    }
    collector.add(std::move(raw), /*fixed_labels=*/true);
  }
  return result;
}

}  // namespace detail

std::vector<std::string_view> adapter_names() {
  return {"canonical",   "dailydialog", "topicalchat",
          "empatheticdialogues", "personachat", "wizardofwikipedia"};
}

IngestResult ingest_text(std::string_view contents, const Source& source,
                         std::string_view adapter, const IngestOptions& options) {
  const auto key = compact_lower(adapter);
  if (key == "canonical" || key == "jsonl") {
    return detail::ingest_canonical(contents, source, options);
  }
  if (key == "dailydialog") return detail::ingest_dailydialog(contents, source, options);
  if (key == "topicalchat") return detail::ingest_topicalchat(contents, source, options);
  if (key == "empatheticdialogues" || key == "empathetic") {
    return detail::ingest_empathetic(contents, source, options);
  }
  if (key == "personachat") return detail::ingest_personachat(contents, source, options);
  if (key == "wizardofwikipedia" || key == "wow") {
    return detail::ingest_wizard(contents, source, options);
  }
  throw Error(ErrorKind::kUnknownAdapter, "no adapter named '" + std::string(adapter) + "'");
}

IngestResult ingest(const std::filesystem::path& raw_file, const Source& source,
                    std::string_view adapter, const IngestOptions& options) {
  // Resolve the adapter before touching the file so a typo is reported as such.
  const auto names = adapter_names();
  const auto key = compact_lower(adapter);
  const bool known =
      key == "jsonl" || key == "empathetic" || key == "wow" ||
      std::any_of(names.begin(), names.end(),
                  [&](std::string_view n) { return compact_lower(n) == key; });
  if (!known) {
    throw Error(ErrorKind::kUnknownAdapter, "no adapter named '" + std::string(adapter) + "'");
  }
  return ingest_text(read_file(raw_file), source, adapter, options);
}

nlohmann::json dialogue_to_json(const Dialogue& d) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : d.turns) {
    turns.push_back({{"speaker", t.speaker == Speaker::User1 ? "user1" : "user2"},
                     {"text", t.text}});
  }
  nlohmann::json j;
  j["id"] = d.id;
  j["source"] = d.source.name();
  j["turns"] = std::move(turns);
  return j;
}

std::string to_canonical_jsonl(const std::vector<Dialogue>& dialogues) {
  std::string out;
  for (const auto& d : dialogues) {
    out += dialogue_to_json(d).dump();
    out += '\n';
  }
  return out;
}

std::vector<Dialogue> load_corpus(const std::filesystem::path& path) {
  return ingest(path, Source::other("unknown"), "canonical", {}).dialogues;
}

std::vector<Dialogue> sample(const std::vector<Dialogue>& corpus,
                             const SamplePlan& plan) {
  if (plan.min_turns > plan.max_turns) {
    throw Error(ErrorKind::kInvalidArgument, "min_turns exceeds max_turns");
  }
  if (plan.dialogues_per_source < 1) {
    throw Error(ErrorKind::kInvalidArgument, "dialogues_per_source must be >= 1");
  }
  if (plan.sources.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "sample plan lists no sources");
  }
  std::vector<Source> sources = plan.sources;
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());

  std::vector<Dialogue> out;
  for (const auto& source : sources) {
    std::vector<const Dialogue*> eligible;
    for (const auto& d : corpus) {
      if (d.source == source && d.turns.size() >= plan.min_turns &&
          d.turns.size() <= plan.max_turns) {
        eligible.push_back(&d);
      }
    }
    // Input order must not influence the draw.
    std::sort(eligible.begin(), eligible.end(),
              [](const Dialogue* a, const Dialogue* b) { return a->id < b->id; });
    const auto need = plan.dialogues_per_source;
    if (eligible.size() < need) {
      throw Error(ErrorKind::kInsufficientEligible,
                  "source " + source.name() + ": have " +
                      std::to_string(eligible.size()) + ", need " +
                      std::to_string(need));
    }
    std::uint64_t mix = plan.seed ^ fnv1a(source.name());
    Xoshiro256 rng(splitmix64(mix));
    for (std::size_t i = 0; i < need; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
      std::swap(eligible[i], eligible[j]);
    }
    std::vector<const Dialogue*> chosen(eligible.begin(), eligible.begin() + need);
    std::sort(chosen.begin(), chosen.end(),
              [](const Dialogue* a, const Dialogue* b) { return a->id < b->id; });
    for (const auto* d : chosen) out.push_back(*d);
  }
  return out;
}

std::size_t count_expandable_turns(const std::vector<Dialogue>& dialogues) {
  return std::accumulate(dialogues.begin(), dialogues.end(), std::size_t{0},
                         [](std::size_t acc, const Dialogue& d) {
                           return acc + (d.turns.empty() ? 0 : d.turns.size() - 1);
                         });
}

const Dialogue& find_dialogue(const std::vector<Dialogue>& dialogues,
                              std::string_view id) {
  for (const auto& d : dialogues) {
    if (d.id == id) return d;
  }
  throw Error(ErrorKind::kMissingKey, "dialogue '" + std::string(id) + "' not found");
}

}  // namespace csx

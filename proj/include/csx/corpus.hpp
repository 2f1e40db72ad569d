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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace csx {

enum class Speaker { User1, User2 };

/// "User 1" / "User 2", the form used when dialogue lines are shown to a
/// model or in sample sheets.
std::string_view speaker_display(Speaker s);
Speaker other(Speaker s);

struct Turn {
  std::size_t index = 0;
  Speaker speaker = Speaker::User1;
  std::string text;

  bool operator==(const Turn&) const = default;
};

/// Source dataset of a dialogue. Known datasets compare by kind; anything else
/// is kOther with a free-form name.
class Source {
 public:
  enum class Kind {
    DailyDialog,
    TopicalChat,
    EmpatheticDialogues,
    PersonaChat,
    WizardOfWikipedia,
    Other,
  };

  Source() = default;
  Source(Kind kind) : kind_(kind) {}  // NOLINT
  static Source other(std::string name);
  /// Known names (case, spaces, "_" and "-" ignored) map to their kind,
  /// everything else to Other(name).
  static Source parse(std::string_view name);

  Kind kind() const { return kind_; }
  std::string name() const;

  bool operator==(const Source& o) const { return name() == o.name(); }
  auto operator<=>(const Source& o) const { return name() <=> o.name(); }

 private:
  Kind kind_ = Kind::Other;
  std::string other_name_;
};

struct Dialogue {
  std::string id;
  Source source;
  std::vector<Turn> turns;

  bool operator==(const Dialogue&) const = default;
};

struct SamplePlan {
  std::uint64_t seed = 0;
  std::size_t dialogues_per_source = 40;
  std::size_t min_turns = 5;
  std::size_t max_turns = 10;
  std::vector<Source> sources;
};

struct SkipReport {
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> reasons;

  void add(const std::string& reason) {
    ++skipped;
    ++reasons[reason];
  }
  nlohmann::json to_json() const;
};

struct IngestResult {
  std::vector<Dialogue> dialogues;
  SkipReport skips;
};

struct IngestOptions {
  /// Strict mode fails on the first unparseable line; lenient mode skips it
  /// and counts it under "malformed_record".
  bool strict = true;
};

/// Reads `raw_file` with the named adapter. `source` labels dialogues whose
/// format carries no source of its own. Adapters: canonical, dailydialog,
/// topicalchat, empatheticdialogues, personachat, wizardofwikipedia.
IngestResult ingest(const std::filesystem::path& raw_file, const Source& source,
                    std::string_view adapter, const IngestOptions& options = {});

/// Same as ingest() over in-memory contents.
IngestResult ingest_text(std::string_view contents, const Source& source,
                         std::string_view adapter,
                         const IngestOptions& options = {});

std::vector<std::string_view> adapter_names();

/// Canonical JSONL: one {"id","source","turns":[{"speaker","text"}]} object
/// per line.
std::string to_canonical_jsonl(const std::vector<Dialogue>& dialogues);
nlohmann::json dialogue_to_json(const Dialogue& d);

/// Convenience for already-canonical files (strict).
std::vector<Dialogue> load_corpus(const std::filesystem::path& path);

/// Draws plan.dialogues_per_source dialogues per source, uniformly without
/// replacement among those with min_turns <= turns <= max_turns. The result is
/// a pure function of (corpus, plan) and is sorted by (source, id).
std::vector<Dialogue> sample(const std::vector<Dialogue>& corpus,
                             const SamplePlan& plan);

/// Positions i >= 1 of every dialogue, i.e. sum of (turns - 1).
std::size_t count_expandable_turns(const std::vector<Dialogue>& dialogues);

/// Lookup by id; throws kMissingKey.
const Dialogue& find_dialogue(const std::vector<Dialogue>& dialogues,
                              std::string_view id);

}  // namespace csx

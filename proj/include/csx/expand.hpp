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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "csx/corpus.hpp"
#include "csx/llm.hpp"
#include "csx/prompts.hpp"
#include "csx/relations.hpp"

namespace csx {

enum class ExpansionMode { ZeroShot, OneShot };

std::string_view mode_name(ExpansionMode m);  // "zero-shot" / "one-shot"
ExpansionMode parse_mode(std::string_view s);

/// One-shot exemplars. Position-specific entries shadow per-relation
/// fallbacks.
class ExemplarTable {
 public:
  void add(RelationId relation, std::string text);
  void add(const std::string& dialogue_id, std::size_t turn_index, RelationId relation,
           std::string text);

  std::optional<std::string> lookup(const std::string& dialogue_id, std::size_t turn_index,
                                    RelationId relation) const;
  std::size_t size() const { return fallback_.size() + specific_.size(); }

 private:
  std::map<RelationId, std::string> fallback_;
  std::map<std::tuple<std::string, std::size_t, RelationId>, std::string> specific_;
};

/// JSONL of {"dialogue_id"?, "turn_index"?, "relation", "text"}.
ExemplarTable load_exemplars(const std::filesystem::path& path);
ExemplarTable exemplars_from_jsonl(std::string_view contents);

struct ExpansionJob {
  std::vector<Dialogue> dialogues;
  RelationCatalog catalog = catalog_default();
  ExpansionMode mode = ExpansionMode::ZeroShot;
  std::optional<ExemplarTable> exemplars;  // required iff OneShot
  std::string generator_model = "gpt-3.5-turbo";
  PromptTemplateSet templates = default_templates();
  BackendPolicy policy;
  std::string run_id = "run";
  /// Preceding turns shown to the model; 0 means the whole prefix.
  std::size_t context_window = 0;
  /// One follow-up request for indices missing from the first reply.
  bool reask_gaps = true;
  /// One request per relation instead of a single listwise request.
  bool per_relation = false;
  double temperature = 0.7;
  std::size_t max_output_tokens = 2048;

  /// Throws on an inconsistent job (e.g. OneShot without an exemplar for
  /// some position and relation).
  void validate() const;
};

struct ExpansionRecord {
  std::string run_id;
  std::string dialogue_id;
  std::size_t turn_index = 0;
  RelationId relation = RelationId::xAttr;
  std::string text;
  std::string generator_model;
  ExpansionMode mode = ExpansionMode::ZeroShot;
  std::string prompt_sha;
  std::string template_sha;
  std::string original_text;
  std::size_t char_len = 0;
  std::size_t original_char_len = 0;
  /// Filled by the follow-up request for missing indices.
  bool reasked = false;

  nlohmann::json to_json() const;
  static ExpansionRecord from_json(const nlohmann::json& j);
  bool operator==(const ExpansionRecord&) const = default;
};

using ExpansionSet = std::vector<ExpansionRecord>;

ExpansionSet load_expansions(const std::filesystem::path& path);
std::string to_jsonl(const ExpansionSet& records);

/// Sorts by (dialogue_id, turn_index, canonical relation order).
void sort_expansions(ExpansionSet& records);

struct TurnExpansion {
  std::vector<ExpansionRecord> records;
  std::vector<RelationId> gaps;
  Usage usage;
  bool reasked = false;
};

/// Expansion context for `position`: the preceding turns, limited by the
/// job's context window.
std::span<const Turn> expansion_context(const Dialogue& dialogue, std::size_t position,
                                        std::size_t context_window);

/// Exact prompt for (dialogue, position) under `job`; `only` restricts the
/// catalog to one relation (per-relation mode).
BuiltPrompt expansion_prompt_for(const Dialogue& dialogue, std::size_t position,
                                 const ExpansionJob& job,
                                 std::optional<RelationId> only = std::nullopt);

/// Generates the alternative responses for turn `position` (1 <= position <
/// turns) given the turns before it. Backend and parse errors propagate.
TurnExpansion expand_turn(const Dialogue& dialogue, std::size_t position,
                          const ExpansionJob& job, Backend& backend);

struct PositionFailure {
  std::string dialogue_id;
  std::size_t turn_index = 0;
  std::string error;
  std::string message;
};

struct ExpansionSummary {
  std::string run_id;
  std::size_t positions_total = 0;
  std::size_t positions_resumed = 0;  // already present in the output
  std::size_t positions_expanded = 0;
  std::size_t positions_reasked = 0;
  std::vector<PositionFailure> failures;
  std::vector<std::tuple<std::string, std::size_t, RelationId>> gaps;
  std::size_t records_new = 0;
  std::size_t records_total = 0;
  Usage usage;
  /// sum(char_len) / sum(original_char_len) over the whole output set.
  double length_ratio_of_sums = 0.0;

  nlohmann::json to_json() const;
};

/// Expands every eligible position and writes `out_path` (JSONL). Records are
/// appended as positions complete, so an interrupted run can resume: positions
/// that already have a record for every relation in `out_path` are skipped,
/// incomplete ones are dropped and redone. On completion the file is
/// rewritten sorted. Item failures are reported, never thrown.
ExpansionSummary expand_corpus(const ExpansionJob& job, Backend& backend,
                               const std::filesystem::path& out_path);

}  // namespace csx

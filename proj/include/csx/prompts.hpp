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
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "csx/corpus.hpp"
#include "csx/relations.hpp"

namespace csx {

enum class PromptSection { Preamble, Definitions, Context, Candidate, Instruction };

std::string_view section_name(PromptSection s);

/// Editable prompt wording and layout. Text fields may use {count},
/// {speaker} and {support_speaker}; the re-ask instruction may also use
/// {missing}.
struct PromptTemplateSet {
  std::string version = "1";

  std::string expansion_preamble;
  std::vector<PromptSection> expansion_layout;
  std::string expansion_instruction;
  std::string reask_instruction;

  std::string evaluation_preamble;
  std::vector<PromptSection> evaluation_layout;
  std::string evaluation_instruction;
  bool evaluation_include_context = true;

  std::string definitions_heading;
  std::string context_heading;
  std::string candidate_heading;

  nlohmann::json to_json() const;
  /// Missing fields keep their defaults; layouts are validated.
  static PromptTemplateSet from_json(const nlohmann::json& j);

  /// SHA-256 of the canonical JSON serialization; stamped into every record.
  std::string sha256() const;
};

PromptTemplateSet default_templates();
PromptTemplateSet load_templates(const std::filesystem::path& path);

struct BuiltPrompt {
  std::string text;
  std::size_t char_count = 0;  // Unicode code points
};

/// Listwise generation prompt: preamble, the catalog's definitions numbered
/// 1..M, the dialogue context as "User N: ..." lines and the output
/// instruction. `exemplars` (one-shot mode) fill each definition's {example}.
BuiltPrompt build_expansion_prompt(
    std::span<const Turn> context, const RelationCatalog& catalog,
    const SpeakerBinding& binding, const PromptTemplateSet& templates,
    const std::map<RelationId, std::string>* exemplars = nullptr);

/// Follow-up prompt asking only for the listed (1-based) indices.
BuiltPrompt build_reask_prompt(const BuiltPrompt& original,
                               std::span<const std::size_t> missing,
                               const RelationCatalog& catalog,
                               const SpeakerBinding& binding,
                               const PromptTemplateSet& templates);

/// Ranking prompt for one candidate response.
BuiltPrompt build_evaluation_prompt(std::span<const Turn> context,
                                    std::string_view candidate,
                                    const RelationCatalog& catalog,
                                    const SpeakerBinding& binding,
                                    const PromptTemplateSet& templates);

struct ExpansionItem {
  std::size_t index = 0;  // 1-based
  std::string text;

  bool operator==(const ExpansionItem&) const = default;
};

struct ExpansionReply {
  std::vector<ExpansionItem> responses;  // ascending index
  std::vector<std::size_t> gaps;         // missing indices in 1..expected
  std::vector<std::string> warnings;
};

/// Tolerant numbered-list parser. Accepts "1.", "1)", "1:", "1 -", markdown
/// bold and a relation-name echo before the text; continuation lines join the
/// previous item; other lines are ignored. A JSON array of strings is also
/// accepted. Throws Error(kUnparseableReply) when no usable item is found.
ExpansionReply parse_expansion_reply(std::string_view raw, std::size_t expected_count);

struct RankingReply {
  std::vector<RelationId> ranking;  // best fit first, no duplicates
  std::vector<std::string> warnings;
};

/// Accepts index orderings ("3 > 7 > 1", "[3] > [7]", "3, 7, 1", numbered
/// lists) and relation-name orderings, mixed freely. Duplicates keep their
/// first occurrence and out-of-range indices are dropped; both are reported
/// in `warnings`. The result may be shorter than the catalog. Throws
/// Error(kUnparseableReply) when no ordering token is present.
RankingReply parse_ranking_reply(std::string_view raw, const RelationCatalog& catalog);

/// "i1 > i2 > ..." using 1-based catalog indices.
std::string format_ranking(std::span<const RelationId> ranking,
                           const RelationCatalog& catalog);

/// The party who utters the turn at `position` is the support speaker.
SpeakerBinding binding_for(const Dialogue& dialogue, std::size_t position);

}  // namespace csx

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

// Ranking the relation definitions against generated responses.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "csx/corpus.hpp"
#include "csx/expand.hpp"
#include "csx/llm.hpp"
#include "csx/prompts.hpp"
#include "csx/relations.hpp"

namespace csx {

struct RankingRecord {
  std::string run_id;
  std::string dialogue_id;
  std::size_t turn_index = 0;
  RelationId true_relation = RelationId::xAttr;
  std::vector<RelationId> ranking;  // full permutation of the catalog
  std::size_t true_rank = 0;        // 1-based; 0 on failed rows
  std::string judge_model;
  std::string generator_model;
  bool completion_applied = false;
  std::string prompt_sha;
  std::string template_sha;
  /// Failed judgments are kept so they can be counted; metrics skip them.
  bool failed = false;
  std::string error;
  std::string message;

  nlohmann::json to_json() const;
  static RankingRecord from_json(const nlohmann::json& j);
  bool operator==(const RankingRecord&) const = default;
};

using RankingSet = std::vector<RankingRecord>;

RankingSet load_rankings(const std::filesystem::path& path);
RankingSet rankings_from_jsonl(std::string_view contents, const std::string& label);
std::string to_jsonl(const RankingSet& records);

/// Sorts by (dialogue_id, turn_index, canonical order of true_relation).
void sort_rankings(RankingSet& records);

struct CompletedRanking {
  std::vector<RelationId> ranking;
  bool completion_applied = false;
};

/// Appends catalog relations missing from `partial` in catalog order.
/// Throws kDuplicateInRanking or kUnknownRelation on an invalid prefix.
CompletedRanking apply_completion(std::span<const RelationId> partial,
                                  const RelationCatalog& catalog);

/// 1-based position of `relation` in `ranking`; throws kUnknownRelation.
std::size_t rank_of(std::span<const RelationId> ranking, RelationId relation);

struct JudgeJob {
  RelationCatalog catalog = catalog_default();
  PromptTemplateSet templates = default_templates();
  std::string judge_model = "gpt-4";
  std::string run_id = "run";
  BackendPolicy policy;
  double temperature = 0.0;
  std::size_t max_output_tokens = 256;

  void validate() const;
};

/// Evaluation prompt for `rec`: the dialogue prefix before the expanded turn
/// and the generated response. The true relation never enters the prompt.
BuiltPrompt judge_prompt_for(const ExpansionRecord& rec, const Dialogue& dialogue,
                             const JudgeJob& job);

/// Backend and parse errors propagate.
RankingRecord judge_record(const ExpansionRecord& rec, const Dialogue& dialogue,
                           const JudgeJob& job, Backend& backend, Usage* usage = nullptr);

struct JudgeSummary {
  std::string run_id;
  std::size_t records_total = 0;
  std::size_t resumed = 0;
  std::size_t judged = 0;
  std::size_t failed = 0;
  std::size_t completed = 0;  // completion policy applied
  Usage usage;

  nlohmann::json to_json() const;
};

/// Judges every expansion and writes `out_path` (JSONL). Resumable: rows
/// already present are kept, except failures of a transient kind, which are
/// retried. The file is rewritten sorted on completion.
JudgeSummary judge_set(const ExpansionSet& expansions, const std::vector<Dialogue>& dialogues,
                       const JudgeJob& job, Backend& backend,
                       const std::filesystem::path& out_path);

/// Reads {"dialogue_id","turn_index","true_relation","ranking":[names]} rows
/// produced by another evaluator. When `expansions` is given, every row must
/// match one of its records.
RankingSet import_external_rankings(const std::filesystem::path& path,
                                    const RelationCatalog& catalog,
                                    const ExpansionSet* expansions = nullptr,
                                    const std::string& run_id = "external",
                                    const std::string& judge_model = "external");
RankingSet external_rankings_from_jsonl(std::string_view contents,
                                        const RelationCatalog& catalog,
                                        const ExpansionSet* expansions = nullptr,
                                        const std::string& run_id = "external",
                                        const std::string& judge_model = "external");

}  // namespace csx

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

// Run configuration: everything needed to reproduce a pipeline run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csx/corpus.hpp"
#include "csx/evaluate.hpp"
#include "csx/expand.hpp"
#include "csx/llm.hpp"

namespace csx {

struct CorpusInput {
  std::string path;
  std::string adapter = "canonical";
  std::string source;  // label for formats without their own
};

struct RunConfig {
  std::string run_id = "run";
  std::uint64_t seed = 0;

  std::vector<CorpusInput> corpus;
  std::size_t dialogues_per_source = 40;
  std::size_t min_turns = 5;
  std::size_t max_turns = 10;
  std::vector<std::string> sources;  // empty: every source in the corpus

  std::optional<std::string> catalog_path;
  std::optional<std::string> templates_path;
  std::optional<std::string> exemplars_path;
  std::string run_dir = "runs";

  std::string generator_model = "gpt-3.5-turbo";
  ExpansionMode mode = ExpansionMode::ZeroShot;
  double generator_temperature = 0.7;
  std::size_t generator_max_tokens = 2048;
  std::size_t context_window = 0;
  bool reask_gaps = true;
  bool per_relation = false;

  std::string judge_model = "gpt-4";
  double judge_temperature = 0.0;
  std::size_t judge_max_tokens = 256;
  /// Overrides the template set's choice when present.
  std::optional<bool> judge_include_context;

  /// "http", "mock:<kind>", "replay:<path>" or "record:<path>".
  std::string backend = "http";
  std::string base_url = "https://api.openai.com/v1";
  /// Only "${VAR}" references are accepted, so keys never sit in the file.
  std::string api_key = "${OPENAI_API_KEY}";
  BackendPolicy policy;

  std::string generator_label;  // default "<Mode> <generator model>"
  std::string judge_label;      // default judge model
  std::vector<std::size_t> ks = {1, 5, 10};
  std::size_t samples_per_relation = 1;

  /// Directory relative paths are resolved against; not serialized.
  std::filesystem::path base_dir;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j,
                             const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  void validate() const;

  std::filesystem::path resolve(const std::string& p) const;
  std::filesystem::path run_path() const;  // run_dir / run_id

  /// The key named by the api_key reference; empty when the variable is unset.
  std::string resolved_api_key() const;

  std::string effective_generator_label() const;
  std::string effective_judge_label() const;

  SamplePlan sample_plan() const;
  RelationCatalog load_catalog_or_default() const;
  PromptTemplateSet load_templates_or_default() const;
};

/// Expansion job for `dialogues` as the config describes it (loads the
/// catalog, templates and exemplars).
ExpansionJob make_expansion_job(const RunConfig& cfg, std::vector<Dialogue> dialogues);

JudgeJob make_judge_job(const RunConfig& cfg);

/// Expands one "${NAME}" reference from the environment. Anything else is
/// rejected with kConfigError.
std::string interpolate_secret(const std::string& value);

/// Filesystem-safe form of a model or label name.
std::string file_stem_for(std::string_view name);

}  // namespace csx

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

#include "csx/evaluate.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>
#include <tuple>

#include <spdlog/spdlog.h>

#include "csx/digest.hpp"
#include "csx/text.hpp"

namespace csx {

namespace {

using RowKey = std::tuple<std::string, std::size_t, std::size_t>;

RowKey key_of(const RankingRecord& r) {
  return {r.dialogue_id, r.turn_index, canonical_index(r.true_relation)};
}

RowKey key_of(const ExpansionRecord& r) {
  return {r.dialogue_id, r.turn_index, canonical_index(r.relation)};
}

RelationId relation_or_throw(const std::string& name, const std::string& where) {
  const auto rel = relation_from_name(name);
  if (!rel) throw Error(ErrorKind::kUnknownRelation, where + "unknown relation '" + name + "'");
  return *rel;
}

}  // namespace

nlohmann::json RankingRecord::to_json() const {
  nlohmann::json names = nlohmann::json::array();
  for (auto r : ranking) names.push_back(relation_name(r));
  nlohmann::json j = {{"run_id", run_id},
                      {"dialogue_id", dialogue_id},
                      {"turn_index", turn_index},
                      {"true_relation", relation_name(true_relation)},
                      {"ranking", names},
                      {"true_rank", true_rank},
                      {"judge_model", judge_model},
                      {"generator_model", generator_model},
                      {"completion_applied", completion_applied},
                      {"prompt_sha", prompt_sha},
                      {"template_sha", template_sha}};
  if (failed) {
    j["failed"] = true;
    j["error"] = error;
    j["message"] = message;
  }
  return j;
}

RankingRecord RankingRecord::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kMalformedRecord, "ranking record not an object");
  RankingRecord r;
  try {
    r.run_id = j.value("run_id", std::string());
    r.dialogue_id = j.at("dialogue_id").get<std::string>();
    r.turn_index = j.at("turn_index").get<std::size_t>();
    r.true_relation = relation_or_throw(j.at("true_relation").get<std::string>(), "");
    for (const auto& n : j.at("ranking")) {
      r.ranking.push_back(relation_or_throw(n.get<std::string>(), ""));
    }
    r.true_rank = j.value("true_rank", std::size_t{0});
    r.judge_model = j.value("judge_model", std::string());
    r.generator_model = j.value("generator_model", std::string());
    r.completion_applied = j.value("completion_applied", false);
    r.prompt_sha = j.value("prompt_sha", std::string());
    r.template_sha = j.value("template_sha", std::string());
    r.failed = j.value("failed", false);
    r.error = j.value("error", std::string());
    r.message = j.value("message", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedRecord, e.what());
  }
  if (!r.failed) {
    std::set<RelationId> seen(r.ranking.begin(), r.ranking.end());
    if (seen.size() != r.ranking.size()) {
      throw Error(ErrorKind::kDuplicateInRanking, r.dialogue_id + " turn " +
                                                      std::to_string(r.turn_index));
    }
    if (r.true_rank != rank_of(r.ranking, r.true_relation)) {
      throw Error(ErrorKind::kMalformedRecord,
                  "stored true_rank disagrees with ranking for " + r.dialogue_id);
    }
  }
  return r;
}

RankingSet rankings_from_jsonl(std::string_view contents, const std::string& label) {
  RankingSet out;
  const auto lines = split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto where = label + " line " + std::to_string(i + 1) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedRecord, where + e.what());
    }
    try {
      out.push_back(RankingRecord::from_json(j));
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.detail());
    }
  }
  return out;
}

RankingSet load_rankings(const std::filesystem::path& path) {
  return rankings_from_jsonl(read_file(path), path.string());
}

std::string to_jsonl(const RankingSet& records) {
  std::string out;
  for (const auto& r : records) out += r.to_json().dump() + "\n";
  return out;
}

void sort_rankings(RankingSet& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return key_of(a) < key_of(b); });
}

CompletedRanking apply_completion(std::span<const RelationId> partial,
                                  const RelationCatalog& catalog) {
  CompletedRanking out;
  std::set<RelationId> seen;
  for (auto r : partial) {
    if (!catalog.contains(r)) {
      throw Error(ErrorKind::kUnknownRelation,
                  std::string(relation_name(r)) + " is not in the catalog");
    }
    if (!seen.insert(r).second) {
      throw Error(ErrorKind::kDuplicateInRanking,
                  std::string(relation_name(r)) + " appears twice");
    }
    out.ranking.push_back(r);
  }
  for (const auto& def : catalog) {
    if (!seen.count(def.id)) {
      out.ranking.push_back(def.id);
      out.completion_applied = true;
    }
  }
  return out;
}

std::size_t rank_of(std::span<const RelationId> ranking, RelationId relation) {
  auto it = std::find(ranking.begin(), ranking.end(), relation);
  if (it == ranking.end()) {
    throw Error(ErrorKind::kUnknownRelation,
                std::string(relation_name(relation)) + " is not in the ranking");
  }
  return static_cast<std::size_t>(it - ranking.begin()) + 1;
}

void JudgeJob::validate() const {
  policy.validate();
  if (judge_model.empty()) throw Error(ErrorKind::kConfigError, "empty judge model");
  if (run_id.empty()) throw Error(ErrorKind::kConfigError, "empty run id");
}

BuiltPrompt judge_prompt_for(const ExpansionRecord& rec, const Dialogue& dialogue,
                             const JudgeJob& job) {
  if (rec.turn_index == 0 || rec.turn_index >= dialogue.turns.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                rec.dialogue_id + ": turn " + std::to_string(rec.turn_index) +
                    " is not expandable");
  }
  const auto context = std::span<const Turn>(dialogue.turns).first(rec.turn_index);
  return build_evaluation_prompt(context, rec.text, job.catalog,
                                 binding_for(dialogue, rec.turn_index), job.templates);
}

RankingRecord judge_record(const ExpansionRecord& rec, const Dialogue& dialogue,
                           const JudgeJob& job, Backend& backend, Usage* usage) {
  if (!job.catalog.contains(rec.relation)) {
    throw Error(ErrorKind::kUnknownRelation,
                std::string(relation_name(rec.relation)) + " is not in the judge catalog");
  }
  const auto prompt = judge_prompt_for(rec, dialogue, job);
  ChatRequest req;
  req.model_name = job.judge_model;
  req.user_text = prompt.text;
  req.temperature = job.temperature;
  req.max_output_tokens = job.max_output_tokens;
  req.request_tag = "judge:" + job.run_id + ":" + rec.dialogue_id + ":" +
                    std::to_string(rec.turn_index) + ":" +
                    std::string(relation_name(rec.relation));
  auto resp = backend.complete(req);
  if (usage) usage->add(resp);
  const auto reply = parse_ranking_reply(resp.text, job.catalog);
  for (const auto& w : reply.warnings) {
    spdlog::debug("{} turn {} {}: {}", rec.dialogue_id, rec.turn_index,
                  relation_name(rec.relation), w);
  }
  auto done = apply_completion(reply.ranking, job.catalog);

  RankingRecord r;
  r.run_id = job.run_id;
  r.dialogue_id = rec.dialogue_id;
  r.turn_index = rec.turn_index;
  r.true_relation = rec.relation;
  r.ranking = std::move(done.ranking);
  r.true_rank = rank_of(r.ranking, r.true_relation);
  r.judge_model = job.judge_model;
  r.generator_model = rec.generator_model;
  r.completion_applied = done.completion_applied;
  r.prompt_sha = sha256_hex(prompt.text);
  r.template_sha = job.templates.sha256();
  return r;
}

nlohmann::json JudgeSummary::to_json() const {
  return {{"run_id", run_id},     {"records_total", records_total},
          {"resumed", resumed},   {"judged", judged},
          {"failed", failed},     {"completed", completed},
          {"usage", usage.to_json()}};
}

JudgeSummary judge_set(const ExpansionSet& expansions, const std::vector<Dialogue>& dialogues,
                       const JudgeJob& job, Backend& backend,
                       const std::filesystem::path& out_path) {
  job.validate();
  JudgeSummary summary;
  summary.run_id = job.run_id;
  summary.records_total = expansions.size();

  // Later rows for the same key win, so retried failures supersede old ones.
  std::map<RowKey, RankingRecord> rows;
  if (std::filesystem::exists(out_path)) {
    const auto contents = read_file(out_path);
    auto lines = split_lines(contents);
    const bool torn = !contents.empty() && contents.back() != '\n';
    std::string clean;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      try {
        auto r = RankingRecord::from_json(nlohmann::json::parse(lines[i]));
        rows[key_of(r)] = std::move(r);
      } catch (const std::exception& e) {
        if (torn && i + 1 == lines.size()) {
          spdlog::warn("{}: dropping incomplete last line", out_path.string());
          break;
        }
        throw Error(ErrorKind::kMalformedRecord, out_path.string() + " line " +
                                                     std::to_string(i + 1) + ": " + e.what());
      }
    }
    RankingSet kept;
    for (auto& [k, r] : rows) kept.push_back(r);
    write_file_atomic(out_path, to_jsonl(kept));
  }

  std::vector<const ExpansionRecord*> todo;
  for (const auto& rec : expansions) {
    auto it = rows.find(key_of(rec));
    if (it != rows.end()) {
      const auto& r = it->second;
      const auto kind = error_kind_from_name(r.error);
      const bool retry = r.failed && (!kind || is_transient(*kind));
      if (!retry) {
        ++summary.resumed;
        continue;
      }
    }
    todo.push_back(&rec);
  }

  RateLimitedBackend limited(backend, job.policy.requests_per_minute);
  std::mutex mu;
  parallel_for(todo.size(), job.policy.max_in_flight, [&](std::size_t k) {
    const auto& rec = *todo[k];
    RankingRecord row;
    Usage usage;
    try {
      const auto& dlg = find_dialogue(dialogues, rec.dialogue_id);
      row = judge_record(rec, dlg, job, limited, &usage);
    } catch (const Error& e) {
      row = RankingRecord{};
      row.run_id = job.run_id;
      row.dialogue_id = rec.dialogue_id;
      row.turn_index = rec.turn_index;
      row.true_relation = rec.relation;
      row.judge_model = job.judge_model;
      row.generator_model = rec.generator_model;
      row.template_sha = job.templates.sha256();
      row.failed = true;
      row.error = std::string(e.name());
      row.message = e.detail();
      spdlog::warn("{} turn {} {}: {}", rec.dialogue_id, rec.turn_index,
                   relation_name(rec.relation), e.what());
    }
    std::lock_guard lock(mu);
    append_file(out_path, row.to_json().dump() + "\n");
    summary.usage += usage;
    ++summary.judged;
    rows[key_of(row)] = std::move(row);
  });

  RankingSet all;
  for (auto& [k, r] : rows) {
    if (r.failed) ++summary.failed;
    if (!r.failed && r.completion_applied) ++summary.completed;
    all.push_back(std::move(r));
  }
  write_file_atomic(out_path, to_jsonl(all));
  return summary;
}

RankingSet external_rankings_from_jsonl(std::string_view contents,
                                        const RelationCatalog& catalog,
                                        const ExpansionSet* expansions,
                                        const std::string& run_id,
                                        const std::string& judge_model) {
  std::map<RowKey, const ExpansionRecord*> known;
  if (expansions) {
    for (const auto& e : *expansions) known[key_of(e)] = &e;
  }
  RankingSet out;
  std::set<RowKey> seen;
  const auto lines = split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto where = "line " + std::to_string(i + 1) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedRecord, where + e.what());
    }
    for (const char* field : {"dialogue_id", "turn_index", "true_relation", "ranking"}) {
      if (!j.is_object() || !j.contains(field)) {
        throw Error(ErrorKind::kMissingKey, where + "missing \"" + field + "\"");
      }
    }
    if (!j["dialogue_id"].is_string() || !j["turn_index"].is_number_unsigned() ||
        !j["true_relation"].is_string() || !j["ranking"].is_array()) {
      throw Error(ErrorKind::kMalformedRecord, where + "field of the wrong type");
    }
    RankingRecord r;
    r.run_id = run_id;
    r.judge_model = judge_model;
    r.dialogue_id = j["dialogue_id"].get<std::string>();
    r.turn_index = j["turn_index"].get<std::size_t>();
    r.true_relation = relation_or_throw(j["true_relation"].get<std::string>(), where);
    std::vector<RelationId> partial;
    for (const auto& n : j["ranking"]) {
      if (!n.is_string()) throw Error(ErrorKind::kMalformedRecord, where + "non-string name");
      partial.push_back(relation_or_throw(n.get<std::string>(), where));
    }
    if (!catalog.contains(r.true_relation)) {
      throw Error(ErrorKind::kUnknownRelation, where + "true relation not in the catalog");
    }
    try {
      auto done = apply_completion(partial, catalog);
      r.ranking = std::move(done.ranking);
      r.completion_applied = done.completion_applied;
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.detail());
    }
    r.true_rank = rank_of(r.ranking, r.true_relation);
    const auto key = key_of(r);
    if (expansions) {
      auto it = known.find(key);
      if (it == known.end()) {
        throw Error(ErrorKind::kMissingKey, where + "no expansion for " + r.dialogue_id +
                                                " turn " + std::to_string(r.turn_index) + " " +
                                                std::string(relation_name(r.true_relation)));
      }
      r.generator_model = it->second->generator_model;
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorKind::kMalformedRecord, where + "repeated row for " + r.dialogue_id);
    }
    out.push_back(std::move(r));
  }
  sort_rankings(out);
  return out;
}

RankingSet import_external_rankings(const std::filesystem::path& path,
                                    const RelationCatalog& catalog,
                                    const ExpansionSet* expansions, const std::string& run_id,
                                    const std::string& judge_model) {
  try {
    return external_rankings_from_jsonl(read_file(path), catalog, expansions, run_id,
                                        judge_model);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFileUnreadable) throw;
    throw Error(e.kind(), path.string() + " " + e.detail());
  }
}

}  // namespace csx

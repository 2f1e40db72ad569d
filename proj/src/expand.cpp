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

#include "csx/expand.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include <spdlog/spdlog.h>

#include "csx/digest.hpp"
#include "csx/text.hpp"

namespace csx {

std::string_view mode_name(ExpansionMode m) {
  return m == ExpansionMode::OneShot ? "one-shot" : "zero-shot";
}

ExpansionMode parse_mode(std::string_view s) {
  const auto t = to_lower_ascii(trim(s));
  if (t == "zero-shot" || t == "zeroshot" || t == "zero") return ExpansionMode::ZeroShot;
  if (t == "one-shot" || t == "oneshot" || t == "one") return ExpansionMode::OneShot;
  throw Error(ErrorKind::kInvalidArgument, "unknown mode '" + std::string(s) + "'");
}

void ExemplarTable::add(RelationId relation, std::string text) {
  fallback_[relation] = std::move(text);
}

void ExemplarTable::add(const std::string& dialogue_id, std::size_t turn_index,
                        RelationId relation, std::string text) {
  specific_[{dialogue_id, turn_index, relation}] = std::move(text);
}

std::optional<std::string> ExemplarTable::lookup(const std::string& dialogue_id,
                                                 std::size_t turn_index,
                                                 RelationId relation) const {
  if (auto it = specific_.find({dialogue_id, turn_index, relation}); it != specific_.end()) {
    return it->second;
  }
  if (auto it = fallback_.find(relation); it != fallback_.end()) return it->second;
  return std::nullopt;
}

ExemplarTable exemplars_from_jsonl(std::string_view contents) {
  ExemplarTable table;
  std::size_t line_no = 0;
  for (auto line : split_lines(contents)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = "exemplars line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedRecord, where + e.what());
    }
    if (!j.is_object() || !j.contains("relation") || !j["relation"].is_string() ||
        !j.contains("text") || !j["text"].is_string()) {
      throw Error(ErrorKind::kMalformedRecord, where + "needs string \"relation\" and \"text\"");
    }
    const auto name = j["relation"].get<std::string>();
    const auto rel = relation_from_name(name);
    if (!rel) throw Error(ErrorKind::kUnknownRelation, where + name);
    auto text = j["text"].get<std::string>();
    const bool has_dlg = j.contains("dialogue_id");
    const bool has_turn = j.contains("turn_index");
    if (has_dlg != has_turn) {
      throw Error(ErrorKind::kMalformedRecord,
                  where + "\"dialogue_id\" and \"turn_index\" go together");
    }
    if (has_dlg) {
      if (!j["dialogue_id"].is_string() || !j["turn_index"].is_number_unsigned()) {
        throw Error(ErrorKind::kMalformedRecord, where + "bad position");
      }
      table.add(j["dialogue_id"].get<std::string>(), j["turn_index"].get<std::size_t>(), *rel,
                std::move(text));
    } else {
      table.add(*rel, std::move(text));
    }
  }
  return table;
}

ExemplarTable load_exemplars(const std::filesystem::path& path) {
  return exemplars_from_jsonl(read_file(path));
}

void ExpansionJob::validate() const {
  policy.validate();
  if (generator_model.empty()) throw Error(ErrorKind::kConfigError, "empty generator model");
  if (run_id.empty()) throw Error(ErrorKind::kConfigError, "empty run id");
  if (mode == ExpansionMode::ZeroShot) return;
  if (!exemplars) throw Error(ErrorKind::kMissingExemplar, "one-shot mode needs exemplars");
  for (const auto& d : dialogues) {
    for (std::size_t pos = 1; pos < d.turns.size(); ++pos) {
      for (const auto& def : catalog) {
        if (!exemplars->lookup(d.id, pos, def.id)) {
          throw Error(ErrorKind::kMissingExemplar,
                      d.id + " turn " + std::to_string(pos) + " " +
                          std::string(relation_name(def.id)));
        }
      }
    }
  }
}

nlohmann::json ExpansionRecord::to_json() const {
  return {{"run_id", run_id},
          {"dialogue_id", dialogue_id},
          {"turn_index", turn_index},
          {"relation", relation_name(relation)},
          {"text", text},
          {"generator_model", generator_model},
          {"mode", mode_name(mode)},
          {"prompt_sha", prompt_sha},
          {"template_sha", template_sha},
          {"original_text", original_text},
          {"char_len", char_len},
          {"original_char_len", original_char_len},
          {"reasked", reasked}};
}

ExpansionRecord ExpansionRecord::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kMalformedRecord, "expansion record not an object");
  ExpansionRecord r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.dialogue_id = j.at("dialogue_id").get<std::string>();
    r.turn_index = j.at("turn_index").get<std::size_t>();
    const auto name = j.at("relation").get<std::string>();
    const auto rel = relation_from_name(name);
    if (!rel) throw Error(ErrorKind::kUnknownRelation, name);
    r.relation = *rel;
    r.text = j.at("text").get<std::string>();
    r.generator_model = j.at("generator_model").get<std::string>();
    r.mode = parse_mode(j.at("mode").get<std::string>());
    r.prompt_sha = j.value("prompt_sha", std::string());
    r.template_sha = j.value("template_sha", std::string());
    r.original_text = j.at("original_text").get<std::string>();
    r.char_len = j.value("char_len", utf8_length(r.text));
    r.original_char_len = j.value("original_char_len", utf8_length(r.original_text));
    r.reasked = j.value("reasked", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedRecord, e.what());
  }
  return r;
}

namespace {

// Parses JSONL records. With `tolerate_torn_tail`, an unparseable last line
// that lacks its newline (an interrupted append) is dropped.
ExpansionSet parse_expansions(std::string_view contents, const std::string& label,
                              bool tolerate_torn_tail) {
  ExpansionSet out;
  const auto lines = split_lines(contents);
  const bool torn = !contents.empty() && contents.back() != '\n';
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      out.push_back(ExpansionRecord::from_json(nlohmann::json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (tolerate_torn_tail && torn && i + 1 == lines.size()) {
        spdlog::warn("{}: dropping incomplete last line", label);
        break;
      }
      if (const auto* err = dynamic_cast<const Error*>(&e);
          err && err->kind() == ErrorKind::kUnknownRelation) {
        throw Error(ErrorKind::kUnknownRelation,
                    label + " line " + std::to_string(i + 1) + ": " + e.what());
      }
      throw Error(ErrorKind::kMalformedRecord,
                  label + " line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

ExpansionSet load_expansions(const std::filesystem::path& path) {
  return parse_expansions(read_file(path), path.string(), false);
}

std::string to_jsonl(const ExpansionSet& records) {
  std::string out;
  for (const auto& r : records) out += r.to_json().dump() + "\n";
  return out;
}

void sort_expansions(ExpansionSet& records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tuple(a.dialogue_id, a.turn_index, canonical_index(a.relation)) <
           std::tuple(b.dialogue_id, b.turn_index, canonical_index(b.relation));
  });
}

std::span<const Turn> expansion_context(const Dialogue& dialogue, std::size_t position,
                                        std::size_t context_window) {
  if (position == 0 || position >= dialogue.turns.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                dialogue.id + ": turn " + std::to_string(position) + " is not expandable");
  }
  std::size_t begin = 0;
  if (context_window != 0 && position > context_window) begin = position - context_window;
  return std::span<const Turn>(dialogue.turns).subspan(begin, position - begin);
}

namespace {

RelationCatalog single(const RelationCatalog& catalog, RelationId id) {
  return RelationCatalog({catalog.def(id)});
}

std::string tag_for(const ExpansionJob& job, const Dialogue& d, std::size_t pos) {
  return "expand:" + job.run_id + ":" + d.id + ":" + std::to_string(pos);
}

ChatRequest request_for(const ExpansionJob& job, std::string text, std::string tag) {
  ChatRequest req;
  req.model_name = job.generator_model;
  req.user_text = std::move(text);
  req.temperature = job.temperature;
  req.max_output_tokens = job.max_output_tokens;
  req.request_tag = std::move(tag);
  return req;
}

struct Attempt {
  std::map<std::size_t, std::string> items;  // 1-based index -> text
  std::map<std::size_t, bool> from_reask;
  std::vector<std::size_t> gaps;
  bool reasked = false;
};

// One listwise exchange over `catalog` with at most one follow-up request.
Attempt run_listwise(const ExpansionJob& job, const RelationCatalog& catalog,
                     const BuiltPrompt& prompt, const SpeakerBinding& binding,
                     const std::string& tag, Backend& backend, Usage& usage) {
  const auto n = catalog.size();
  Attempt a;
  std::vector<std::size_t> missing;
  std::optional<Error> first_error;
  {
    auto resp = backend.complete(request_for(job, prompt.text, tag));
    usage.add(resp);
    try {
      auto reply = parse_expansion_reply(resp.text, n);
      for (auto& item : reply.responses) a.items[item.index] = std::move(item.text);
      missing = reply.gaps;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUnparseableReply) throw;
      first_error = e;
      for (std::size_t i = 1; i <= n; ++i) missing.push_back(i);
    }
  }
  if (!missing.empty() && job.reask_gaps) {
    const auto reask = build_reask_prompt(prompt, missing, catalog, binding, job.templates);
    auto resp = backend.complete(request_for(job, reask.text, tag + ":reask"));
    usage.add(resp);
    a.reasked = true;
    try {
      auto reply = parse_expansion_reply(resp.text, n);
      const std::set<std::size_t> wanted(missing.begin(), missing.end());
      for (auto& item : reply.responses) {
        if (!wanted.count(item.index)) continue;
        a.items[item.index] = std::move(item.text);
        a.from_reask[item.index] = true;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUnparseableReply) throw;
      if (a.items.empty()) throw;
    }
  }
  if (a.items.empty() && first_error) throw *first_error;
  for (std::size_t i = 1; i <= n; ++i) {
    if (!a.items.count(i)) a.gaps.push_back(i);
  }
  return a;
}

}  // namespace

BuiltPrompt expansion_prompt_for(const Dialogue& dialogue, std::size_t position,
                                 const ExpansionJob& job, std::optional<RelationId> only) {
  const auto context = expansion_context(dialogue, position, job.context_window);
  const auto binding = binding_for(dialogue, position);
  const auto catalog = only ? single(job.catalog, *only) : job.catalog;
  std::map<RelationId, std::string> exemplars;
  if (job.mode == ExpansionMode::OneShot) {
    if (!job.exemplars) throw Error(ErrorKind::kMissingExemplar, "one-shot mode needs exemplars");
    for (const auto& def : catalog) {
      auto ex = job.exemplars->lookup(dialogue.id, position, def.id);
      if (!ex) {
        throw Error(ErrorKind::kMissingExemplar,
                    dialogue.id + " turn " + std::to_string(position) + " " +
                        std::string(relation_name(def.id)));
      }
      exemplars[def.id] = std::move(*ex);
    }
  }
  return build_expansion_prompt(context, catalog, binding, job.templates,
                                job.mode == ExpansionMode::OneShot ? &exemplars : nullptr);
}

TurnExpansion expand_turn(const Dialogue& dialogue, std::size_t position,
                          const ExpansionJob& job, Backend& backend) {
  const auto binding = binding_for(dialogue, position);
  const auto& original = dialogue.turns.at(position).text;
  const auto template_sha = job.templates.sha256();
  const auto tag = tag_for(job, dialogue, position);
  TurnExpansion out;

  auto make_record = [&](RelationId rel, std::string text, const std::string& prompt_sha,
                         bool reasked) {
    ExpansionRecord r;
    r.run_id = job.run_id;
    r.dialogue_id = dialogue.id;
    r.turn_index = position;
    r.relation = rel;
    r.char_len = utf8_length(text);
    r.text = std::move(text);
    r.generator_model = job.generator_model;
    r.mode = job.mode;
    r.prompt_sha = prompt_sha;
    r.template_sha = template_sha;
    r.original_text = original;
    r.original_char_len = utf8_length(original);
    r.reasked = reasked;
    out.records.push_back(std::move(r));
    if (reasked) out.reasked = true;
  };

  if (!job.per_relation) {
    const auto prompt = expansion_prompt_for(dialogue, position, job);
    const auto sha = sha256_hex(prompt.text);
    auto a = run_listwise(job, job.catalog, prompt, binding, tag, backend, out.usage);
    for (auto& [index, text] : a.items) {
      make_record(job.catalog[index - 1].id, std::move(text), sha, a.from_reask.count(index) > 0);
    }
    for (auto g : a.gaps) out.gaps.push_back(job.catalog[g - 1].id);
    out.reasked = out.reasked || a.reasked;
  } else {
    for (const auto& def : job.catalog) {
      const auto one = single(job.catalog, def.id);
      const auto prompt = expansion_prompt_for(dialogue, position, job, def.id);
      const auto sha = sha256_hex(prompt.text);
      auto a = run_listwise(job, one, prompt, binding,
                            tag + ":" + std::string(relation_name(def.id)), backend, out.usage);
      out.reasked = out.reasked || a.reasked;
      if (auto it = a.items.find(1); it != a.items.end()) {
        make_record(def.id, std::move(it->second), sha, a.from_reask.count(1) > 0);
      } else {
        out.gaps.push_back(def.id);
      }
    }
  }
  sort_expansions(out.records);
  return out;
}

nlohmann::json ExpansionSummary::to_json() const {
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : failures) {
    fails.push_back({{"dialogue_id", f.dialogue_id},
                     {"turn_index", f.turn_index},
                     {"error", f.error},
                     {"message", f.message}});
  }
  nlohmann::json gap_list = nlohmann::json::array();
  for (const auto& [d, t, r] : gaps) {
    gap_list.push_back({{"dialogue_id", d}, {"turn_index", t}, {"relation", relation_name(r)}});
  }
  return {{"run_id", run_id},
          {"positions_total", positions_total},
          {"positions_resumed", positions_resumed},
          {"positions_expanded", positions_expanded},
          {"positions_reasked", positions_reasked},
          {"failures", fails},
          {"gaps", gap_list},
          {"records_new", records_new},
          {"records_total", records_total},
          {"usage", usage.to_json()},
          {"length_ratio_of_sums", length_ratio_of_sums}};
}

ExpansionSummary expand_corpus(const ExpansionJob& job, Backend& backend,
                               const std::filesystem::path& out_path) {
  job.validate();
  ExpansionSummary summary;
  summary.run_id = job.run_id;

  // A position counts as done only when it has a record for every catalog
  // relation. Anything less (a gap, or a block cut short by a crash) is
  // dropped and expanded again.
  ExpansionSet existing;
  std::set<std::pair<std::string, std::size_t>> done;
  if (std::filesystem::exists(out_path)) {
    auto parsed = parse_expansions(read_file(out_path), out_path.string(), true);
    std::map<std::pair<std::string, std::size_t>, std::set<RelationId>> seen;
    for (const auto& r : parsed) {
      if (job.catalog.contains(r.relation)) seen[{r.dialogue_id, r.turn_index}].insert(r.relation);
    }
    for (const auto& [key, rels] : seen) {
      if (rels.size() == job.catalog.size()) done.insert(key);
    }
    for (auto& r : parsed) {
      if (done.count({r.dialogue_id, r.turn_index})) existing.push_back(std::move(r));
    }
    // Rewrite without the torn tail and partial positions so later appends
    // start on a fresh line.
    write_file_atomic(out_path, to_jsonl(existing));
  }

  std::vector<std::pair<const Dialogue*, std::size_t>> todo;
  for (const auto& d : job.dialogues) {
    for (std::size_t pos = 1; pos < d.turns.size(); ++pos) {
      ++summary.positions_total;
      if (done.count({d.id, pos})) {
        ++summary.positions_resumed;
      } else {
        todo.emplace_back(&d, pos);
      }
    }
  }

  RateLimitedBackend limited(backend, job.policy.requests_per_minute);
  std::mutex mu;
  ExpansionSet fresh;
  parallel_for(todo.size(), job.policy.max_in_flight, [&](std::size_t k) {
    const auto& [dlg, pos] = todo[k];
    try {
      auto te = expand_turn(*dlg, pos, job, limited);
      std::lock_guard lock(mu);
      append_file(out_path, to_jsonl(te.records));
      ++summary.positions_expanded;
      if (te.reasked) ++summary.positions_reasked;
      for (auto g : te.gaps) summary.gaps.emplace_back(dlg->id, pos, g);
      summary.usage += te.usage;
      summary.records_new += te.records.size();
      for (auto& r : te.records) fresh.push_back(std::move(r));
    } catch (const Error& e) {
      std::lock_guard lock(mu);
      summary.failures.push_back({dlg->id, pos, std::string(e.name()), e.detail()});
      spdlog::warn("{} turn {}: {}", dlg->id, pos, e.what());
    }
  });

  std::sort(summary.failures.begin(), summary.failures.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dialogue_id, a.turn_index) < std::tie(b.dialogue_id, b.turn_index);
  });
  std::sort(summary.gaps.begin(), summary.gaps.end(), [](const auto& a, const auto& b) {
    return std::tuple(std::get<0>(a), std::get<1>(a), canonical_index(std::get<2>(a))) <
           std::tuple(std::get<0>(b), std::get<1>(b), canonical_index(std::get<2>(b)));
  });

  ExpansionSet all = std::move(existing);
  for (auto& r : fresh) all.push_back(std::move(r));
  sort_expansions(all);
  write_file_atomic(out_path, to_jsonl(all));

  summary.records_total = all.size();
  std::size_t num = 0, den = 0;
  for (const auto& r : all) {
    num += r.char_len;
    den += r.original_char_len;
  }
  summary.length_ratio_of_sums = den == 0 ? 0.0 : static_cast<double>(num) / den;
  return summary;
}

}  // namespace csx

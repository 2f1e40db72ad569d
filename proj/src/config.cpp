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

#include "csx/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "csx/text.hpp"

namespace csx {

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::kConfigError, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw Error(ErrorKind::kConfigError, "unknown key " + where + "." + k);
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

template <typename T>
void read(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

nlohmann::json opt(const std::optional<std::string>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string interpolate_secret(const std::string& value) {
  if (value.size() < 4 || value.rfind("${", 0) != 0 || value.back() != '}') {
    throw Error(ErrorKind::kConfigError,
                "api_key must be an environment reference such as ${OPENAI_API_KEY}");
  }
  const auto name = value.substr(2, value.size() - 3);
  const bool valid = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
  if (!valid) throw Error(ErrorKind::kConfigError, "bad variable name in api_key");
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string();
}

std::string file_stem_for(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ||
                      c == '_';
    out += keep ? c : '_';
  }
  return out.empty() ? "unnamed" : out;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json corpus_j = nlohmann::json::array();
  for (const auto& c : corpus) {
    corpus_j.push_back({{"path", c.path}, {"adapter", c.adapter}, {"source", c.source}});
  }
  return {
      {"run_id", run_id},
      {"seed", seed},
      {"corpus", corpus_j},
      {"sample",
       {{"dialogues_per_source", dialogues_per_source},
        {"min_turns", min_turns},
        {"max_turns", max_turns},
        {"sources", sources}}},
      {"catalog", opt(catalog_path)},
      {"templates", opt(templates_path)},
      {"exemplars", opt(exemplars_path)},
      {"generator",
       {{"model", generator_model},
        {"mode", mode_name(mode)},
        {"temperature", generator_temperature},
        {"max_output_tokens", generator_max_tokens},
        {"context_window", context_window},
        {"reask_gaps", reask_gaps},
        {"per_relation", per_relation}}},
      {"judge",
       {{"model", judge_model},
        {"temperature", judge_temperature},
        {"max_output_tokens", judge_max_tokens},
        {"include_context", judge_include_context ? nlohmann::json(*judge_include_context)
                                                  : nlohmann::json(nullptr)}}},
      {"backend",
       {{"kind", backend},
        {"base_url", base_url},
        {"api_key", api_key},
        {"policy", policy.to_json()}}},
      {"report",
       {{"generator_label", generator_label},
        {"judge_label", judge_label},
        {"ks", ks},
        {"samples_per_relation", samples_per_relation}}},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  try {
    check_keys(j,
               {"run_id", "seed", "corpus", "sample", "catalog", "templates", "exemplars",
                "run_dir", "generator", "judge", "backend", "report"},
               "config");
    read(j, "run_id", c.run_id);
    read(j, "seed", c.seed);
    if (j.contains("corpus")) {
      const auto& cj = j["corpus"];
      if (cj.is_string()) {
        c.corpus.push_back({cj.get<std::string>(), "canonical", ""});
      } else {
        for (const auto& e : cj) {
          if (e.is_string()) {
            c.corpus.push_back({e.get<std::string>(), "canonical", ""});
            continue;
          }
          check_keys(e, {"path", "adapter", "source"}, "corpus[]");
          CorpusInput in;
          in.path = e.at("path").get<std::string>();
          read(e, "adapter", in.adapter);
          read(e, "source", in.source);
          c.corpus.push_back(in);
        }
      }
    }
    if (j.contains("sample")) {
      const auto& s = j["sample"];
      check_keys(s, {"dialogues_per_source", "min_turns", "max_turns", "sources"}, "sample");
      read(s, "dialogues_per_source", c.dialogues_per_source);
      read(s, "min_turns", c.min_turns);
      read(s, "max_turns", c.max_turns);
      read(s, "sources", c.sources);
    }
    read(j, "catalog", c.catalog_path);
    read(j, "templates", c.templates_path);
    read(j, "exemplars", c.exemplars_path);
    read(j, "run_dir", c.run_dir);
    if (j.contains("generator")) {
      const auto& g = j["generator"];
      check_keys(g,
                 {"model", "mode", "temperature", "max_output_tokens", "context_window",
                  "reask_gaps", "per_relation"},
                 "generator");
      read(g, "model", c.generator_model);
      if (g.contains("mode")) c.mode = parse_mode(g["mode"].get<std::string>());
      read(g, "temperature", c.generator_temperature);
      read(g, "max_output_tokens", c.generator_max_tokens);
      read(g, "context_window", c.context_window);
      read(g, "reask_gaps", c.reask_gaps);
      read(g, "per_relation", c.per_relation);
    }
    if (j.contains("judge")) {
      const auto& g = j["judge"];
      check_keys(g, {"model", "temperature", "max_output_tokens", "include_context"}, "judge");
      read(g, "model", c.judge_model);
      read(g, "temperature", c.judge_temperature);
      read(g, "max_output_tokens", c.judge_max_tokens);
      read(g, "include_context", c.judge_include_context);
    }
    if (j.contains("backend")) {
      const auto& b = j["backend"];
      check_keys(b, {"kind", "base_url", "api_key", "policy"}, "backend");
      read(b, "kind", c.backend);
      read(b, "base_url", c.base_url);
      read(b, "api_key", c.api_key);
      if (b.contains("policy")) c.policy = BackendPolicy::from_json(b["policy"]);
    }
    if (j.contains("report")) {
      const auto& r = j["report"];
      check_keys(r, {"generator_label", "judge_label", "ks", "samples_per_relation"}, "report");
      read(r, "generator_label", c.generator_label);
      read(r, "judge_label", c.judge_label);
      read(r, "ks", c.ks);
      read(r, "samples_per_relation", c.samples_per_relation);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigError, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfigError) throw;
    throw Error(ErrorKind::kConfigError, e.detail());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const auto text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigError, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::kConfigError, m); };
  if (run_id.empty() || file_stem_for(run_id) != run_id) {
    fail("run_id must be non-empty and use only letters, digits, '-', '_' and '.'");
  }
  if (dialogues_per_source == 0) fail("sample.dialogues_per_source must be positive");
  if (min_turns < 2 || min_turns > max_turns) fail("sample needs 2 <= min_turns <= max_turns");
  if (generator_model.empty() || judge_model.empty()) fail("model names must be non-empty");
  if (generator_max_tokens == 0 || judge_max_tokens == 0) fail("max_output_tokens must be > 0");
  if (ks.empty()) fail("report.ks must be non-empty");
  for (auto k : ks) {
    if (k == 0) fail("report.ks entries must be positive");
  }
  const bool known_backend = backend == "http" || backend.rfind("mock:", 0) == 0 ||
                             backend.rfind("replay:", 0) == 0 ||
                             backend.rfind("record:", 0) == 0;
  if (!known_backend) fail("unknown backend '" + backend + "'");
  interpolate_secret(api_key);  // syntax only
  try {
    policy.validate();
  } catch (const Error& e) {
    fail(e.detail());
  }
}

std::filesystem::path RunConfig::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

std::filesystem::path RunConfig::run_path() const { return resolve(run_dir) / run_id; }

std::string RunConfig::resolved_api_key() const { return interpolate_secret(api_key); }

std::string RunConfig::effective_generator_label() const {
  if (!generator_label.empty()) return generator_label;
  return std::string(mode == ExpansionMode::OneShot ? "One-Shot " : "Zero-Shot ") +
         generator_model;
}

std::string RunConfig::effective_judge_label() const {
  return judge_label.empty() ? judge_model : judge_label;
}

SamplePlan RunConfig::sample_plan() const {
  SamplePlan plan;
  plan.seed = seed;
  plan.dialogues_per_source = dialogues_per_source;
  plan.min_turns = min_turns;
  plan.max_turns = max_turns;
  for (const auto& s : sources) plan.sources.push_back(Source::parse(s));
  return plan;
}

RelationCatalog RunConfig::load_catalog_or_default() const {
  return catalog_path ? load_catalog(resolve(*catalog_path)) : catalog_default();
}

PromptTemplateSet RunConfig::load_templates_or_default() const {
  auto t = templates_path ? load_templates(resolve(*templates_path)) : default_templates();
  if (judge_include_context) t.evaluation_include_context = *judge_include_context;
  return t;
}

ExpansionJob make_expansion_job(const RunConfig& cfg, std::vector<Dialogue> dialogues) {
  ExpansionJob job;
  job.dialogues = std::move(dialogues);
  job.catalog = cfg.load_catalog_or_default();
  job.mode = cfg.mode;
  if (cfg.mode == ExpansionMode::OneShot) {
    if (!cfg.exemplars_path) {
      throw Error(ErrorKind::kMissingExemplar, "one-shot mode needs \"exemplars\" in the config");
    }
    job.exemplars = load_exemplars(cfg.resolve(*cfg.exemplars_path));
  }
  job.generator_model = cfg.generator_model;
  job.templates = cfg.load_templates_or_default();
  job.policy = cfg.policy;
  job.run_id = cfg.run_id;
  job.context_window = cfg.context_window;
  job.reask_gaps = cfg.reask_gaps;
  job.per_relation = cfg.per_relation;
  job.temperature = cfg.generator_temperature;
  job.max_output_tokens = cfg.generator_max_tokens;
  job.validate();
  return job;
}

JudgeJob make_judge_job(const RunConfig& cfg) {
  JudgeJob job;
  job.catalog = cfg.load_catalog_or_default();
  job.templates = cfg.load_templates_or_default();
  job.judge_model = cfg.judge_model;
  job.run_id = cfg.run_id;
  job.policy = cfg.policy;
  job.temperature = cfg.judge_temperature;
  job.max_output_tokens = cfg.judge_max_tokens;
  job.validate();
  return job;
}

}  // namespace csx

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

#include "csx/relations.hpp"

#include <json.hpp>

#include "csx/error.hpp"
#include "csx/text.hpp"

namespace csx {

namespace {

constexpr std::array<std::string_view, kRelationCount> kNames = {
    "xAttr",  "xWant",  "xNeed",   "xEffect",    "xReact",  "xIntent",
    "oWant",  "oReact", "oEffect", "HinderedBy", "IsAfter", "HasSubEvent",
};

// Definitions column of the relation table, reproduced verbatim (including
// "will influences").
constexpr std::array<std::string_view, kRelationCount> kTemplates = {
    "The response should reflect what {support_speaker} looks like after "
    "going through what is being talked about. {example}",
    "The response should reflect the final objective {support_speaker} "
    "desires to reach following the conversation. {example}",
    "The response should reflect the sequence of events or reasons that need "
    "to happen prior to the conversation. {example}",
    "The response should reflect how the situation will influences "
    "{support_speaker} after the conversation. {example}",
    "The response should reflect how {support_speaker} would react to what is "
    "being talked about. {example}",
    "The response should reflect what {support_speaker} wanted before the "
    "conversation. {example}",
    "The response should reflect the final objective {speaker} desires to "
    "reach following the conversation. {example}",
    "The response should reflect how {speaker} would react to what is being "
    "talked about. {example}",
    "The response should reflect how the situation will influences {speaker} "
    "after the conversation. {example}",
    "The response should state facts why what is being discussed in the "
    "conversation could not happen. {example}",
    "The response should reflect what led to the current situation discussed "
    "with {support_speaker}. {example}",
    "The response should reflect the related causes and consequences specific "
    "to the ongoing conversation. {example}",
};

std::string strip_whitespace(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') out.push_back(c);
  }
  return out;
}

}  // namespace

std::string_view relation_name(RelationId id) {
  return kNames[canonical_index(id)];
}

std::size_t canonical_index(RelationId id) {
  return static_cast<std::size_t>(id);
}

std::optional<RelationId> relation_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kRelationCount; ++i) {
    if (kNames[i] == name) return kAllRelations[i];
  }
  return std::nullopt;
}

RelationId parse_relation_label(std::string_view text) {
  auto s = trim(text);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') {
    s = trim(s.substr(1, s.size() - 2));
  }
  if (starts_with_icase(s, "cs:")) s = trim(s.substr(3));
  const auto compact = strip_whitespace(s);
  for (std::size_t i = 0; i < kRelationCount; ++i) {
    if (iequals(compact, kNames[i])) return kAllRelations[i];
  }
  throw Error(ErrorKind::kUnknownRelation,
              "unknown relation '" + std::string(text) + "'");
}

RelationCatalog::RelationCatalog(std::vector<RelationDef> defs)
    : defs_(std::move(defs)) {
  if (defs_.empty()) {
    throw Error(ErrorKind::kConfigError, "relation catalog is empty");
  }
  std::array<bool, kRelationCount> seen{};
  for (const auto& d : defs_) {
    auto& flag = seen[canonical_index(d.id)];
    if (flag) {
      throw Error(ErrorKind::kConfigError,
                  "duplicate relation " + std::string(relation_name(d.id)) +
                      " in catalog");
    }
    flag = true;
  }
}

bool RelationCatalog::contains(RelationId id) const {
  for (const auto& d : defs_) {
    if (d.id == id) return true;
  }
  return false;
}

std::size_t RelationCatalog::index_of(RelationId id) const {
  for (std::size_t i = 0; i < defs_.size(); ++i) {
    if (defs_[i].id == id) return i;
  }
  throw Error(ErrorKind::kUnknownRelation,
              std::string(relation_name(id)) + " is not in the catalog");
}

std::vector<RelationId> RelationCatalog::ids() const {
  std::vector<RelationId> out;
  out.reserve(defs_.size());
  for (const auto& d : defs_) out.push_back(d.id);
  return out;
}

const RelationCatalog& catalog_default() {
  static const RelationCatalog catalog = [] {
    std::vector<RelationDef> defs;
    for (std::size_t i = 0; i < kRelationCount; ++i) {
      defs.push_back({kAllRelations[i], std::string(kTemplates[i])});
    }
    return RelationCatalog(std::move(defs));
  }();
  return catalog;
}

RelationCatalog catalog_from_json_text(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedRecord,
                std::string("catalog is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) {
    throw Error(ErrorKind::kMalformedRecord, "catalog must be a JSON array");
  }
  std::vector<RelationDef> defs;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("id") || !item.contains("template") ||
        !item["id"].is_string() || !item["template"].is_string()) {
      throw Error(ErrorKind::kMalformedRecord,
                  "catalog entries need string fields \"id\" and \"template\"");
    }
    const auto name = item["id"].get<std::string>();
    auto id = relation_from_name(name);
    if (!id) {
      throw Error(ErrorKind::kUnknownRelation, "unknown relation '" + name + "'");
    }
    defs.push_back({*id, item["template"].get<std::string>()});
  }
  return RelationCatalog(std::move(defs));
}

RelationCatalog load_catalog(const std::filesystem::path& path) {
  return catalog_from_json_text(read_file(path));
}

std::string render_definition(const RelationDef& def,
                              const SpeakerBinding& binding,
                              const std::optional<std::string>& exemplar) {
  if (binding.support_speaker == binding.speaker) {
    throw Error(ErrorKind::kInvalidArgument,
                "speaker binding needs two distinct names");
  }
  std::optional<std::string_view> example;
  if (exemplar) example = *exemplar;
  const std::array<Placeholder, 3> slots = {
      Placeholder{"support_speaker", binding.support_speaker},
      Placeholder{"speaker", binding.speaker},
      Placeholder{"example", example},
  };
  return substitute(def.template_text, slots);
}

}  // namespace csx

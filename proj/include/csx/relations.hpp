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

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace csx {

// The twelve ATOMIC event/social relations, in canonical order.
enum class RelationId {
  xAttr,
  xWant,
  xNeed,
  xEffect,
  xReact,
  xIntent,
  oWant,
  oReact,
  oEffect,
  HinderedBy,
  IsAfter,
  HasSubEvent,
};

inline constexpr std::size_t kRelationCount = 12;

inline constexpr std::array<RelationId, kRelationCount> kAllRelations = {
    RelationId::xAttr,   RelationId::xWant,      RelationId::xNeed,
    RelationId::xEffect, RelationId::xReact,     RelationId::xIntent,
    RelationId::oWant,   RelationId::oReact,     RelationId::oEffect,
    RelationId::HinderedBy, RelationId::IsAfter, RelationId::HasSubEvent,
};

/// Case-sensitive canonical spelling, e.g. "HinderedBy".
std::string_view relation_name(RelationId id);

/// Position in the canonical order, 0-based.
std::size_t canonical_index(RelationId id);

/// Exact (case-sensitive) lookup of a canonical name.
std::optional<RelationId> relation_from_name(std::string_view name);

/// Lenient label parsing for model output and sample tags: case-insensitive,
/// ignores whitespace, surrounding brackets and a leading "cs:" prefix.
/// Throws Error(kUnknownRelation) when nothing matches.
RelationId parse_relation_label(std::string_view text);

struct RelationDef {
  RelationId id;
  std::string template_text;

  bool operator==(const RelationDef&) const = default;
};

/// Who the rendered definitions talk about. `support_speaker` utters the
/// expanded turn; `speaker` is the other interlocutor.
struct SpeakerBinding {
  std::string support_speaker;
  std::string speaker;
};

/// Ordered set of relation definitions. The default catalog has all twelve
/// relations; overrides may carry any non-empty subset with unique ids, which
/// keeps ranking and parsing testable on small catalogs.
class RelationCatalog {
 public:
  explicit RelationCatalog(std::vector<RelationDef> defs);

  std::size_t size() const { return defs_.size(); }
  const RelationDef& operator[](std::size_t i) const { return defs_[i]; }
  auto begin() const { return defs_.begin(); }
  auto end() const { return defs_.end(); }

  bool contains(RelationId id) const;
  /// 0-based position of `id` in this catalog; throws kUnknownRelation.
  std::size_t index_of(RelationId id) const;
  const RelationDef& def(RelationId id) const { return defs_[index_of(id)]; }
  std::vector<RelationId> ids() const;

  bool operator==(const RelationCatalog&) const = default;

 private:
  std::vector<RelationDef> defs_;
};

/// The twelve built-in definition templates in canonical order.
const RelationCatalog& catalog_default();

/// Loads a JSON array of {"id": name, "template": string}.
RelationCatalog load_catalog(const std::filesystem::path& path);
RelationCatalog catalog_from_json_text(std::string_view json_text);

/// Substitutes {support_speaker}, {speaker} and {example} literally (the
/// substituted text is never rescanned). Without an exemplar, {example} and
/// one adjacent space are removed. Any other {name} placeholder throws
/// Error(kUnknownPlaceholder).
std::string render_definition(const RelationDef& def,
                              const SpeakerBinding& binding,
                              const std::optional<std::string>& exemplar);

}  // namespace csx

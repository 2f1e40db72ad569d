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

#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "csx/corpus.hpp"

namespace csx::detail {

// A dialogue as an adapter sees it, before speaker normalization.
struct RawDialogue {
  std::string id;
  Source source;
  std::vector<std::pair<std::string, std::string>> turns;  // (label, text)
};

// Validated dialogue, or the skip reason.
using Validated = std::variant<Dialogue, std::string>;

// `fixed_labels` accepts only user1/user2 spellings (canonical files);
// otherwise labels map to User1/User2 by order of first appearance.
Validated validate(RawDialogue raw, bool fixed_labels);

// Collects dialogues, enforcing unique ids.
class Collector {
 public:
  explicit Collector(IngestResult& out) : out_(out) {}
  void add(RawDialogue raw, bool fixed_labels);
  void malformed() { out_.skips.add("malformed_record"); }

 private:
  IngestResult& out_;
  std::set<std::string> ids_;
};

IngestResult ingest_canonical(std::string_view contents, const Source& source,
                              const IngestOptions& options);
IngestResult ingest_dailydialog(std::string_view contents, const Source& source,
                                const IngestOptions& options);
IngestResult ingest_topicalchat(std::string_view contents, const Source& source,
                                const IngestOptions& options);
IngestResult ingest_empathetic(std::string_view contents, const Source& source,
                               const IngestOptions& options);
IngestResult ingest_personachat(std::string_view contents, const Source& source,
                                const IngestOptions& options);
IngestResult ingest_wizard(std::string_view contents, const Source& source,
                           const IngestOptions& options);

}  // namespace csx::detail

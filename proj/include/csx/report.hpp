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

// Presentation forms: the generator x judge grid, confusion data files and
// sample sheets.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csx/corpus.hpp"
#include "csx/expand.hpp"
#include "csx/metrics.hpp"

namespace csx {

/// Rows are generators, columns judges. Cells without a report render as
/// absent.
class CrossGrid {
 public:
  void add_row(const std::string& generator);
  void add_column(const std::string& judge);
  /// Adds the row and column if needed.
  void set(const std::string& generator, const std::string& judge, MetricsReport report);

  const std::vector<std::string>& rows() const { return rows_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const MetricsReport* cell(const std::string& generator, const std::string& judge) const;

 private:
  std::vector<std::string> rows_;
  std::vector<std::string> columns_;
  std::map<std::pair<std::string, std::string>, MetricsReport> cells_;
};

enum class GridFormat { Text, Csv, Json };

GridFormat parse_grid_format(std::string_view s);

/// Marker for absent cells and metrics (U+2013).
inline constexpr std::string_view kAbsent = "\xE2\x80\x93";

/// Top-1/5/10 at two decimals and MRR at three for every cell.
std::string render_grid(const CrossGrid& grid, GridFormat format);

struct ConfusionFiles {
  std::string counts_csv;
  std::string normalized_csv;  // row-normalized; empty rows stay zero
  std::string json;
};

ConfusionFiles render_confusion(const MetricsReport& report);

struct SampleOptions {
  std::size_t n_per_relation = 1;
  std::uint64_t seed = 0;
  /// Turns of context shown before the response; 0 shows the whole prefix.
  std::size_t context_turns = 3;
  /// Name printed before the response; defaults to the generator model.
  std::string generator_label;
};

/// Seeded uniform sample of expansions per relation, each printed as its
/// context lines, the response and a "[ cs: <relation> ]" tag.
std::string render_samples(const ExpansionSet& expansions, const std::vector<Dialogue>& dialogues,
                           const SampleOptions& options);

}  // namespace csx

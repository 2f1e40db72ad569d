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

// Ranking metrics and length statistics. Everything here is pure.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "csx/evaluate.hpp"
#include "csx/expand.hpp"
#include "csx/relations.hpp"

namespace csx {

/// Rows are true relations, columns the judge's top-1 choice, both in
/// catalog order.
using ConfusionMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Fraction of ranks <= k. Requires a non-empty list and 1 <= k <= m, where
/// m is the number of ranked items.
double top_k_accuracy(std::span<const std::size_t> ranks, std::size_t k,
                      std::size_t m = kRelationCount);

/// Mean of 1/rank.
double mrr(std::span<const std::size_t> ranks);

/// True ranks of the scored (non-failed) records.
std::vector<std::size_t> scored_ranks(std::span<const RankingRecord> records);

/// Failed records are skipped; any other record must carry a complete
/// ranking whose head is in the catalog.
ConfusionMatrix confusion_matrix(std::span<const RankingRecord> records,
                                 const RelationCatalog& catalog);

struct LengthStats {
  std::size_t n = 0;
  double mean_ratio = 0.0;  // mean of char_len / original_char_len
  std::map<RelationId, double> per_relation_mean_ratio;
};

LengthStats length_stats(std::span<const ExpansionRecord> expansions);

/// Average expansion length relative to the original turn reported for the
/// published reference runs; shown next to measured ratios, never used as a check.
inline constexpr double kReferenceLengthRatio = 1.35;

struct MetricsReport {
  std::string generator_label;
  std::string judge_label;
  std::size_t n_records = 0;   // including excluded ones
  std::size_t n_excluded = 0;  // failed judgments
  std::size_t n_completed = 0; // completion policy applied
  std::map<std::size_t, double> top_k;
  double mrr = 0.0;
  std::vector<RelationId> labels;  // confusion axes
  ConfusionMatrix confusion;
  std::optional<LengthStats> lengths;

  /// Reals are rounded here only: two decimals for Top-k, three for MRR.
  nlohmann::json to_json() const;
};

struct ReportOptions {
  std::string generator_label;
  std::string judge_label;
  std::vector<std::size_t> ks = {1, 5, 10};
};

/// Throws kEmptyInput when no record could be scored.
MetricsReport build_report(std::span<const RankingRecord> rankings,
                           const ExpansionSet* expansions, const RelationCatalog& catalog,
                           const ReportOptions& options);

/// Rounds half away from zero to `decimals` places.
double round_to(double value, int decimals);

}  // namespace csx

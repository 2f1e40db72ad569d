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

#include "csx/metrics.hpp"

#include <cmath>
#include <map>

namespace csx {

double top_k_accuracy(std::span<const std::size_t> ranks, std::size_t k, std::size_t m) {
  if (ranks.empty()) throw Error(ErrorKind::kEmptyInput, "no ranks");
  if (k < 1 || k > m) {
    throw Error(ErrorKind::kInvalidArgument,
                "k=" + std::to_string(k) + " outside 1.." + std::to_string(m));
  }
  std::size_t hits = 0;
  for (auto r : ranks) {
    if (r < 1 || r > m) throw Error(ErrorKind::kInvalidArgument, "rank out of range");
    if (r <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw Error(ErrorKind::kEmptyInput, "no ranks");
  // Count per rank first so equal ranks contribute one exact product; a set of
  // all-12 ranks then yields 1/12 to the last bit.
  std::map<std::size_t, std::size_t> counts;
  for (auto r : ranks) {
    if (r < 1) throw Error(ErrorKind::kInvalidArgument, "rank out of range");
    ++counts[r];
  }
  long double sum = 0.0L;
  for (auto [r, n] : counts) sum += static_cast<long double>(n) / static_cast<long double>(r);
  return static_cast<double>(sum / static_cast<long double>(ranks.size()));
}

std::vector<std::size_t> scored_ranks(std::span<const RankingRecord> records) {
  std::vector<std::size_t> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.failed) out.push_back(r.true_rank);
  }
  return out;
}

ConfusionMatrix confusion_matrix(std::span<const RankingRecord> records,
                                 const RelationCatalog& catalog) {
  const auto m = static_cast<Eigen::Index>(catalog.size());
  ConfusionMatrix cm = ConfusionMatrix::Zero(m, m);
  for (const auto& r : records) {
    if (r.failed) continue;
    if (r.ranking.size() != catalog.size()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "incomplete ranking for " + r.dialogue_id + " turn " +
                      std::to_string(r.turn_index));
    }
    const auto row = static_cast<Eigen::Index>(catalog.index_of(r.true_relation));
    const auto col = static_cast<Eigen::Index>(catalog.index_of(r.ranking.front()));
    ++cm(row, col);
  }
  return cm;
}

LengthStats length_stats(std::span<const ExpansionRecord> expansions) {
  if (expansions.empty()) throw Error(ErrorKind::kEmptyInput, "no expansions");
  LengthStats s;
  std::map<RelationId, std::pair<double, std::size_t>> acc;
  double total = 0.0;
  for (const auto& e : expansions) {
    if (e.original_char_len == 0) {
      throw Error(ErrorKind::kZeroLengthOriginal,
                  e.dialogue_id + " turn " + std::to_string(e.turn_index));
    }
    const double ratio =
        static_cast<double>(e.char_len) / static_cast<double>(e.original_char_len);
    total += ratio;
    auto& [sum, n] = acc[e.relation];
    sum += ratio;
    ++n;
  }
  s.n = expansions.size();
  s.mean_ratio = total / static_cast<double>(s.n);
  for (const auto& [rel, p] : acc) {
    s.per_relation_mean_ratio[rel] = p.first / static_cast<double>(p.second);
  }
  return s;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json tk = nlohmann::json::object();
  for (const auto& [k, v] : top_k) tk["top@" + std::to_string(k)] = round_to(v, 2);
  nlohmann::json names = nlohmann::json::array();
  for (auto r : labels) names.push_back(relation_name(r));
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < confusion.cols(); ++j) row.push_back(confusion(i, j));
    rows.push_back(row);
  }
  nlohmann::json j = {{"generator", generator_label},
                      {"judge", judge_label},
                      {"n_records", n_records},
                      {"n_excluded", n_excluded},
                      {"n_completed", n_completed},
                      {"top_k", tk},
                      {"mrr", round_to(mrr, 3)},
                      {"confusion", {{"labels", names}, {"counts", rows}}}};
  if (lengths) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [rel, v] : lengths->per_relation_mean_ratio) {
      per[std::string(relation_name(rel))] = round_to(v, 3);
    }
    j["length"] = {{"n", lengths->n},
                   {"mean_ratio", round_to(lengths->mean_ratio, 3)},
                   {"per_relation_mean_ratio", per},
                   {"reference_mean_ratio", kReferenceLengthRatio}};
  }
  return j;
}

MetricsReport build_report(std::span<const RankingRecord> rankings,
                           const ExpansionSet* expansions, const RelationCatalog& catalog,
                           const ReportOptions& options) {
  MetricsReport rep;
  rep.generator_label = options.generator_label;
  rep.judge_label = options.judge_label;
  rep.n_records = rankings.size();
  for (const auto& r : rankings) {
    if (r.failed) {
      ++rep.n_excluded;
    } else if (r.completion_applied) {
      ++rep.n_completed;
    }
  }
  const auto ranks = scored_ranks(rankings);
  for (auto k : options.ks) rep.top_k[k] = top_k_accuracy(ranks, k, catalog.size());
  rep.mrr = mrr(ranks);
  rep.labels = catalog.ids();
  rep.confusion = confusion_matrix(rankings, catalog);
  if (expansions && !expansions->empty()) rep.lengths = length_stats(*expansions);
  return rep;
}

}  // namespace csx

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

#include "csx/report.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "csx/prompts.hpp"
#include "csx/rng.hpp"
#include "csx/text.hpp"

namespace csx {

void CrossGrid::add_row(const std::string& generator) {
  if (std::find(rows_.begin(), rows_.end(), generator) == rows_.end()) rows_.push_back(generator);
}

void CrossGrid::add_column(const std::string& judge) {
  if (std::find(columns_.begin(), columns_.end(), judge) == columns_.end()) {
    columns_.push_back(judge);
  }
}

void CrossGrid::set(const std::string& generator, const std::string& judge,
                    MetricsReport report) {
  add_row(generator);
  add_column(judge);
  cells_.insert_or_assign({generator, judge}, std::move(report));
}

const MetricsReport* CrossGrid::cell(const std::string& generator,
                                     const std::string& judge) const {
  auto it = cells_.find({generator, judge});
  return it == cells_.end() ? nullptr : &it->second;
}

GridFormat parse_grid_format(std::string_view s) {
  const auto t = to_lower_ascii(trim(s));
  if (t == "text" || t == "txt" || t == "plain") return GridFormat::Text;
  if (t == "csv") return GridFormat::Csv;
  if (t == "json") return GridFormat::Json;
  throw Error(ErrorKind::kInvalidArgument, "unknown grid format '" + std::string(s) + "'");
}

namespace {

constexpr std::array<std::size_t, 3> kGridKs = {1, 5, 10};

// Four rendered fields: Top@1, Top@5, Top@10, MRR.
std::array<std::string, 4> cell_fields(const MetricsReport* rep) {
  std::array<std::string, 4> out;
  for (std::size_t i = 0; i < kGridKs.size(); ++i) {
    out[i] = std::string(kAbsent);
    if (!rep) continue;
    auto it = rep->top_k.find(kGridKs[i]);
    if (it != rep->top_k.end()) out[i] = fmt::format("{:.2f}", round_to(it->second, 2));
  }
  out[3] = rep ? fmt::format("{:.3f}", round_to(rep->mrr, 3)) : std::string(kAbsent);
  return out;
}

std::string pad_right(std::string_view s, std::size_t width) {
  std::string out(s);
  const auto len = utf8_length(s);
  if (len < width) out.append(width - len, ' ');
  return out;
}

std::string pad_left(std::string_view s, std::size_t width) {
  const auto len = utf8_length(s);
  std::string out;
  if (len < width) out.append(width - len, ' ');
  out += s;
  return out;
}

std::string rstrip(std::string s) {
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

constexpr std::size_t kFieldWidth = 6;
constexpr std::size_t kBlockWidth = 4 * kFieldWidth + 3;

std::string grid_text(const CrossGrid& grid) {
  std::size_t w = utf8_length("Expansion");
  for (const auto& r : grid.rows()) w = std::max(w, utf8_length(r));

  std::string top = pad_right("", w);
  std::string sub = pad_right("Expansion", w);
  for (const auto& c : grid.columns()) {
    top += " | " + pad_right(c, kBlockWidth);
    sub += " |";
    for (const char* h : {"Top@1", "Top@5", "Top@10", "MRR"}) sub += " " + pad_left(h, kFieldWidth);
  }
  std::string out = rstrip(top) + "\n" + rstrip(sub) + "\n";
  out += std::string(w, '-');
  for (std::size_t i = 0; i < grid.columns().size(); ++i) {
    out += "-+-" + std::string(kBlockWidth, '-');
  }
  out += "\n";
  for (const auto& r : grid.rows()) {
    std::string line = pad_right(r, w);
    for (const auto& c : grid.columns()) {
      const auto f = cell_fields(grid.cell(r, c));
      line += " |";
      for (const auto& v : f) line += " " + pad_left(v, kFieldWidth);
    }
    out += rstrip(line) + "\n";
  }
  return out;
}

std::string grid_csv(const CrossGrid& grid) {
  std::string out = "generator,judge,top@1,top@5,top@10,mrr\n";
  for (const auto& r : grid.rows()) {
    for (const auto& c : grid.columns()) {
      const auto f = cell_fields(grid.cell(r, c));
      out += csv_field(r) + "," + csv_field(c);
      for (const auto& v : f) out += "," + v;
      out += "\n";
    }
  }
  return out;
}

std::string grid_json(const CrossGrid& grid) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& r : grid.rows()) {
    for (const auto& c : grid.columns()) {
      const auto* rep = grid.cell(r, c);
      const auto f = cell_fields(rep);
      nlohmann::json cell = {{"generator", r}, {"judge", c}, {"present", rep != nullptr}};
      // Numbers stay numbers; absent fields carry the absent marker.
      auto put = [&](const char* key, const std::string& v) {
        if (v == kAbsent) {
          cell[key] = std::string(kAbsent);
        } else {
          cell[key] = std::stod(v);
        }
      };
      put("top@1", f[0]);
      put("top@5", f[1]);
      put("top@10", f[2]);
      put("mrr", f[3]);
      if (rep) {
        cell["n_records"] = rep->n_records;
        cell["n_excluded"] = rep->n_excluded;
        cell["n_completed"] = rep->n_completed;
      }
      cells.push_back(cell);
    }
  }
  nlohmann::json j = {{"generators", grid.rows()}, {"judges", grid.columns()}, {"cells", cells}};
  return j.dump(2) + "\n";
}

}  // namespace

std::string render_grid(const CrossGrid& grid, GridFormat format) {
  switch (format) {
    case GridFormat::Text:
      return grid_text(grid);
    case GridFormat::Csv:
      return grid_csv(grid);
    case GridFormat::Json:
      return grid_json(grid);
  }
  return {};
}

ConfusionFiles render_confusion(const MetricsReport& report) {
  const auto& cm = report.confusion;
  std::string header = "true\\top1";
  for (auto r : report.labels) header += "," + std::string(relation_name(r));
  header += "\n";

  ConfusionFiles out;
  out.counts_csv = header;
  out.normalized_csv = header;
  nlohmann::json counts = nlohmann::json::array();
  nlohmann::json normalized = nlohmann::json::array();
  for (Eigen::Index i = 0; i < cm.rows(); ++i) {
    const auto name = std::string(relation_name(report.labels[static_cast<std::size_t>(i)]));
    const auto row_sum = cm.row(i).sum();
    out.counts_csv += name;
    out.normalized_csv += name;
    nlohmann::json crow = nlohmann::json::array();
    nlohmann::json nrow = nlohmann::json::array();
    for (Eigen::Index j = 0; j < cm.cols(); ++j) {
      const double p =
          row_sum == 0 ? 0.0 : static_cast<double>(cm(i, j)) / static_cast<double>(row_sum);
      out.counts_csv += "," + std::to_string(cm(i, j));
      out.normalized_csv += fmt::format(",{:.4f}", round_to(p, 4));
      crow.push_back(cm(i, j));
      nrow.push_back(round_to(p, 4));
    }
    out.counts_csv += "\n";
    out.normalized_csv += "\n";
    counts.push_back(crow);
    normalized.push_back(nrow);
  }
  nlohmann::json labels = nlohmann::json::array();
  for (auto r : report.labels) labels.push_back(relation_name(r));
  nlohmann::json j = {{"generator", report.generator_label},
                      {"judge", report.judge_label},
                      {"rows", "true relation"},
                      {"columns", "top-1 prediction"},
                      {"labels", labels},
                      {"counts", counts},
                      {"normalized", normalized}};
  out.json = j.dump(2) + "\n";
  return out;
}

std::string render_samples(const ExpansionSet& expansions, const std::vector<Dialogue>& dialogues,
                           const SampleOptions& options) {
  ExpansionSet sorted = expansions;
  sort_expansions(sorted);
  std::map<RelationId, std::vector<const ExpansionRecord*>> by_rel;
  for (const auto& e : sorted) by_rel[e.relation].push_back(&e);

  std::string out;
  for (auto rel : kAllRelations) {
    auto it = by_rel.find(rel);
    if (it == by_rel.end()) continue;
    auto& pool = it->second;
    std::uint64_t mix = options.seed ^ fnv1a(relation_name(rel));
    Xoshiro256 rng(splitmix64(mix));
    const auto n = std::min(options.n_per_relation, pool.size());
    // Partial Fisher-Yates: the first n slots are a uniform sample.
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    std::vector<const ExpansionRecord*> picked(pool.begin(), pool.begin() + n);
    std::sort(picked.begin(), picked.end(), [](const auto* a, const auto* b) {
      return std::tie(a->dialogue_id, a->turn_index) < std::tie(b->dialogue_id, b->turn_index);
    });
    for (const auto* e : picked) {
      const auto& d = find_dialogue(dialogues, e->dialogue_id);
      const auto context = expansion_context(d, e->turn_index, options.context_turns);
      if (!out.empty()) out += "\n";
      for (const auto& t : context) {
        out += std::string(speaker_display(t.speaker)) + ": " + t.text + "\n";
      }
      const auto& label =
          options.generator_label.empty() ? e->generator_model : options.generator_label;
      out += label + ": " + e->text + "\n";
      out += "[ cs: " + std::string(relation_name(rel)) + " ]\n";
    }
  }
  return out;
}

}  // namespace csx

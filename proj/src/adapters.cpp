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

// Thin mappings from each dataset's distributed layout onto RawDialogue.
// Speaker labels are whatever the dataset uses; validate() normalizes them.

#include <charconv>
#include <map>

#include <json.hpp>

#include "adapters_internal.hpp"
#include "csx/error.hpp"
#include "csx/text.hpp"

namespace csx::detail {

namespace {

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::kMalformedRecord,
              "line " + std::to_string(line_no) + ": " + what);
}

void on_malformed(const IngestOptions& options, Collector& c, std::size_t line_no,
                  const std::string& what) {
  if (options.strict) fail_line(line_no, what);
  c.malformed();
}

nlohmann::json parse_document(std::string_view contents) {
  try {
    return nlohmann::json::parse(contents);
  } catch (const nlohmann::json::exception& e) {
    fail_line(1, e.what());
  }
}

std::optional<long> parse_long(std::string_view s) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

// dialogues_text.txt: one dialogue per line, utterances terminated by
// "__eou__"; the two parties alternate.
IngestResult ingest_dailydialog(std::string_view contents, const Source& source,
                                const IngestOptions&) {
  IngestResult result;
  Collector collector(result);
  std::size_t line_no = 0;
  for (auto line : split_lines(contents)) {
    ++line_no;
    if (trim(line).empty()) continue;
    RawDialogue raw{"dailydialog-" + std::to_string(line_no), source, {}};
    std::string_view rest = line;
    std::size_t k = 0;
    for (;;) {
      auto pos = rest.find("__eou__");
      auto utt = trim(rest.substr(0, pos));
      if (pos == std::string_view::npos) {
        if (!utt.empty()) raw.turns.emplace_back(k % 2 ? "B" : "A", std::string(utt));
        break;
      }
      raw.turns.emplace_back(k % 2 ? "B" : "A", std::string(utt));
      ++k;
      rest = rest.substr(pos + 7);
    }
    collector.add(std::move(raw), false);
  }
  return result;
}

// Topical-Chat conversations JSON: {conv_id: {"content": [{"message", "agent"}]}}.
IngestResult ingest_topicalchat(std::string_view contents, const Source& source,
                                const IngestOptions& options) {
  IngestResult result;
  Collector collector(result);
  const auto doc = parse_document(contents);
  if (!doc.is_object()) fail_line(1, "expected a JSON object keyed by conversation id");
  for (const auto& [conv_id, conv] : doc.items()) {
    if (!conv.is_object() || !conv.contains("content") || !conv["content"].is_array()) {
      on_malformed(options, collector, 1, "conversation " + conv_id + " lacks \"content\"");
      continue;
    }
    RawDialogue raw{conv_id, source, {}};
    bool ok = true;
    for (const auto& m : conv["content"]) {
      if (!m.is_object() || !m.contains("message") || !m.contains("agent") ||
          !m["message"].is_string() || !m["agent"].is_string()) {
        ok = false;
        break;
      }
      raw.turns.emplace_back(m["agent"].get<std::string>(), m["message"].get<std::string>());
    }
    if (!ok) {
      on_malformed(options, collector, 1, "conversation " + conv_id + " has a bad message");
      continue;
    }
    collector.add(std::move(raw), false);
  }
  return result;
}

// EmpatheticDialogues CSV: conv_id,utterance_idx,context,prompt,speaker_idx,
// utterance,...; commas inside fields are escaped as "_comma_".
IngestResult ingest_empathetic(std::string_view contents, const Source& source,
                               const IngestOptions& options) {
  IngestResult result;
  Collector collector(result);
  struct Conv {
    std::map<long, std::pair<std::string, std::string>> utterances;
  };
  std::vector<std::string> order;
  std::map<std::string, Conv> convs;
  std::size_t line_no = 0;
  for (auto line : split_lines(contents)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1 && line.rfind("conv_id", 0) == 0) continue;
    const auto fields = split(line, ',');
    std::optional<long> idx;
    if (fields.size() >= 6) idx = parse_long(trim(fields[1]));
    if (!idx) {
      on_malformed(options, collector, line_no, "expected conv_id,utterance_idx,...,utterance");
      continue;
    }
    const std::string conv_id(trim(fields[0]));
    if (!convs.count(conv_id)) order.push_back(conv_id);
    convs[conv_id].utterances[*idx] = {std::string(trim(fields[4])),
                                       replace_all(std::string(fields[5]), "_comma_", ",")};
  }
  for (const auto& id : order) {
    RawDialogue raw{id, source, {}};
    for (auto& [_, u] : convs[id].utterances) raw.turns.push_back(u);
    collector.add(std::move(raw), false);
  }
  return result;
}

// ConvAI2 / Persona-Chat text format: numbered lines restart at 1 for every
// dialogue; persona lines are skipped; dialogue lines hold
// "partner<TAB>self[<TAB><TAB>candidates]".
IngestResult ingest_personachat(std::string_view contents, const Source& source,
                                const IngestOptions& options) {
  IngestResult result;
  Collector collector(result);
  std::optional<RawDialogue> current;
  std::size_t count = 0;
  auto flush = [&] {
    if (current) collector.add(std::move(*current), false);
    current.reset();
  };
  std::size_t line_no = 0;
  for (auto line : split_lines(contents)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto space = line.find(' ');
    const auto number = parse_long(line.substr(0, space));
    if (!number || space == std::string_view::npos) {
      on_malformed(options, collector, line_no, "expected a leading line number");
      continue;
    }
    if (*number == 1) {
      flush();
      current = RawDialogue{"personachat-" + std::to_string(++count), source, {}};
    }
    if (!current) {
      on_malformed(options, collector, line_no, "dialogue does not start at line number 1");
      continue;
    }
    const auto body = line.substr(space + 1);
    if (body.rfind("your persona:", 0) == 0 || body.rfind("partner's persona:", 0) == 0) {
      continue;
    }
    const auto cols = split(body, '\t');
    if (!trim(cols[0]).empty() && trim(cols[0]) != "__SILENCE__") {
      current->turns.emplace_back("partner", std::string(cols[0]));
    }
    if (cols.size() > 1) current->turns.emplace_back("self", std::string(cols[1]));
  }
  flush();
  return result;
}

// Wizard of Wikipedia JSON: array of {"dialog": [{"speaker", "text"}]}.
IngestResult ingest_wizard(std::string_view contents, const Source& source,
                           const IngestOptions& options) {
  IngestResult result;
  Collector collector(result);
  const auto doc = parse_document(contents);
  if (!doc.is_array()) fail_line(1, "expected a JSON array of dialogues");
  std::size_t n = 0;
  for (const auto& item : doc) {
    ++n;
    if (!item.is_object() || !item.contains("dialog") || !item["dialog"].is_array()) {
      on_malformed(options, collector, 1, "entry " + std::to_string(n) + " lacks \"dialog\"");
      continue;
    }
    std::string id = "wow-" + std::to_string(n);
    if (item.contains("id") && item["id"].is_string()) id = item["id"].get<std::string>();
    RawDialogue raw{id, source, {}};
    bool ok = true;
    for (const auto& t : item["dialog"]) {
      if (!t.is_object() || !t.contains("speaker") || !t.contains("text") ||
          !t["speaker"].is_string() || !t["text"].is_string()) {
        ok = false;
        break;
      }
      // Labels look like "0_Wizard" / "1_Apprentice"; the role is what matters.
      auto label = t["speaker"].get<std::string>();
      if (auto us = label.find('_'); us != std::string::npos) label = label.substr(us + 1);
      raw.turns.emplace_back(label, t["text"].get<std::string>());
    }
    if (!ok) {
      on_malformed(options, collector, 1, "entry " + std::to_string(n) + " has a bad turn");
      continue;
    }
    collector.add(std::move(raw), false);
  }
  return result;
}

}  // namespace csx::detail

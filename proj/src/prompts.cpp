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

#include "csx/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <regex>

#include "csx/digest.hpp"
#include "csx/error.hpp"
#include "csx/text.hpp"

namespace csx {

namespace {

constexpr std::array<std::pair<PromptSection, std::string_view>, 5> kSectionNames = {{
    {PromptSection::Preamble, "preamble"},
    {PromptSection::Definitions, "definitions"},
    {PromptSection::Context, "context"},
    {PromptSection::Candidate, "candidate"},
    {PromptSection::Instruction, "instruction"},
}};

PromptSection section_from_name(const std::string& name) {
  for (const auto& [s, n] : kSectionNames) {
    if (n == name) return s;
  }
  throw Error(ErrorKind::kConfigError, "unknown prompt section '" + name + "'");
}

std::size_t count_of(const std::vector<PromptSection>& layout, PromptSection s) {
  return static_cast<std::size_t>(std::count(layout.begin(), layout.end(), s));
}

void validate_layout(const std::vector<PromptSection>& layout, bool evaluation) {
  const auto where = evaluation ? "evaluation_layout" : "expansion_layout";
  auto require = [&](PromptSection s, std::size_t lo, std::size_t hi) {
    const auto n = count_of(layout, s);
    if (n < lo || n > hi) {
      throw Error(ErrorKind::kConfigError,
                  std::string(where) + ": section '" + std::string(section_name(s)) +
                      "' must appear " + (lo == hi ? "exactly once" : "at most once"));
    }
  };
  require(PromptSection::Preamble, 0, 1);
  require(PromptSection::Definitions, 1, 1);
  require(PromptSection::Instruction, 1, 1);
  if (evaluation) {
    require(PromptSection::Candidate, 1, 1);
    require(PromptSection::Context, 0, 1);
  } else {
    require(PromptSection::Context, 1, 1);
    require(PromptSection::Candidate, 0, 0);
  }
}

nlohmann::json layout_json(const std::vector<PromptSection>& layout) {
  nlohmann::json j = nlohmann::json::array();
  for (auto s : layout) j.push_back(section_name(s));
  return j;
}

std::string fill(std::string_view text, std::size_t count, const SpeakerBinding& b,
                 std::string_view missing = {}) {
  const auto count_str = std::to_string(count);
  const std::array<Placeholder, 4> slots = {
      Placeholder{"count", count_str},
      Placeholder{"speaker", b.speaker},
      Placeholder{"support_speaker", b.support_speaker},
      Placeholder{"missing", missing},
  };
  return substitute(text, slots);
}

std::string render_context(std::span<const Turn> context) {
  std::string out;
  for (const auto& t : context) {
    if (!out.empty()) out += '\n';
    out += speaker_display(t.speaker);
    out += ": ";
    out += t.text;
  }
  return out;
}

std::string with_heading(const std::string& heading, const std::string& body) {
  return heading.empty() ? body : heading + "\n" + body;
}

BuiltPrompt finish(std::vector<std::string> blocks) {
  BuiltPrompt p;
  for (auto& b : blocks) {
    if (b.empty()) continue;
    if (!p.text.empty()) p.text += "\n\n";
    p.text += b;
  }
  p.char_count = utf8_length(p.text);
  return p;
}

}  // namespace

std::string_view section_name(PromptSection s) {
  for (const auto& [sec, n] : kSectionNames) {
    if (sec == s) return n;
  }
  return "?";
}

PromptTemplateSet default_templates() {
  PromptTemplateSet t;
  t.expansion_preamble =
      "You are given a conversation between {speaker} and {support_speaker} and a "
      "numbered list of {count} commonsense definitions. For each definition, write "
      "one alternative response that {support_speaker} could say next in the "
      "conversation so that the response follows that definition. Keep every "
      "response concise, natural and consistent with the conversation.";
  t.expansion_layout = {PromptSection::Preamble, PromptSection::Definitions,
                        PromptSection::Context, PromptSection::Instruction};
  t.expansion_instruction =
      "Return exactly {count} responses as a numbered list in the same order as "
      "the definitions, one per line, formatted as \"1. <response>\" up to "
      "\"{count}. <response>\". Write only the response text after each number.";
  t.reask_instruction =
      "Return only the responses numbered {missing}, using the same numbering as "
      "the definitions above, one per line.";
  t.evaluation_preamble =
      "You are given a conversation, a candidate next response by {support_speaker} "
      "and a numbered list of {count} commonsense definitions. Rank all of the "
      "definitions by how well the candidate response fits each of them, from the "
      "best fit to the worst fit.";
  t.evaluation_layout = {PromptSection::Preamble, PromptSection::Context,
                         PromptSection::Candidate, PromptSection::Definitions,
                         PromptSection::Instruction};
  t.evaluation_instruction =
      "Answer only with the ranking of the {count} definition identifiers in "
      "descending order of fit, for example: 3 > 7 > 1 > 12. Include every "
      "identifier exactly once and do not explain your answer.";
  t.evaluation_include_context = true;
  t.definitions_heading = "Definitions:";
  t.context_heading = "Conversation:";
  t.candidate_heading = "Candidate response:";
  return t;
}

nlohmann::json PromptTemplateSet::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  j["expansion_preamble"] = expansion_preamble;
  j["expansion_layout"] = layout_json(expansion_layout);
  j["expansion_instruction"] = expansion_instruction;
  j["reask_instruction"] = reask_instruction;
  j["evaluation_preamble"] = evaluation_preamble;
  j["evaluation_layout"] = layout_json(evaluation_layout);
  j["evaluation_instruction"] = evaluation_instruction;
  j["evaluation_include_context"] = evaluation_include_context;
  j["definitions_heading"] = definitions_heading;
  j["context_heading"] = context_heading;
  j["candidate_heading"] = candidate_heading;
  return j;
}

PromptTemplateSet PromptTemplateSet::from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw Error(ErrorKind::kConfigError, "prompt template file must be a JSON object");
  }
  auto t = default_templates();
  auto str = [&](const char* key, std::string& field) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) {
      throw Error(ErrorKind::kConfigError, std::string(key) + " must be a string");
    }
    field = j[key].get<std::string>();
  };
  auto layout = [&](const char* key, std::vector<PromptSection>& field) {
    if (!j.contains(key)) return;
    if (!j[key].is_array()) {
      throw Error(ErrorKind::kConfigError, std::string(key) + " must be an array");
    }
    field.clear();
    for (const auto& s : j[key]) {
      if (!s.is_string()) {
        throw Error(ErrorKind::kConfigError, std::string(key) + " entries must be strings");
      }
      field.push_back(section_from_name(s.get<std::string>()));
    }
  };
  str("version", t.version);
  str("expansion_preamble", t.expansion_preamble);
  layout("expansion_layout", t.expansion_layout);
  str("expansion_instruction", t.expansion_instruction);
  str("reask_instruction", t.reask_instruction);
  str("evaluation_preamble", t.evaluation_preamble);
  layout("evaluation_layout", t.evaluation_layout);
  str("evaluation_instruction", t.evaluation_instruction);
  if (j.contains("evaluation_include_context")) {
    if (!j["evaluation_include_context"].is_boolean()) {
      throw Error(ErrorKind::kConfigError, "evaluation_include_context must be a boolean");
    }
    t.evaluation_include_context = j["evaluation_include_context"].get<bool>();
  }
  str("definitions_heading", t.definitions_heading);
  str("context_heading", t.context_heading);
  str("candidate_heading", t.candidate_heading);
  validate_layout(t.expansion_layout, false);
  validate_layout(t.evaluation_layout, true);
  return t;
}

std::string PromptTemplateSet::sha256() const { return sha256_hex(to_json().dump()); }

PromptTemplateSet load_templates(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigError,
                path.string() + " is not valid JSON: " + e.what());
  }
  return PromptTemplateSet::from_json(j);
}

SpeakerBinding binding_for(const Dialogue& dialogue, std::size_t position) {
  if (position >= dialogue.turns.size()) {
    throw Error(ErrorKind::kInvalidArgument, "position out of range for " + dialogue.id);
  }
  const auto responder = dialogue.turns[position].speaker;
  return {std::string(speaker_display(responder)),
          std::string(speaker_display(other(responder)))};
}

BuiltPrompt build_expansion_prompt(std::span<const Turn> context,
                                   const RelationCatalog& catalog,
                                   const SpeakerBinding& binding,
                                   const PromptTemplateSet& templates,
                                   const std::map<RelationId, std::string>* exemplars) {
  if (context.empty()) throw Error(ErrorKind::kEmptyContext, "expansion context is empty");
  std::string defs;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    std::optional<std::string> exemplar;
    if (exemplars) {
      if (auto it = exemplars->find(catalog[i].id); it != exemplars->end()) {
        exemplar = it->second;
      }
    }
    if (i) defs += '\n';
    defs += std::to_string(i + 1) + ". " + render_definition(catalog[i], binding, exemplar);
  }
  std::vector<std::string> blocks;
  for (auto section : templates.expansion_layout) {
    switch (section) {
      case PromptSection::Preamble:
        blocks.push_back(fill(templates.expansion_preamble, catalog.size(), binding));
        break;
      case PromptSection::Definitions:
        blocks.push_back(with_heading(templates.definitions_heading, defs));
        break;
      case PromptSection::Context:
        blocks.push_back(with_heading(templates.context_heading, render_context(context)));
        break;
      case PromptSection::Instruction:
        blocks.push_back(fill(templates.expansion_instruction, catalog.size(), binding));
        break;
      case PromptSection::Candidate:
        break;
    }
  }
  return finish(std::move(blocks));
}

BuiltPrompt build_reask_prompt(const BuiltPrompt& original,
                               std::span<const std::size_t> missing,
                               const RelationCatalog& catalog,
                               const SpeakerBinding& binding,
                               const PromptTemplateSet& templates) {
  std::string list;
  for (std::size_t i = 0; i < missing.size(); ++i) {
    if (i) list += ", ";
    list += std::to_string(missing[i]);
  }
  return finish({original.text,
                 fill(templates.reask_instruction, catalog.size(), binding, list)});
}

BuiltPrompt build_evaluation_prompt(std::span<const Turn> context,
                                    std::string_view candidate,
                                    const RelationCatalog& catalog,
                                    const SpeakerBinding& binding,
                                    const PromptTemplateSet& templates) {
  if (trim(candidate).empty()) {
    throw Error(ErrorKind::kEmptyCandidate, "candidate response is empty");
  }
  std::string defs;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (i) defs += '\n';
    defs += "[" + std::to_string(i + 1) + "] " +
            render_definition(catalog[i], binding, std::nullopt);
  }
  std::vector<std::string> blocks;
  for (auto section : templates.evaluation_layout) {
    switch (section) {
      case PromptSection::Preamble:
        blocks.push_back(fill(templates.evaluation_preamble, catalog.size(), binding));
        break;
      case PromptSection::Context:
        if (templates.evaluation_include_context && !context.empty()) {
          blocks.push_back(with_heading(templates.context_heading, render_context(context)));
        }
        break;
      case PromptSection::Candidate:
        blocks.push_back(with_heading(templates.candidate_heading, std::string(trim(candidate))));
        break;
      case PromptSection::Definitions:
        blocks.push_back(with_heading(templates.definitions_heading, defs));
        break;
      case PromptSection::Instruction:
        blocks.push_back(fill(templates.evaluation_instruction, catalog.size(), binding));
        break;
    }
  }
  return finish(std::move(blocks));
}

// ---------------------------------------------------------------------------
// Reply parsing

namespace {

const std::string& relation_alternation() {
  static const std::string alt = [] {
    std::string s;
    for (auto id : kAllRelations) {
      if (!s.empty()) s += '|';
      s += relation_name(id);
    }
    return s;
  }();
  return alt;
}

// "1. text", "1) text", "(1) text", "1: text", "1 - text", "**1.** text",
// "Response 1: text".
const std::regex& item_regex() {
  static const std::regex re(
      R"(^\s*(?:[*_]{1,2})?(?:#+\s*)?(?:(?:response|item)\s*#?\s*)?\(?(\d{1,3})(?:\)|\.|:|\s+-|\s*–)(?:[*_]{1,2})?(?:\s+|$)(.*)$)",
      std::regex::icase | std::regex::ECMAScript);
  return re;
}

const std::regex& echo_regex() {
  static const std::regex re(
      "^(?:[*_]{1,2})?[\\[(]?\\s*(?:cs:\\s*)?(?:" + relation_alternation() +
          ")\\s*[\\])]?(?:[*_]{1,2})?\\s*(?::|-|–|—)?(?:[*_]{1,2})?\\s+(.*)$",
      std::regex::icase | std::regex::ECMAScript);
  return re;
}

std::string clean_item_text(std::string text) {
  std::smatch m;
  if (std::regex_match(text, m, echo_regex())) text = m[1].str();
  auto t = std::string(trim(text));
  // Whole-item emphasis or quotes.
  for (std::string_view wrap : {"**", "__", "\"", "“"}) {
    if (t.size() >= 2 * wrap.size() && t.rfind(wrap, 0) == 0) {
      std::string_view close = wrap == "“" ? std::string_view("”") : wrap;
      if (t.size() >= wrap.size() + close.size() &&
          t.compare(t.size() - close.size(), close.size(), close) == 0) {
        t = std::string(trim(t.substr(wrap.size(), t.size() - wrap.size() - close.size())));
      }
    }
  }
  return t;
}

std::optional<ExpansionReply> parse_json_list(std::string_view raw, std::size_t expected) {
  auto t = trim(raw);
  if (t.empty() || t.front() != '[') return std::nullopt;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(t);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (!j.is_array() || j.empty()) return std::nullopt;
  ExpansionReply reply;
  std::size_t index = 0;
  for (const auto& item : j) {
    ++index;
    if (!item.is_string()) return std::nullopt;
    if (index > expected) {
      reply.warnings.push_back("index " + std::to_string(index) + " out of range");
      continue;
    }
    auto text = clean_item_text(item.get<std::string>());
    if (text.empty()) {
      reply.warnings.push_back("item " + std::to_string(index) + " is empty");
      continue;
    }
    reply.responses.push_back({index, std::move(text)});
  }
  return reply;
}

struct Token {
  bool is_index;
  std::size_t index;  // when is_index
  RelationId id;      // otherwise
};

std::vector<Token> tokens_in(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto alnum = [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  while (i < s.size()) {
    if (!alnum(s[i])) {
      ++i;
      continue;
    }
    auto j = i;
    while (j < s.size() && alnum(s[j])) ++j;
    const auto word = s.substr(i, j - i);
    const bool digits = std::all_of(word.begin(), word.end(),
                                    [](char c) { return c >= '0' && c <= '9'; });
    // Skip decimals such as "0.5".
    const bool decimal = (i > 0 && s[i - 1] == '.' && i > 1 && s[i - 2] >= '0' &&
                          s[i - 2] <= '9') ||
                         (j + 1 < s.size() && s[j] == '.' && s[j + 1] >= '0' &&
                          s[j + 1] <= '9');
    if (digits && !decimal && word.size() <= 3) {
      out.push_back({true, static_cast<std::size_t>(std::stoul(std::string(word))),
                     RelationId::xAttr});
    } else if (!digits) {
      for (auto id : kAllRelations) {
        if (iequals(word, relation_name(id))) {
          out.push_back({false, 0, id});
          break;
        }
      }
    }
    i = j;
  }
  return out;
}

std::string_view after_last_colon(std::string_view line) {
  auto pos = line.rfind(':');
  return pos == std::string_view::npos ? line : line.substr(pos + 1);
}

}  // namespace

ExpansionReply parse_expansion_reply(std::string_view raw, std::size_t expected_count) {
  ExpansionReply reply;
  if (auto json_reply = parse_json_list(raw, expected_count)) {
    reply = std::move(*json_reply);
  } else {
    std::map<std::size_t, std::string> items;
    std::optional<std::size_t> current;
    bool awaiting_text = false;
    for (auto line_view : split_lines(raw)) {
      const auto trimmed = trim(line_view);
      if (trimmed.rfind("```", 0) == 0 || trimmed.empty()) {
        current.reset();
        awaiting_text = false;
        continue;
      }
      const std::string line(line_view);
      std::smatch m;
      if (std::regex_match(line, m, item_regex())) {
        const auto index = static_cast<std::size_t>(std::stoul(m[1].str()));
        current.reset();
        awaiting_text = false;
        if (index < 1 || index > expected_count) {
          reply.warnings.push_back("index " + std::to_string(index) + " out of range");
          continue;
        }
        if (items.count(index)) {
          reply.warnings.push_back("duplicate index " + std::to_string(index) +
                                   ", keeping the first");
          continue;
        }
        items[index] = clean_item_text(m[2].str());
        current = index;
        awaiting_text = items[index].empty();
        continue;
      }
      // Indented lines continue the current item; a bare number line may put
      // its text on the next line.
      const bool indented = line_view.front() == ' ' || line_view.front() == '\t';
      if (current && (awaiting_text || indented)) {
        auto& text = items[*current];
        if (!text.empty()) text += ' ';
        text += clean_item_text(std::string(trimmed));
        awaiting_text = false;
      }
    }
    for (auto& [index, text] : items) {
      if (text.empty()) {
        reply.warnings.push_back("item " + std::to_string(index) + " is empty");
        continue;
      }
      reply.responses.push_back({index, std::move(text)});
    }
  }
  if (reply.responses.empty()) {
    throw Error(ErrorKind::kUnparseableReply, "no numbered responses found");
  }
  std::size_t next = 0;
  for (std::size_t i = 1; i <= expected_count; ++i) {
    if (next < reply.responses.size() && reply.responses[next].index == i) {
      ++next;
    } else {
      reply.gaps.push_back(i);
    }
  }
  return reply;
}

RankingReply parse_ranking_reply(std::string_view raw, const RelationCatalog& catalog) {
  const auto lines = split_lines(raw);
  std::vector<Token> tokens;

  // 1. Explicit "a > b > c" orderings. Text before the first '>' only
  //    contributes its last token, which drops chatty lead-ins.
  for (auto line : lines) {
    if (line.find('>') == std::string_view::npos) continue;
    std::size_t start = 0;
    bool first = true;
    while (start <= line.size()) {
      auto pos = line.find('>', start);
      if (pos == std::string_view::npos) pos = line.size();
      auto piece = tokens_in(line.substr(start, pos - start));
      if (first) {
        if (!piece.empty()) tokens.push_back(piece.back());
        first = false;
      } else {
        tokens.insert(tokens.end(), piece.begin(), piece.end());
      }
      start = pos + 1;
    }
  }

  // 2. Numbered or bulleted lists: first token of each entry.
  if (tokens.empty()) {
    static const std::regex list_re(R"(^\s*(?:\d{1,3}[.)]|[-*•])\s+(.*)$)");
    for (auto line : lines) {
      const std::string s(line);
      std::smatch m;
      if (!std::regex_match(s, m, list_re)) continue;
      auto piece = tokens_in(m[1].str());
      if (!piece.empty()) tokens.push_back(piece.front());
    }
  }

  // 3. Separator-delimited sequences ("3, 7, 1"). A lone number in prose is
  //    not an ordering, so single-token lines only count when they are the
  //    whole reply.
  if (tokens.empty()) {
    for (auto line : lines) {
      auto piece = tokens_in(after_last_colon(line));
      if (piece.size() >= 2) tokens.insert(tokens.end(), piece.begin(), piece.end());
    }
    if (tokens.empty()) {
      std::vector<std::string_view> nonblank;
      for (auto line : lines) {
        if (!trim(line).empty()) nonblank.push_back(line);
      }
      if (nonblank.size() == 1) {
        auto body = trim(after_last_colon(nonblank.front()));
        auto piece = tokens_in(body);
        const bool bare = piece.size() == 1 &&
                          std::all_of(body.begin(), body.end(), [](char c) {
                            return std::isalnum(static_cast<unsigned char>(c)) ||
                                   c == '[' || c == ']' || c == '.' || c == ' ';
                          });
        if (bare) tokens = piece;
      }
    }
  }

  if (tokens.empty()) {
    throw Error(ErrorKind::kUnparseableReply, "no ranking found in reply");
  }

  RankingReply reply;
  std::vector<bool> seen(kRelationCount, false);
  for (const auto& t : tokens) {
    RelationId id;
    if (t.is_index) {
      if (t.index < 1 || t.index > catalog.size()) {
        reply.warnings.push_back("index " + std::to_string(t.index) + " out of range");
        continue;
      }
      id = catalog[t.index - 1].id;
    } else {
      if (!catalog.contains(t.id)) {
        reply.warnings.push_back(std::string(relation_name(t.id)) + " is not in the catalog");
        continue;
      }
      id = t.id;
    }
    if (seen[canonical_index(id)]) {
      reply.warnings.push_back("duplicate " + std::string(relation_name(id)) +
                               ", keeping the first");
      continue;
    }
    seen[canonical_index(id)] = true;
    reply.ranking.push_back(id);
  }
  if (reply.ranking.empty()) {
    throw Error(ErrorKind::kUnparseableReply, "reply names no relation of the catalog");
  }
  return reply;
}

std::string format_ranking(std::span<const RelationId> ranking,
                           const RelationCatalog& catalog) {
  std::string out;
  for (auto id : ranking) {
    if (!out.empty()) out += " > ";
    out += std::to_string(catalog.index_of(id) + 1);
  }
  return out;
}

}  // namespace csx

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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace csx {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view s, std::string_view prefix);

// Number of Unicode code points in a UTF-8 string. Invalid lead bytes count
// as one character each.
std::size_t utf8_length(std::string_view s);

// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view s);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

void append_file(const std::filesystem::path& path, std::string_view contents);

// A named slot in a template. Without a value the slot is elided together
// with one adjacent space.
struct Placeholder {
  std::string_view name;
  std::optional<std::string_view> value;
};

// Single-pass literal substitution of {name} slots. Substituted text is never
// rescanned. A well-formed {name} that is not listed throws
// Error(kUnknownPlaceholder); braces that do not form a slot are copied.
std::string substitute(std::string_view tmpl,
                       std::span<const Placeholder> placeholders);

}  // namespace csx

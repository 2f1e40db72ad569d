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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace csx {

// Every failure the pipeline can report. The spelling returned by
// error_name() is what the CLI prints on stderr and what the persisted
// outputs record, so entries must not be renamed.
enum class ErrorKind {
  kInvalidArgument,
  kConfigError,
  kIoError,
  kFileUnreadable,
  kUnknownAdapter,
  kMalformedRecord,
  kInsufficientEligible,
  kUnknownRelation,
  kUnknownPlaceholder,
  kEmptyContext,
  kEmptyCandidate,
  kUnparseableReply,
  kAuthError,
  kRateLimited,
  kTimeout,
  kProviderError,
  kCassetteMiss,
  kDuplicateInRanking,
  kMissingKey,
  kZeroLengthOriginal,
  kEmptyInput,
  kMissingExemplar,
};

std::string_view error_name(ErrorKind kind);
std::optional<ErrorKind> error_kind_from_name(std::string_view name);

// Process exit status used by the CLI for each error class.
int exit_code(ErrorKind kind);

// Transient errors are worth retrying on a later resume.
bool is_transient(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message);

  ErrorKind kind() const { return kind_; }
  std::string_view name() const { return error_name(kind_); }
  // The message without the "Name: " prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

// Per-item result of a batched operation: either a value or the error that
// stopped that item.
template <typename T>
class Outcome {
 public:
  Outcome(T value) : state_(std::move(value)) {}  // NOLINT
  Outcome(Error error) : state_(std::move(error)) {}  // NOLINT

  bool ok() const { return std::holds_alternative<T>(state_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(state_); }
  T& value() & { return std::get<T>(state_); }
  T&& value() && { return std::get<T>(std::move(state_)); }

  const Error& error() const { return std::get<Error>(state_); }

 private:
  std::variant<T, Error> state_;
};

}  // namespace csx

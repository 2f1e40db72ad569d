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

#include "csx/error.hpp"

#include <array>

namespace csx {
namespace {

struct KindEntry {
  ErrorKind kind;
  std::string_view name;
  int exit_code;
};

constexpr std::array kKinds = {
    KindEntry{ErrorKind::kInvalidArgument, "InvalidArgument", 2},
    KindEntry{ErrorKind::kConfigError, "ConfigError", 2},
    KindEntry{ErrorKind::kIoError, "IoError", 3},
    KindEntry{ErrorKind::kFileUnreadable, "FileUnreadable", 3},
    KindEntry{ErrorKind::kUnknownAdapter, "UnknownAdapter", 2},
    KindEntry{ErrorKind::kMalformedRecord, "MalformedRecord", 3},
    KindEntry{ErrorKind::kInsufficientEligible, "InsufficientEligible", 3},
    KindEntry{ErrorKind::kUnknownRelation, "UnknownRelation", 3},
    KindEntry{ErrorKind::kUnknownPlaceholder, "UnknownPlaceholder", 3},
    KindEntry{ErrorKind::kEmptyContext, "EmptyContext", 3},
    KindEntry{ErrorKind::kEmptyCandidate, "EmptyCandidate", 3},
    KindEntry{ErrorKind::kUnparseableReply, "UnparseableReply", 5},
    KindEntry{ErrorKind::kAuthError, "AuthError", 4},
    KindEntry{ErrorKind::kRateLimited, "RateLimited", 5},
    KindEntry{ErrorKind::kTimeout, "Timeout", 5},
    KindEntry{ErrorKind::kProviderError, "ProviderError", 5},
    KindEntry{ErrorKind::kCassetteMiss, "CassetteMiss", 6},
    KindEntry{ErrorKind::kDuplicateInRanking, "DuplicateInRanking", 3},
    KindEntry{ErrorKind::kMissingKey, "MissingKey", 3},
    KindEntry{ErrorKind::kZeroLengthOriginal, "ZeroLengthOriginal", 3},
    KindEntry{ErrorKind::kEmptyInput, "EmptyInput", 3},
    KindEntry{ErrorKind::kMissingExemplar, "MissingExemplar", 3},
};

const KindEntry& entry(ErrorKind kind) {
  for (const auto& e : kKinds) {
    if (e.kind == kind) return e;
  }
  return kKinds.front();
}

}  // namespace

std::string_view error_name(ErrorKind kind) { return entry(kind).name; }

std::optional<ErrorKind> error_kind_from_name(std::string_view name) {
  for (const auto& e : kKinds) {
    if (e.name == name) return e.kind;
  }
  return std::nullopt;
}

int exit_code(ErrorKind kind) { return entry(kind).exit_code; }

bool is_transient(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kAuthError:
    case ErrorKind::kRateLimited:
    case ErrorKind::kTimeout:
    case ErrorKind::kProviderError:
    case ErrorKind::kCassetteMiss:
    case ErrorKind::kIoError:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, std::string message)
    : std::runtime_error(std::string(error_name(kind)) + ": " + message),
      kind_(kind),
      detail_(std::move(message)) {}

}  // namespace csx

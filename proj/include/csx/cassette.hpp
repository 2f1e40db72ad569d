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

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "csx/llm.hpp"

namespace csx {

/// One recorded exchange. JSONL schema:
/// {"key", "tag", "request": {...}, "response": {...}, "recorded_at"}.
struct CassetteEntry {
  std::string key;
  std::string tag;
  ChatRequest request;
  ChatResponse response;
  std::string recorded_at;

  nlohmann::json to_json() const;
  static CassetteEntry from_json(const nlohmann::json& j);
};

enum class CassetteMode {
  kReplay,  // a miss raises kCassetteMiss
  kRecord,  // a miss goes to the inner backend and is appended
};

/// Request/response store keyed by cache_key(). Loading keeps the first
/// entry for a key; appends are serialized and flushed line by line.
class Cassette {
 public:
  Cassette() = default;
  explicit Cassette(std::filesystem::path path);  // loads if the file exists

  std::optional<CassetteEntry> find(const std::string& key) const;
  void append(const CassetteEntry& entry);
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, CassetteEntry> entries_;
};

class CassetteBackend final : public Backend {
 public:
  /// `inner` is required in kRecord mode and must outlive this object.
  CassetteBackend(std::filesystem::path path, CassetteMode mode, Backend* inner = nullptr);

  ChatResponse complete(const ChatRequest& req) override;
  std::string name() const override;
  std::size_t provider_calls() const override {
    return inner_ ? inner_->provider_calls() : 0;
  }

  /// Fixed "recorded_at" stamp, for reproducible fixture cassettes.
  void set_recorded_at(std::string stamp) { fixed_stamp_ = std::move(stamp); }

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }
  const Cassette& cassette() const { return cassette_; }

 private:
  Cassette cassette_;
  CassetteMode mode_;
  Backend* inner_;
  std::optional<std::string> fixed_stamp_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

std::string utc_timestamp();

}  // namespace csx

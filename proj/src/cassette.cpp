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

#include "csx/cassette.hpp"

#include <ctime>

#include "csx/text.hpp"

namespace csx {

nlohmann::json CassetteEntry::to_json() const {
  return {{"key", key},
          {"tag", tag},
          {"request", request.to_json()},
          {"response", response.to_json()},
          {"recorded_at", recorded_at}};
}

CassetteEntry CassetteEntry::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("key") || !j["key"].is_string() ||
      !j.contains("request") || !j.contains("response")) {
    throw Error(ErrorKind::kMalformedRecord,
                "cassette entry needs \"key\", \"request\" and \"response\"");
  }
  CassetteEntry e;
  e.key = j["key"].get<std::string>();
  e.tag = j.value("tag", std::string());
  e.request = ChatRequest::from_json(j["request"]);
  e.response = ChatResponse::from_json(j["response"]);
  e.recorded_at = j.value("recorded_at", std::string());
  return e;
}

Cassette::Cassette(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  const auto contents = read_file(path_);
  std::size_t line_no = 0;
  for (auto line : split_lines(contents)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto entry = CassetteEntry::from_json(nlohmann::json::parse(line));
      entries_.try_emplace(entry.key, std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedRecord, path_.string() + " line " +
                                                   std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kMalformedRecord, path_.string() + " line " +
                                                   std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::optional<CassetteEntry> Cassette::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void Cassette::append(const CassetteEntry& entry) {
  std::lock_guard lock(mu_);
  if (!entries_.try_emplace(entry.key, entry).second) return;
  if (!path_.empty()) append_file(path_, entry.to_json().dump() + "\n");
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string utc_timestamp() {
  const auto now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

CassetteBackend::CassetteBackend(std::filesystem::path path, CassetteMode mode, Backend* inner)
    : cassette_(std::move(path)), mode_(mode), inner_(inner) {
  if (mode_ == CassetteMode::kRecord && inner_ == nullptr) {
    throw Error(ErrorKind::kConfigError, "record mode needs an inner backend");
  }
  if (mode_ == CassetteMode::kReplay && !std::filesystem::exists(cassette_.path())) {
    throw Error(ErrorKind::kFileUnreadable, "no cassette at " + cassette_.path().string());
  }
}

std::string CassetteBackend::name() const {
  return mode_ == CassetteMode::kReplay ? "replay" : "record:" + inner_->name();
}

ChatResponse CassetteBackend::complete(const ChatRequest& req) {
  const auto key = cache_key(req);
  if (auto hit = cassette_.find(key)) {
    ++hits_;
    auto r = hit->response;
    r.cached = true;
    return r;
  }
  ++misses_;
  if (mode_ == CassetteMode::kReplay) {
    throw Error(ErrorKind::kCassetteMiss,
                "no recording for " + (req.request_tag.empty() ? key : req.request_tag));
  }
  auto r = inner_->complete(req);
  CassetteEntry entry{key, req.request_tag, req, r,
                      fixed_stamp_ ? *fixed_stamp_ : utc_timestamp()};
  cassette_.append(entry);
  r.cached = false;
  return r;
}

}  // namespace csx

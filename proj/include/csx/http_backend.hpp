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

#include <atomic>
#include <functional>
#include <string>

#include "csx/llm.hpp"

namespace csx {

inline constexpr char kDefaultApiKeyEnv[] = "OPENAI_API_KEY";
inline constexpr char kDefaultBaseUrl[] = "https://api.openai.com/v1";

struct HttpBackendConfig {
  /// Scheme, host, optional port and path prefix, e.g.
  /// "https://api.openai.com/v1" or "http://127.0.0.1:8080/v1".
  std::string base_url = kDefaultBaseUrl;
  std::string api_key;
  BackendPolicy policy;
};

/// OpenAI-compatible chat-completions client.
///
/// HTTP 429, 5xx, connection failures and timeouts are retried up to
/// policy.retry_max times with jittered exponential backoff (a Retry-After
/// header extends the wait). 401/403 raise kAuthError at once; other 4xx
/// raise kProviderError at once. After the last retry a 429 surfaces as
/// kRateLimited, a timeout as kTimeout and anything else as kProviderError.
class HttpBackend final : public Backend {
 public:
  /// Throws kAuthError when the key is empty.
  explicit HttpBackend(HttpBackendConfig config);

  ChatResponse complete(const ChatRequest& req) override;
  std::string name() const override { return "http"; }
  std::size_t provider_calls() const override { return calls_.load(); }

  /// Replaces the sleep used between retries (tests).
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) {
    sleep_ = std::move(sleeper);
  }

 private:
  HttpBackendConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_prefix_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::uint64_t> jitter_state_{0x5EED};
  std::function<void(std::chrono::milliseconds)> sleep_;
};

/// Reads the key from the environment; empty when unset.
std::string api_key_from_env(const std::string& variable);

}  // namespace csx

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
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csx/error.hpp"

namespace csx {

struct ChatRequest {
  std::string model_name;
  std::optional<std::string> system_text;
  std::string user_text;
  double temperature = 0.0;
  std::size_t max_output_tokens = 256;
  /// Human-readable label; not part of the cache key and never sent to a
  /// provider. Mock backends use its "expand:" / "judge:" prefix to pick a
  /// role.
  std::string request_tag;

  nlohmann::json to_json() const;
  static ChatRequest from_json(const nlohmann::json& j);
};

struct ChatResponse {
  std::string text;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  std::chrono::milliseconds latency{0};
  std::string provider_id;
  bool cached = false;
  /// Provider attempts needed (1 without retries).
  std::size_t attempts = 1;

  nlohmann::json to_json() const;
  static ChatResponse from_json(const nlohmann::json& j);
};

struct BackendPolicy {
  std::size_t max_in_flight = 4;
  /// 0 disables the cap.
  double requests_per_minute = 0;
  std::size_t retry_max = 3;
  std::chrono::milliseconds retry_initial{500};
  double retry_multiplier = 2.0;
  std::chrono::milliseconds timeout{60000};

  void validate() const;
  nlohmann::json to_json() const;
  static BackendPolicy from_json(const nlohmann::json& j);
};

/// Chat-completion provider. Implementations must be safe to call from
/// several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  virtual std::string name() const = 0;
  /// Number of calls that reached the underlying provider.
  virtual std::size_t provider_calls() const { return 0; }
};

/// SHA-256 over (model, system text, user text, temperature, max tokens).
/// The request tag is deliberately excluded.
std::string cache_key(const ChatRequest& req);

/// Spaces request starts evenly to honor a requests-per-minute cap.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  std::chrono::steady_clock::duration interval_{};
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

/// Applies a RateLimiter in front of another backend.
class RateLimitedBackend final : public Backend {
 public:
  RateLimitedBackend(Backend& inner, double requests_per_minute)
      : inner_(inner), limiter_(requests_per_minute) {}

  ChatResponse complete(const ChatRequest& req) override {
    limiter_.acquire();
    return inner_.complete(req);
  }
  std::string name() const override { return inner_.name(); }
  std::size_t provider_calls() const override { return inner_.provider_calls(); }

 private:
  Backend& inner_;
  RateLimiter limiter_;
};

/// Runs fn(i) for i in [0, n) on at most `max_in_flight` threads.
void parallel_for(std::size_t n, std::size_t max_in_flight,
                  const std::function<void(std::size_t)>& fn);

/// Executes every request with bounded concurrency and the policy's rate
/// cap. The result is aligned with `reqs`; one failing item never affects
/// the others.
std::vector<Outcome<ChatResponse>> run_batch(const std::vector<ChatRequest>& reqs,
                                             Backend& backend,
                                             const BackendPolicy& policy);

struct Usage {
  std::size_t calls = 0;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;

  void add(const ChatResponse& r) {
    ++calls;
    prompt_tokens += r.prompt_tokens;
    completion_tokens += r.completion_tokens;
  }
  Usage& operator+=(const Usage& o) {
    calls += o.calls;
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  std::size_t total_tokens() const { return prompt_tokens + completion_tokens; }
  nlohmann::json to_json() const;
};

Usage total_usage(const std::vector<Outcome<ChatResponse>>& outcomes);

/// Rough token estimate for backends that do not report usage: one token
/// per four bytes, at least one.
std::size_t estimate_tokens(const std::string& text);

}  // namespace csx

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

#include "csx/llm.hpp"

#include <algorithm>
#include <thread>

#include "csx/digest.hpp"

namespace csx {

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::kMalformedRecord, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

nlohmann::json ChatRequest::to_json() const {
  nlohmann::json j;
  j["model"] = model_name;
  j["system"] = system_text ? nlohmann::json(*system_text) : nlohmann::json(nullptr);
  j["user"] = user_text;
  j["temperature"] = temperature;
  j["max_output_tokens"] = max_output_tokens;
  j["tag"] = request_tag;
  return j;
}

ChatRequest ChatRequest::from_json(const nlohmann::json& j) {
  ChatRequest r;
  r.model_name = get_or<std::string>(j, "model", "");
  if (j.contains("system") && j["system"].is_string()) r.system_text = j["system"].get<std::string>();
  r.user_text = get_or<std::string>(j, "user", "");
  r.temperature = get_or<double>(j, "temperature", 0.0);
  r.max_output_tokens = get_or<std::size_t>(j, "max_output_tokens", 256);
  r.request_tag = get_or<std::string>(j, "tag", "");
  return r;
}

nlohmann::json ChatResponse::to_json() const {
  return {{"text", text},
          {"prompt_tokens", prompt_tokens},
          {"completion_tokens", completion_tokens},
          {"latency_ms", latency.count()},
          {"provider_id", provider_id}};
}

ChatResponse ChatResponse::from_json(const nlohmann::json& j) {
  ChatResponse r;
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw Error(ErrorKind::kMalformedRecord, "response lacks a string \"text\"");
  }
  r.text = j["text"].get<std::string>();
  r.prompt_tokens = get_or<std::size_t>(j, "prompt_tokens", 0);
  r.completion_tokens = get_or<std::size_t>(j, "completion_tokens", 0);
  r.latency = std::chrono::milliseconds(get_or<std::int64_t>(j, "latency_ms", 0));
  r.provider_id = get_or<std::string>(j, "provider_id", "");
  return r;
}

void BackendPolicy::validate() const {
  if (max_in_flight < 1) throw Error(ErrorKind::kConfigError, "max_in_flight must be >= 1");
  if (requests_per_minute < 0) {
    throw Error(ErrorKind::kConfigError, "requests_per_minute must be >= 0");
  }
  if (retry_multiplier < 1.0) {
    throw Error(ErrorKind::kConfigError, "retry_multiplier must be >= 1");
  }
}

nlohmann::json BackendPolicy::to_json() const {
  return {{"max_in_flight", max_in_flight},
          {"requests_per_minute", requests_per_minute},
          {"retry_max", retry_max},
          {"retry_initial_ms", retry_initial.count()},
          {"retry_multiplier", retry_multiplier},
          {"timeout_ms", timeout.count()}};
}

BackendPolicy BackendPolicy::from_json(const nlohmann::json& j) {
  BackendPolicy p;
  if (!j.is_object()) throw Error(ErrorKind::kConfigError, "policy must be an object");
  try {
    p.max_in_flight = j.value("max_in_flight", p.max_in_flight);
    p.requests_per_minute = j.value("requests_per_minute", p.requests_per_minute);
    p.retry_max = j.value("retry_max", p.retry_max);
    p.retry_initial = std::chrono::milliseconds(j.value("retry_initial_ms", p.retry_initial.count()));
    p.retry_multiplier = j.value("retry_multiplier", p.retry_multiplier);
    p.timeout = std::chrono::milliseconds(j.value("timeout_ms", p.timeout.count()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigError, std::string("bad policy: ") + e.what());
  }
  p.validate();
  return p;
}

std::string cache_key(const ChatRequest& req) {
  const nlohmann::json material = {
      req.model_name,
      req.system_text ? nlohmann::json(*req.system_text) : nlohmann::json(nullptr),
      req.user_text,
      req.temperature,
      req.max_output_tokens,
  };
  return sha256_hex(material.dump());
}

RateLimiter::RateLimiter(double requests_per_minute) {
  if (requests_per_minute > 0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / requests_per_minute));
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

void parallel_for(std::size_t n, std::size_t max_in_flight,
                  const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min(n, std::max<std::size_t>(1, max_in_flight));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

std::vector<Outcome<ChatResponse>> run_batch(const std::vector<ChatRequest>& reqs,
                                             Backend& backend,
                                             const BackendPolicy& policy) {
  policy.validate();
  std::vector<std::optional<Outcome<ChatResponse>>> slots(reqs.size());
  RateLimiter limiter(policy.requests_per_minute);
  parallel_for(reqs.size(), policy.max_in_flight, [&](std::size_t i) {
    try {
      limiter.acquire();
      slots[i].emplace(backend.complete(reqs[i]));
    } catch (const Error& e) {
      slots[i].emplace(e);
    } catch (const std::exception& e) {
      slots[i].emplace(Error(ErrorKind::kProviderError, e.what()));
    }
  });
  std::vector<Outcome<ChatResponse>> out;
  out.reserve(reqs.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

nlohmann::json Usage::to_json() const {
  return {{"calls", calls},
          {"prompt_tokens", prompt_tokens},
          {"completion_tokens", completion_tokens},
          {"total_tokens", total_tokens()}};
}

Usage total_usage(const std::vector<Outcome<ChatResponse>>& outcomes) {
  Usage u;
  for (const auto& o : outcomes) {
    if (o.ok()) u.add(o.value());
  }
  return u;
}

std::size_t estimate_tokens(const std::string& text) {
  return std::max<std::size_t>(1, (text.size() + 3) / 4);
}

}  // namespace csx

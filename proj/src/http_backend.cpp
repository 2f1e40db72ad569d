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

#include "csx/http_backend.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include "csx/rng.hpp"

namespace csx {

namespace {

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

bool is_timeout(httplib::Error e) {
  return e == httplib::Error::Read || e == httplib::Error::Write ||
         e == httplib::Error::ConnectionTimeout;
}

}  // namespace

std::string api_key_from_env(const std::string& variable) {
  const char* v = std::getenv(variable.c_str());
  return v ? std::string(v) : std::string();
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  config_.policy.validate();
  if (config_.api_key.empty()) {
    throw Error(ErrorKind::kAuthError, "no API key configured for the HTTP backend");
  }
  const auto& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kConfigError, "base_url needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ChatResponse HttpBackend::complete(const ChatRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  if (req.system_text) messages.push_back({{"role", "system"}, {"content", *req.system_text}});
  messages.push_back({{"role", "user"}, {"content", req.user_text}});
  const nlohmann::json body = {{"model", req.model_name},
                               {"messages", messages},
                               {"temperature", req.temperature},
                               {"max_tokens", req.max_output_tokens}};
  const auto payload = body.dump();
  const httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
  const auto& policy = config_.policy;
  const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(
      policy.timeout - timeout_s);

  auto delay = std::chrono::duration<double, std::milli>(policy.retry_initial);
  for (std::size_t attempt = 1;; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_s.count(), timeout_us.count());
    client.set_read_timeout(timeout_s.count(), timeout_us.count());
    client.set_write_timeout(timeout_s.count(), timeout_us.count());
    ++calls_;
    auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload,
                           "application/json");
    const bool last = attempt > policy.retry_max;

    std::optional<Error> failure;
    std::optional<std::chrono::milliseconds> retry_after;
    if (!res) {
      const auto err = res.error();
      failure = is_timeout(err)
                    ? Error(ErrorKind::kTimeout, "request timed out")
                    : Error(ErrorKind::kProviderError,
                            "status 0: " + httplib::to_string(err));
    } else if (res->status == 401 || res->status == 403) {
      throw Error(ErrorKind::kAuthError,
                  "status " + std::to_string(res->status) + ": " + excerpt(res->body));
    } else if (res->status == 429 || res->status >= 500) {
      failure = Error(res->status == 429 ? ErrorKind::kRateLimited : ErrorKind::kProviderError,
                      "status " + std::to_string(res->status) + ": " + excerpt(res->body));
      if (res->has_header("Retry-After")) {
        const auto v = std::atof(res->get_header_value("Retry-After").c_str());
        if (v > 0) retry_after = std::chrono::milliseconds(static_cast<long>(v * 1000));
      }
    } else if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorKind::kProviderError,
                  "status " + std::to_string(res->status) + ": " + excerpt(res->body));
    }

    if (!failure) {
      ChatResponse out;
      try {
        const auto j = nlohmann::json::parse(res->body);
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage") && j["usage"].is_object()) {
          out.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
          out.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
        }
        out.provider_id = j.value("id", std::string());
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::kProviderError,
                    std::string("unexpected response body: ") + e.what());
      }
      out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);
      out.attempts = attempt;
      if (attempt > 1) {
        spdlog::info("request {} succeeded after {} retries", req.request_tag, attempt - 1);
      }
      return out;
    }
    if (last) throw *failure;

    // Full jitter in [0.5, 1.5) of the nominal delay.
    std::uint64_t seed = jitter_state_.fetch_add(1);
    Xoshiro256 rng(splitmix64(seed));
    auto wait = std::chrono::milliseconds(
        static_cast<long>(std::llround(delay.count() * (0.5 + rng.unit()))));
    if (retry_after && *retry_after > wait) wait = *retry_after;
    spdlog::warn("request {} attempt {} failed ({}); retrying in {} ms", req.request_tag,
                 attempt, failure->what(), wait.count());
    sleep_(wait);
    delay *= policy.retry_multiplier;
  }
}

}  // namespace csx

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

#include <gtest/gtest.h>
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <random>
#include <set>
#include <thread>

#include "csx/cassette.hpp"
#include "csx/error.hpp"
#include "csx/http_backend.hpp"
#include "csx/llm.hpp"
#include "csx/mock_backends.hpp"
#include "csx/text.hpp"
#include "test_support.hpp"

namespace {

using csx::ChatRequest;
using csx::ErrorKind;
using namespace std::chrono_literals;
namespace ct = csx::testing;

ChatRequest request(std::string user, std::string tag = "t") {
  ChatRequest r;
  r.model_name = "gpt-4";
  r.user_text = std::move(user);
  r.request_tag = std::move(tag);
  return r;
}

TEST(CacheKey, FrozenDigests) {
  auto a = request("ping");
  a.system_text = "Be brief.";
  EXPECT_EQ(csx::cache_key(a),
            "4d90851e23590dca623bbe841f98ccc2c49a7ffa73266a55ba12205c9596542a");
  ChatRequest b = request("ping");
  b.model_name = "gpt-3.5-turbo";
  b.temperature = 0.7;
  b.max_output_tokens = 64;
  EXPECT_EQ(csx::cache_key(b),
            "e55f94427941a53e1baacc39a0f6d61ab597236cabe45845e8009653252da9f4");
}

TEST(CacheKey, TagExcludedOtherFieldsIncluded) {
  const auto base = request("ping", "a");
  EXPECT_EQ(csx::cache_key(base), csx::cache_key(request("ping", "b")));
  auto t = base;
  t.temperature = 0.5;
  EXPECT_NE(csx::cache_key(t), csx::cache_key(base));
  auto m = base;
  m.max_output_tokens = 512;
  EXPECT_NE(csx::cache_key(m), csx::cache_key(base));
  auto s = base;
  s.system_text = "";
  EXPECT_NE(csx::cache_key(s), csx::cache_key(base));
}

TEST(Messages, JsonRoundTrip) {
  auto req = request("hello", "expand:r:d:1");
  req.system_text = "sys";
  req.temperature = 0.3;
  const auto back = ChatRequest::from_json(req.to_json());
  EXPECT_EQ(back.to_json(), req.to_json());
  EXPECT_EQ(csx::cache_key(back), csx::cache_key(req));

  csx::ChatResponse r;
  r.text = "1 > 2";
  r.prompt_tokens = 10;
  r.completion_tokens = 3;
  r.latency = 42ms;
  r.provider_id = "chatcmpl-x";
  EXPECT_EQ(csx::ChatResponse::from_json(r.to_json()).to_json(), r.to_json());
}

TEST(Policy, Validation) {
  csx::BackendPolicy p;
  EXPECT_NO_THROW(p.validate());
  p.max_in_flight = 0;
  EXPECT_THROW(p.validate(), csx::Error);
  csx::BackendPolicy q;
  q.retry_max = 0;
  EXPECT_NO_THROW(q.validate());
  EXPECT_EQ(csx::BackendPolicy::from_json(q.to_json()).to_json(), q.to_json());
}

TEST(Echo, ReturnsUserText) {
  csx::EchoBackend echo;
  EXPECT_EQ(echo.complete(request("ping")).text, "ping");
  EXPECT_EQ(echo.provider_calls(), 1u);
}

TEST(ParallelFor, NeverExceedsBound) {
  std::atomic<int> now{0}, peak{0};
  std::vector<int> seen(40, 0);
  csx::parallel_for(40, 3, [&](std::size_t i) {
    const int cur = ++now;
    int p = peak.load();
    while (cur > p && !peak.compare_exchange_weak(p, cur)) {
    }
    std::this_thread::sleep_for(2ms);
    seen[i]++;
    --now;
  });
  EXPECT_LE(peak.load(), 3);
  EXPECT_GE(peak.load(), 2);
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }));
}

TEST(RunBatch, OrderPreservedUnderRandomLatency) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 gen(seed);
    std::vector<int> delays;
    for (int i = 0; i < 10; ++i) delays.push_back(static_cast<int>(gen() % 8));
    csx::ScriptedBackend slow([&](const ChatRequest& r) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delays[std::stoi(r.user_text)]));
      return r.user_text;
    });
    std::vector<ChatRequest> reqs;
    for (int i = 0; i < 10; ++i) reqs.push_back(request(std::to_string(i)));
    csx::BackendPolicy policy;
    policy.max_in_flight = 3;
    const auto out = csx::run_batch(reqs, slow, policy);
    ASSERT_EQ(out.size(), 10u);
    for (int i = 0; i < 10; ++i) {
      ASSERT_TRUE(out[i].ok());
      EXPECT_EQ(out[i].value().text, std::to_string(i));
    }
  }
}

TEST(RunBatch, OneFailureIsIsolated) {
  ct::TempDir dir;
  csx::EchoBackend echo;
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 10; ++i) reqs.push_back(request("q" + std::to_string(i)));
  {
    csx::CassetteBackend rec(dir / "c.jsonl", csx::CassetteMode::kRecord, &echo);
    for (int i = 0; i < 10; ++i) {
      if (i != 4) rec.complete(reqs[i]);
    }
  }
  csx::CassetteBackend replay(dir / "c.jsonl", csx::CassetteMode::kReplay);
  csx::BackendPolicy policy;
  policy.max_in_flight = 3;
  const auto out = csx::run_batch(reqs, replay, policy);
  for (int i = 0; i < 10; ++i) {
    if (i == 4) {
      ASSERT_FALSE(out[i].ok());
      EXPECT_EQ(out[i].error().kind(), ErrorKind::kCassetteMiss);
    } else {
      ASSERT_TRUE(out[i].ok()) << i;
      EXPECT_EQ(out[i].value().text, "q" + std::to_string(i));
    }
  }
}

TEST(Usage, TotalsAreExactSums) {
  csx::SyntheticBackend synth(3);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 12; ++i) {
    reqs.push_back(request("1. a\n2. b\n3. c\nprompt " + std::to_string(i),
                           i % 2 ? "judge:x" : "expand:x"));
  }
  const auto out = csx::run_batch(reqs, synth, {});
  std::size_t p = 0, c = 0;
  for (const auto& o : out) {
    ASSERT_TRUE(o.ok());
    p += o.value().prompt_tokens;
    c += o.value().completion_tokens;
  }
  const auto u = csx::total_usage(out);
  EXPECT_EQ(u.calls, 12u);
  EXPECT_EQ(u.prompt_tokens, p);
  EXPECT_EQ(u.completion_tokens, c);
  EXPECT_EQ(u.total_tokens(), p + c);
}

TEST(RateLimiter, SpacesRequests) {
  csx::RateLimiter unlimited(0);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 100; ++i) unlimited.acquire();
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 50ms);

  csx::RateLimiter limited(1200);  // one per 50 ms
  const auto t1 = std::chrono::steady_clock::now();
  for (int i = 0; i < 5; ++i) limited.acquire();
  EXPECT_GE(std::chrono::steady_clock::now() - t1, 190ms);
}

TEST(Cassette, RecordThenReplay) {
  ct::TempDir dir;
  const auto path = dir / "tape.jsonl";
  csx::EchoBackend echo;
  {
    csx::CassetteBackend rec(path, csx::CassetteMode::kRecord, &echo);
    rec.set_recorded_at("2026-01-01T00:00:00Z");
    EXPECT_FALSE(rec.complete(request("ping", "tag-1")).cached);
    EXPECT_TRUE(rec.complete(request("ping", "tag-2")).cached);
    EXPECT_EQ(echo.provider_calls(), 1u);
  }
  const auto line = nlohmann::json::parse(csx::split_lines(csx::read_file(path)).at(0));
  for (const char* k : {"key", "tag", "request", "response", "recorded_at"}) {
    EXPECT_TRUE(line.contains(k)) << k;
  }
  EXPECT_EQ(line["tag"], "tag-1");
  EXPECT_EQ(line["key"], csx::cache_key(request("ping")));

  csx::CassetteBackend replay(path, csx::CassetteMode::kReplay);
  const auto r = replay.complete(request("ping", "other"));
  EXPECT_EQ(r.text, "ping");
  EXPECT_TRUE(r.cached);
  try {
    replay.complete(request("pong"));
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCassetteMiss);
  }
  EXPECT_EQ(replay.hits(), 1u);
  EXPECT_EQ(replay.misses(), 1u);
}

TEST(Cassette, ReplayNeedsFile) {
  ct::TempDir dir;
  EXPECT_THROW(csx::CassetteBackend(dir / "none.jsonl", csx::CassetteMode::kReplay),
               csx::Error);
}

TEST(Mocks, SyntheticJudgeIsPermutationAndStable) {
  csx::SyntheticBackend synth(9);
  std::string prompt = "rank\n";
  for (int i = 1; i <= 12; ++i) prompt += "[" + std::to_string(i) + "] def\n";
  const auto a = synth.complete(request(prompt, "judge:x"));
  const auto b = synth.complete(request(prompt, "judge:y"));
  EXPECT_EQ(a.text, b.text);
  const auto parsed = csx::parse_ranking_reply(a.text, csx::catalog_default());
  EXPECT_EQ(parsed.ranking.size(), 12u);
  EXPECT_TRUE(parsed.warnings.empty());
  EXPECT_EQ(csx::count_numbered_definitions(prompt), 12u);
  EXPECT_THROW(csx::make_mock_backend("nope"), csx::Error);
}

TEST(Mocks, SyntheticItemsAreDistinct) {
  std::string prompt = "expand\n";
  for (int i = 1; i <= 12; ++i) prompt += std::to_string(i) + ". def\n";
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    csx::SyntheticBackend synth(seed);
    const auto reply = csx::parse_expansion_reply(synth.complete(request(prompt, "expand:x")).text, 12);
    ASSERT_EQ(reply.responses.size(), 12u);
    std::set<std::string> texts;
    for (const auto& item : reply.responses) texts.insert(item.text);
    EXPECT_EQ(texts.size(), 12u) << seed;
  }
}

// A minimal OpenAI-compatible stub on an ephemeral port.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler h) : handler_(std::move(h)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& q, httplib::Response& r) {
      const int cur = ++in_flight_;
      int p = peak_.load();
      while (cur > p && !peak_.compare_exchange_weak(p, cur)) {
      }
      ++hits_;
      handler_(q, r);
      --in_flight_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_.load(); }
  int peak() const { return peak_.load(); }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0}, in_flight_{0}, peak_{0};
};

void ok_reply(httplib::Response& r, const std::string& text) {
  const nlohmann::json body = {
      {"id", "chatcmpl-1"},
      {"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}},
      {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 2}}}};
  r.set_content(body.dump(), "application/json");
}

csx::HttpBackendConfig config_for(const StubServer& s) {
  csx::HttpBackendConfig c;
  c.base_url = s.base_url();
  c.api_key = "test-key";
  c.policy.retry_max = 3;
  c.policy.retry_initial = 1ms;
  c.policy.timeout = 5000ms;
  return c;
}

TEST(Http, RetriesThree429sThenSucceeds) {
  std::atomic<int> n{0};
  StubServer server([&](const httplib::Request& q, httplib::Response& r) {
    EXPECT_EQ(q.get_header_value("Authorization"), "Bearer test-key");
    const auto body = nlohmann::json::parse(q.body);
    EXPECT_EQ(body["model"], "gpt-4");
    EXPECT_EQ(body["messages"].back()["content"], "ping");
    if (++n <= 3) {
      r.status = 429;
      r.set_content("slow down", "text/plain");
      return;
    }
    ok_reply(r, "pong");
  });
  csx::HttpBackend http(config_for(server));
  std::vector<std::chrono::milliseconds> waits;
  http.set_sleeper([&](std::chrono::milliseconds d) { waits.push_back(d); });
  const auto r = http.complete(request("ping"));
  EXPECT_EQ(r.text, "pong");
  EXPECT_EQ(r.attempts, 4u);
  EXPECT_EQ(r.prompt_tokens, 11u);
  EXPECT_EQ(r.completion_tokens, 2u);
  EXPECT_EQ(r.provider_id, "chatcmpl-1");
  EXPECT_EQ(server.hits(), 4);
  EXPECT_EQ(waits.size(), 3u);
}

TEST(Http, ExhaustedRetriesSurfaceTypedErrors) {
  StubServer limited([](const httplib::Request&, httplib::Response& r) { r.status = 429; });
  csx::HttpBackend a(config_for(limited));
  a.set_sleeper([](auto) {});
  try {
    a.complete(request("x"));
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRateLimited);
  }
  EXPECT_EQ(limited.hits(), 4);

  StubServer broken([](const httplib::Request&, httplib::Response& r) { r.status = 503; });
  csx::HttpBackend b(config_for(broken));
  b.set_sleeper([](auto) {});
  try {
    b.complete(request("x"));
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProviderError);
  }
}

TEST(Http, AuthAndClientErrorsAreNotRetried) {
  StubServer denied([](const httplib::Request&, httplib::Response& r) { r.status = 401; });
  csx::HttpBackend a(config_for(denied));
  try {
    a.complete(request("x"));
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAuthError);
    EXPECT_EQ(std::string(e.what()).find("test-key"), std::string::npos);
  }
  EXPECT_EQ(denied.hits(), 1);

  StubServer bad([](const httplib::Request&, httplib::Response& r) { r.status = 400; });
  csx::HttpBackend b(config_for(bad));
  EXPECT_THROW(b.complete(request("x")), csx::Error);
  EXPECT_EQ(bad.hits(), 1);

  auto c = config_for(bad);
  c.api_key.clear();
  try {
    csx::HttpBackend none(c);
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAuthError);
  }
}

TEST(Http, RetryAfterExtendsWait) {
  std::atomic<int> n{0};
  StubServer server([&](const httplib::Request&, httplib::Response& r) {
    if (++n == 1) {
      r.status = 429;
      r.set_header("Retry-After", "2");
      return;
    }
    ok_reply(r, "ok");
  });
  csx::HttpBackend http(config_for(server));
  std::vector<std::chrono::milliseconds> waits;
  http.set_sleeper([&](std::chrono::milliseconds d) { waits.push_back(d); });
  EXPECT_EQ(http.complete(request("x")).text, "ok");
  ASSERT_EQ(waits.size(), 1u);
  EXPECT_EQ(waits[0], 2000ms);
}

TEST(Http, BatchRespectsInFlightBound) {
  StubServer server([](const httplib::Request& q, httplib::Response& r) {
    std::this_thread::sleep_for(20ms);
    ok_reply(r, nlohmann::json::parse(q.body)["messages"].back()["content"]);
  });
  auto cfg = config_for(server);
  cfg.policy.max_in_flight = 3;
  csx::HttpBackend http(cfg);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 12; ++i) reqs.push_back(request("m" + std::to_string(i)));
  const auto out = csx::run_batch(reqs, http, cfg.policy);
  for (int i = 0; i < 12; ++i) {
    ASSERT_TRUE(out[i].ok());
    EXPECT_EQ(out[i].value().text, "m" + std::to_string(i));
  }
  EXPECT_LE(server.peak(), 3);
  EXPECT_EQ(server.hits(), 12);
}

// Recording through the stub and replaying the same batch makes no calls.
TEST(Http, WarmCacheMakesNoCalls) {
  ct::TempDir dir;
  StubServer server([](const httplib::Request& q, httplib::Response& r) {
    ok_reply(r, "re: " + nlohmann::json::parse(q.body)["messages"].back()["content"].get<std::string>());
  });
  auto cfg = config_for(server);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 6; ++i) reqs.push_back(request("m" + std::to_string(i)));
  {
    csx::HttpBackend http(cfg);
    csx::CassetteBackend rec(dir / "tape.jsonl", csx::CassetteMode::kRecord, &http);
    for (const auto& o : csx::run_batch(reqs, rec, cfg.policy)) ASSERT_TRUE(o.ok());
  }
  const int before = server.hits();
  EXPECT_EQ(before, 6);
  csx::HttpBackend http(cfg);
  csx::CassetteBackend warm(dir / "tape.jsonl", csx::CassetteMode::kRecord, &http);
  const auto out = csx::run_batch(reqs, warm, cfg.policy);
  for (const auto& o : out) {
    ASSERT_TRUE(o.ok());
    EXPECT_TRUE(o.value().cached);
    EXPECT_EQ(o.value().prompt_tokens, 11u);
  }
  EXPECT_EQ(server.hits(), before);
  EXPECT_EQ(warm.provider_calls(), 0u);
}

}  // namespace

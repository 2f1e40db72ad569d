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

#include "csx/mock_backends.hpp"

#include <array>
#include <numeric>
#include <vector>

#include "csx/rng.hpp"
#include "csx/text.hpp"

namespace csx {

namespace {

ChatResponse make_response(const ChatRequest& req, std::string text, std::string provider) {
  ChatResponse r;
  r.prompt_tokens = estimate_tokens(req.user_text);
  r.completion_tokens = estimate_tokens(text);
  r.text = std::move(text);
  r.provider_id = std::move(provider);
  return r;
}

std::uint64_t seed_from_key(std::uint64_t seed, const std::string& key) {
  // First 16 hex digits of the digest.
  std::uint64_t v = std::stoull(key.substr(0, 16), nullptr, 16);
  std::uint64_t mix = seed ^ v;
  return splitmix64(mix);
}

constexpr std::array<std::string_view, 8> kOpeners = {
    "Honestly,", "Well,", "I guess", "You know,", "Oh,", "To be fair,", "Right,", "Hmm,"};
constexpr std::array<std::string_view, 8> kBodies = {
    "that sounds like something we should talk through a bit more",
    "I have been thinking about that since this morning",
    "it probably started after the long week we just had",
    "I would really like to sort this out before the weekend",
    "it makes me feel a little uneasy, to be honest",
    "there might be a simple reason behind all of it",
    "we could ask someone who has been through the same thing",
    "it will probably change how we plan the next few days",
};
constexpr std::array<std::string_view, 4> kClosers = {".", ", don't you think?", "!",
                                                      ", at least that is how I see it."};

}  // namespace

ChatResponse EchoBackend::complete(const ChatRequest& req) {
  ++calls_;
  return make_response(req, req.user_text, "mock-echo");
}

ChatResponse ScriptedBackend::complete(const ChatRequest& req) {
  ++calls_;
  return make_response(req, script_(req), "mock-scripted");
}

std::size_t count_numbered_definitions(const std::string& prompt) {
  std::size_t best = 0;
  for (auto line : split_lines(prompt)) {
    std::size_t i = 0;
    const bool bracket = !line.empty() && line[0] == '[';
    if (bracket) ++i;
    std::size_t n = 0;
    const auto digits_start = i;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') {
      n = n * 10 + static_cast<std::size_t>(line[i] - '0');
      ++i;
    }
    if (i == digits_start || i + 1 >= line.size()) continue;
    const bool ok = bracket ? (line[i] == ']' && line[i + 1] == ' ')
                            : (line[i] == '.' && line[i + 1] == ' ');
    if (ok && n > best) best = n;
  }
  return best;
}

ChatResponse SyntheticBackend::complete(const ChatRequest& req) {
  ++calls_;
  const auto key = cache_key(req);
  Xoshiro256 rng(seed_from_key(seed_, key));
  const auto count = count_numbered_definitions(req.user_text);
  std::string text;
  if (req.request_tag.rfind("judge:", 0) == 0) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{1});
    shuffle(std::span<std::size_t>(order), rng);
    for (auto i : order) {
      if (!text.empty()) text += " > ";
      text += std::to_string(i);
    }
  } else {
    // Distinct phrasings within one reply, so no two items are identical.
    constexpr std::size_t kCombos = kOpeners.size() * kBodies.size() * kClosers.size();
    std::vector<std::size_t> combos(kCombos);
    std::iota(combos.begin(), combos.end(), std::size_t{0});
    for (std::size_t i = 1; i <= count; ++i) {
      const auto slot = (i - 1) % kCombos;
      std::swap(combos[slot], combos[slot + rng.below(kCombos - slot)]);
      auto c = combos[slot];
      if (!text.empty()) text += '\n';
      text += std::to_string(i) + ". ";
      text += kOpeners[c % kOpeners.size()];
      c /= kOpeners.size();
      text += ' ';
      text += kBodies[c % kBodies.size()];
      c /= kBodies.size();
      text += kClosers[c];
      if (label_catalog_ && i <= label_catalog_->size()) {
        text += " (label=";
        text += relation_name((*label_catalog_)[i - 1].id);
        text += ')';
      }
    }
  }
  return make_response(req, std::move(text), "mock-synthetic");
}

std::unique_ptr<Backend> make_mock_backend(const std::string& kind) {
  const auto colon = kind.find(':');
  const auto base = kind.substr(0, colon);
  std::uint64_t seed = 0;
  if (colon != std::string::npos) {
    try {
      seed = std::stoull(kind.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::kConfigError, "bad mock seed in '" + kind + "'");
    }
  }
  if (base == "echo") return std::make_unique<EchoBackend>();
  if (base == "synthetic" || base == "random") return std::make_unique<SyntheticBackend>(seed);
  if (base == "labeled") {
    return std::make_unique<SyntheticBackend>(seed, catalog_default());
  }
  throw Error(ErrorKind::kConfigError, "unknown mock backend '" + kind + "'");
}

}  // namespace csx

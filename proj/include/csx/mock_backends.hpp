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

// Deterministic offline backends.

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "csx/llm.hpp"
#include "csx/relations.hpp"

namespace csx {

/// Replies with the user text.
class EchoBackend final : public Backend {
 public:
  ChatResponse complete(const ChatRequest& req) override;
  std::string name() const override { return "mock:echo"; }
  std::size_t provider_calls() const override { return calls_.load(); }

 private:
  std::atomic<std::size_t> calls_{0};
};

/// Replies with whatever the script returns; the script may throw csx::Error.
class ScriptedBackend final : public Backend {
 public:
  using Script = std::function<std::string(const ChatRequest&)>;
  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

  ChatResponse complete(const ChatRequest& req) override;
  std::string name() const override { return "mock:scripted"; }
  std::size_t provider_calls() const override { return calls_.load(); }

 private:
  Script script_;
  std::atomic<std::size_t> calls_{0};
};

/// Plays both roles, chosen by the request tag prefix.
///
/// As a generator ("expand:" tags) it answers every numbered definition in the
/// prompt with a synthetic sentence; with `label_catalog` set, each item ends
/// in "(label=<relation name>)" so tests can check the index mapping.
/// As a judge ("judge:" tags) it returns a uniformly random permutation of the
/// definition identifiers, seeded by (seed, cache_key), so repeated requests
/// get the same answer.
class SyntheticBackend final : public Backend {
 public:
  explicit SyntheticBackend(std::uint64_t seed,
                            std::optional<RelationCatalog> label_catalog = std::nullopt)
      : seed_(seed), label_catalog_(std::move(label_catalog)) {}

  ChatResponse complete(const ChatRequest& req) override;
  std::string name() const override { return "mock:synthetic"; }
  std::size_t provider_calls() const override { return calls_.load(); }

 private:
  std::uint64_t seed_;
  std::optional<RelationCatalog> label_catalog_;
  std::atomic<std::size_t> calls_{0};
};

/// Largest n such that the prompt has a line starting with "n. " or "[n] ".
std::size_t count_numbered_definitions(const std::string& prompt);

/// Builds a backend from a CLI spec: "echo", "synthetic[:seed]",
/// "labeled[:seed]".
std::unique_ptr<Backend> make_mock_backend(const std::string& kind);

}  // namespace csx

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

#include "csx/text.hpp"
#include "test_support.hpp"

namespace {

TEST(ReplyCorpus, EveryCaseMatchesItsExpectation) {
  const auto cases = nlohmann::json::parse(
      csx::read_file(csx::testing::fixtures_dir() / "replies" / "malformed_replies.json"));
  ASSERT_GE(cases.size(), 25u);
  for (const auto& c : cases) {
    EXPECT_EQ(csx::testing::check_reply_case(c), "") << c["name"].get<std::string>();
  }
}

}  // namespace

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

#include <array>
#include <set>

#include "csx/digest.hpp"
#include "csx/error.hpp"
#include "csx/rng.hpp"
#include "csx/text.hpp"

namespace {

using csx::Placeholder;

std::string sub(std::string_view tmpl, std::initializer_list<Placeholder> ps) {
  std::vector<Placeholder> v(ps);
  return csx::substitute(tmpl, v);
}

TEST(Substitute, ReplacesSlotsLiterally) {
  EXPECT_EQ(sub("Hi {a}, meet {b}.", {{"a", "User 1"}, {"b", "{a}"}}), "Hi User 1, meet {a}.");
}

TEST(Substitute, ElidesEmptySlotWithPrecedingSpace) {
  EXPECT_EQ(sub("Ends here. {example}", {{"example", std::nullopt}}), "Ends here.");
  EXPECT_EQ(sub("{example} starts", {{"example", std::nullopt}}), "starts");
  EXPECT_EQ(sub("a {example} b", {{"example", std::nullopt}}), "a b");
}

TEST(Substitute, UnknownSlotThrows) {
  try {
    sub("{nope}", {{"a", "x"}});
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), csx::ErrorKind::kUnknownPlaceholder);
  }
}

TEST(Substitute, NonSlotBracesAreCopied) {
  EXPECT_EQ(sub("{ not a slot } and {} and {a", {}), "{ not a slot } and {} and {a");
}

TEST(Text, Utf8LengthCountsCodePoints) {
  EXPECT_EQ(csx::utf8_length("abc"), 3u);
  EXPECT_EQ(csx::utf8_length("\xE2\x80\x93"), 1u);
  EXPECT_EQ(csx::utf8_length("caf\xC3\xA9"), 4u);
}

TEST(Text, SplitLinesStripsCarriageReturns) {
  const auto lines = csx::split_lines("a\r\nb\n\nc");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "a");
  EXPECT_EQ(lines[2], "");
  EXPECT_EQ(lines[3], "c");
}

TEST(Text, Trim) {
  EXPECT_EQ(csx::trim("  x y \t"), "x y");
  EXPECT_TRUE(csx::iequals("xAttr", "XATTR"));
}

TEST(Digest, KnownAnswers) {
  EXPECT_EQ(csx::sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(csx::sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Rng, SplitMix64KnownSequence) {
  // Published test vector for seed 1234567.
  std::uint64_t state = 1234567;
  const std::array<std::uint64_t, 5> want = {6457827717110365317ULL, 3203168211198807973ULL,
                                             9817491932198370423ULL, 4593380528125082431ULL,
                                             16408922859458223821ULL};
  for (auto w : want) EXPECT_EQ(csx::splitmix64(state), w);
}

// Straight transcription of the reference xoshiro256** step.
struct ReferenceXoshiro {
  std::uint64_t s[4];
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

TEST(Rng, MatchesReferenceStep) {
  std::uint64_t seed = 42;
  ReferenceXoshiro ref{};
  for (auto& w : ref.s) w = csx::splitmix64(seed);
  csx::Xoshiro256 rng(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(rng.next(), ref.next());
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  csx::Xoshiro256 rng(7);
  std::array<int, 12> counts{};
  for (int i = 0; i < 120000; ++i) {
    const auto v = rng.below(12);
    ASSERT_LT(v, 12u);
    ++counts[v];
  }
  for (int c : counts) {
    EXPECT_GT(c, 9500);
    EXPECT_LT(c, 10500);
  }
}

TEST(Rng, ShuffleIsAPermutationAndSeeded) {
  std::vector<int> a(50), b(50);
  for (int i = 0; i < 50; ++i) a[i] = b[i] = i;
  csx::Xoshiro256 r1(3), r2(3);
  csx::shuffle(std::span<int>(a), r1);
  csx::shuffle(std::span<int>(b), r2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 50u);
}

TEST(Rng, UnitInHalfOpenInterval) {
  csx::Xoshiro256 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

}  // namespace

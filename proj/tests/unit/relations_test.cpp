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

#include "csx/error.hpp"
#include "csx/relations.hpp"

namespace {

using csx::RelationId;

TEST(Relations, CanonicalOrderAndNames) {
  const std::vector<std::string> want = {"xAttr",  "xWant",  "xNeed",   "xEffect",
                                         "xReact", "xIntent", "oWant",  "oReact",
                                         "oEffect", "HinderedBy", "IsAfter", "HasSubEvent"};
  const auto& cat = csx::catalog_default();
  ASSERT_EQ(cat.size(), 12u);
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(csx::relation_name(cat[i].id), want[i]);
    EXPECT_EQ(csx::canonical_index(cat[i].id), i);
  }
}

TEST(Relations, TemplatesAreVerbatim) {
  const auto& cat = csx::catalog_default();
  EXPECT_EQ(cat.def(RelationId::xAttr).template_text,
            "The response should reflect what {support_speaker} looks like after going "
            "through what is being talked about. {example}");
  EXPECT_EQ(cat.def(RelationId::xEffect).template_text,
            "The response should reflect how the situation will influences {support_speaker} "
            "after the conversation. {example}");
  EXPECT_EQ(cat.def(RelationId::oEffect).template_text,
            "The response should reflect how the situation will influences {speaker} after the "
            "conversation. {example}");
  EXPECT_EQ(cat.def(RelationId::HinderedBy).template_text,
            "The response should state facts why what is being discussed in the conversation "
            "could not happen. {example}");
  EXPECT_EQ(cat.def(RelationId::IsAfter).template_text,
            "The response should reflect what led to the current situation discussed with "
            "{support_speaker}. {example}");
  for (const auto& def : cat) {
    EXPECT_NE(def.template_text.find("{example}"), std::string::npos);
  }
}

TEST(Relations, RenderBindsSpeakers) {
  const auto& cat = csx::catalog_default();
  const csx::SpeakerBinding b{"User 2", "User 1"};
  EXPECT_EQ(csx::render_definition(cat.def(RelationId::xReact), b, std::nullopt),
            "The response should reflect how User 2 would react to what is being talked about.");
  EXPECT_EQ(csx::render_definition(cat.def(RelationId::oWant), b, "E.g. to rest."),
            "The response should reflect the final objective User 1 desires to reach following "
            "the conversation. E.g. to rest.");
}

TEST(Relations, RenderRejectsEqualSpeakers) {
  EXPECT_THROW(csx::render_definition(csx::catalog_default()[0], {"User 1", "User 1"},
                                      std::nullopt),
               csx::Error);
}

TEST(Relations, LenientLabelParsing) {
  EXPECT_EQ(csx::parse_relation_label("[ cs: IsAfter ]"), RelationId::IsAfter);
  EXPECT_EQ(csx::parse_relation_label("hindered by"), RelationId::HinderedBy);
  EXPECT_EQ(csx::parse_relation_label("OREACT"), RelationId::oReact);
  try {
    csx::parse_relation_label("xFeel");
    FAIL();
  } catch (const csx::Error& e) {
    EXPECT_EQ(e.kind(), csx::ErrorKind::kUnknownRelation);
  }
}

TEST(Relations, StrictNameLookup) {
  EXPECT_EQ(csx::relation_from_name("xNeed"), RelationId::xNeed);
  EXPECT_FALSE(csx::relation_from_name("xneed").has_value());
}

TEST(Relations, CatalogOverrideFromJson) {
  const auto cat = csx::catalog_from_json_text(
      R"([{"id":"oReact","template":"How does {speaker} feel? {example}"},
          {"id":"xAttr","template":"Describe {support_speaker}."}])");
  ASSERT_EQ(cat.size(), 2u);
  EXPECT_EQ(cat[0].id, RelationId::oReact);
  EXPECT_EQ(cat.index_of(RelationId::xAttr), 1u);
  EXPECT_FALSE(cat.contains(RelationId::xWant));
}

TEST(Relations, CatalogRejectsDuplicatesAndUnknowns) {
  EXPECT_THROW(csx::catalog_from_json_text(
                   R"([{"id":"xAttr","template":"a"},{"id":"xAttr","template":"b"}])"),
               csx::Error);
  EXPECT_THROW(csx::catalog_from_json_text(R"([{"id":"xFeel","template":"a"}])"), csx::Error);
  EXPECT_THROW(csx::catalog_from_json_text("[]"), csx::Error);
}

}  // namespace

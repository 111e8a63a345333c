/*
 * Copyright 2026 The prism Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "prism/attribution.h"

#include <cmath>
#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "prism/error.h"
#include "stroke_cases.h"
#include "test_support.h"

namespace prism {
namespace {

using ::testing::HasSubstr;

struct StrokeFixture {
  TaskSpec task;
  Instance x;
  ReconstructionResult result;
};

StrokeFixture first_stroke_case() {
  const auto& c = testing::stroke_cases()[0];
  std::vector<FactorSpec> specs;
  StrokeFixture f;
  std::vector<ShapleyEstimate> estimates;
  for (std::size_t j = 0; j < c.phis.size(); ++j) {
    specs.push_back({c.phis[j].first, FactorKind::kCategorical, "", ""});
    f.x.values.push_back(make_categorical("v" + std::to_string(j)));
    ShapleyEstimate e;
    e.factor = {j, c.phis[j].first};
    e.phi = c.phis[j].second;
    e.k_samples = 10;
    e.std_error = 0.05;
    estimates.push_back(e);
  }
  f.task.id = "stroke";
  f.task.schema = FactorSchema(specs);
  ReferenceInstance ref;
  for (std::size_t j = 0; j < specs.size(); ++j) ref.values.push_back(make_categorical("r"));
  f.task.reference = ref;
  f.x.id = "case-1";
  f.x.label = 1;
  f.result = reconstruct(testing::kStrokeCaseBaseLogit, estimates);
  return f;
}

TEST(Attribution, MakeCarriesValuesAndLedger) {
  const StrokeFixture f = first_stroke_case();
  const AttributionResult a = make_attribution(f.task, f.x, f.result, "prism");
  ASSERT_EQ(a.factors.size(), 10u);
  EXPECT_EQ(a.instance_id, "case-1");
  EXPECT_EQ(a.label, 1);
  EXPECT_EQ(a.factors[2].factor.name, "Hypertension");
  EXPECT_EQ(render_value(*a.factors[2].reference_value), "r");
  EXPECT_NEAR(a.phi_sum(), 4.240, 1e-9);
  EXPECT_NEAR(a.total_logit, -0.355, 1e-3);
  EXPECT_NEAR(a.probability, 0.413, 2e-3);
  EXPECT_EQ(a.find("Age")->phi, 1.17);
  EXPECT_EQ(a.find("Missing"), nullptr);
}

TEST(Attribution, LedgerText) {
  const AttributionResult a =
      make_attribution(first_stroke_case().task, first_stroke_case().x,
                       first_stroke_case().result, "prism");
  const std::string text = a.ledger_text();
  EXPECT_THAT(text, HasSubstr("Instance case-1 (prism)"));
  EXPECT_THAT(text, HasSubstr("Hypertension"));
  EXPECT_THAT(text, HasSubstr("1.640"));
  EXPECT_THAT(text, HasSubstr("Base logit:      -4.5951"));
  EXPECT_THAT(text, HasSubstr("Sum of phi:      4.240"));
  EXPECT_THAT(text, HasSubstr("Total logit:     -0.355"));
  EXPECT_THAT(text, HasSubstr("Predicted prob:  0.412"));
}

TEST(Attribution, JsonRoundTrip) {
  StrokeFixture f = first_stroke_case();
  f.result.contributions[0].sampled_sets = {BackgroundSet(0, {1, 2}), BackgroundSet(0, {})};
  AttributionResult a = make_attribution(f.task, f.x, f.result, "prism");
  EXPECT_EQ(AttributionResult::from_json(a.to_json()), a);
  a.factors[1].std_error.reset();
  a.factors[1].reference_value.reset();
  a.label.reset();
  const auto j = a.to_json();
  EXPECT_TRUE(j.at("factors")[1].at("std_error").is_null());
  EXPECT_EQ(AttributionResult::from_json(j), a);
  EXPECT_EQ(j.at("factors")[0].at("sampled_sets"), nlohmann::json::parse("[[1, 2], []]"));
  EXPECT_THROW(AttributionResult::from_json(nlohmann::json::object()), IngestionError);
}

}  // namespace
}  // namespace prism

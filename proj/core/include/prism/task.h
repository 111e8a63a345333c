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

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prism/factor.h"
#include "prism/shapley.h"

namespace prism {

// A fully specified instance used to impute unrevealed factors.
struct ReferenceInstance {
  std::vector<FactorValue> values;

  std::size_t size() const { return values.size(); }
};

// Named prompt templates with {{placeholder}} substitution. Built-in defaults
// exist for every id; a task may override any of them.
class PromptLibrary {
 public:
  static constexpr std::string_view kComparative = "comparative";
  static constexpr std::string_view kTable = "table";
  static constexpr std::string_view kScore = "score";
  static constexpr std::string_view kLevel = "level";
  static constexpr std::string_view kIcl = "icl";
  static constexpr std::string_view kPerClass = "per_class";
  static constexpr std::string_view kProposeAspects = "propose_aspects";
  static constexpr std::string_view kSummarizeAspect = "summarize_aspect";

  static const std::vector<std::string_view>& ids();
  static std::string_view builtin(std::string_view id);

  // Throws ConfigError for unknown ids.
  void set(std::string_view id, std::string text);
  const std::string& get(std::string_view id) const;

 private:
  std::map<std::string, std::string, std::less<>> overrides_;
};

// Replaces every {{key}} with vars[key]. Unknown placeholders are an error so
// that template typos surface immediately.
std::string fill_template(std::string_view text,
                          const std::map<std::string, std::string>& vars);

struct TaskSpec {
  std::string id;
  // Positive-form question, e.g. "How likely is this patient to have a stroke?"
  std::string question;
  // Negated form, required only by the contrast baseline.
  std::string negated_question;
  // Optional preamble describing the population or setting.
  std::string description;
  // Noun for one instance in prompts ("patient", "applicant", ...).
  std::string subject = "case";

  FactorSchema schema;
  std::optional<ReferenceInstance> reference;
  double base_logit = 0.0;

  // Multi-class tasks list their class names; binary tasks leave this empty.
  std::vector<std::string> classes;
  std::vector<double> class_base_logits;

  int k = kDefaultSampleCount;
  double temperature = 1.0;
  std::size_t table_row_limit = 20;
  PromptLibrary prompts;

  std::size_t factor_count() const { return schema.size(); }
};

}  // namespace prism

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

#include <span>
#include <string>
#include <vector>

#include "prism/factor.h"
#include "prism/task.h"

namespace prism {

// "- Name: value" per revealed factor, schema order. A case with nothing
// revealed renders as a single "(no information provided)" bullet.
std::string render_case(const TaskSpec& task, const PartialRow& row);

// Compact JSON object {factor name: rendered value}, schema order.
std::string render_instance_json(const TaskSpec& task,
                                 const std::vector<FactorValue>& values);

// Both members of a with/without pair in one prompt; Case A is the row that
// includes the factor of interest. Answers come back in that order.
std::string render_comparative_prompt(const TaskSpec& task,
                                      const PartialRow& with_factor,
                                      const PartialRow& without_factor);

// Per-class variant: asks for every class probability of Case A, then of
// Case B.
std::string render_per_class_prompt(const TaskSpec& task,
                                    const PartialRow& with_factor,
                                    const PartialRow& without_factor);

// Embeds an already-serialized Markdown table of `row_count` rows.
std::string render_table_prompt(const TaskSpec& task, const std::string& markdown,
                                std::size_t row_count);

std::string render_score_prompt(const TaskSpec& task,
                                 const std::vector<FactorValue>& values);

// Uses the negated question when `negated` is set.
std::string render_level_prompt(const TaskSpec& task,
                                 const std::vector<FactorValue>& values,
                                 bool negated = false);

struct RenderedDemonstration {
  std::vector<FactorValue> values;
  bool positive = false;
};

// With no demonstrations this is byte-identical to render_score_prompt.
std::string render_icl_prompt(const TaskSpec& task,
                              std::span<const RenderedDemonstration> demos,
                              const std::vector<FactorValue>& values);

}  // namespace prism

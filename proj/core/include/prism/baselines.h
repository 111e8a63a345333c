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

// Comparison methods: n-shot level and score prompting, the contrast
// method, and in-context learning.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "prism/oracle.h"
#include "prism/random.h"
#include "prism/task.h"

namespace prism::baselines {

struct LikelihoodLevel {
  std::string label;
  double value = 0.0;
};

// The seven verbal levels, from "very unlikely" (0.05) to "very likely" (0.95).
const std::vector<LikelihoodLevel>& likelihood_levels();

// Throws ParseError for labels outside the fixed set. Matching ignores case,
// surrounding quotes, brackets and trailing punctuation.
double level_value(std::string_view label);

// The level named in a response: the "Answer:" segment if present, else the
// last non-empty line.
std::string parse_level_label(std::string_view raw_text);

// Most frequent label; ties go to the label nearer 0.5, then the lower value.
std::string modal_label(const std::vector<std::string>& labels);

// Label whose value is nearest p; ties go to the lower value.
std::string nearest_level(double p);

// Mapped value of the modal label over n independent level queries. Every
// repeat after the first bypasses the cache and carries a distinct nonce.
double nshot_level(const TaskSpec& task, const Instance& x, TextOracle& oracle, int n);

// Mean of n numeric probability answers.
double nshot_score(const TaskSpec& task, const Instance& x, EvaluationOracle& oracle,
                   int n);

// p_pos / (p_pos + p_neg). Throws InputError when the sum is zero.
double contrast_normalize(double p_pos, double p_neg);

// One positive-form and one negated-form level query, normalized.
double contrast(const TaskSpec& task, const Instance& x, TextOracle& oracle);

struct Demonstration {
  std::string id;
  std::vector<FactorValue> values;
  bool positive = false;
};

// Draws n_positive and n_negative labeled rows from `pool`, skipping the ids
// in `exclude`. Throws SizeError when a class runs short.
std::vector<Demonstration> select_demonstrations(const std::vector<Instance>& pool,
                                                 std::size_t n_positive,
                                                 std::size_t n_negative, Rng& rng,
                                                 const std::vector<std::string>& exclude = {});

// Prompt with the demonstrations in seeded shuffled order.
std::string icl_prompt(const TaskSpec& task, const Instance& x,
                       std::vector<Demonstration> demos, std::uint64_t seed);

double icl(const TaskSpec& task, const Instance& x, const std::vector<Demonstration>& demos,
           EvaluationOracle& oracle, std::uint64_t seed);

// Single full-instance score query.
OracleQuery score_query(const TaskSpec& task, const Instance& x);

// Answers level queries from a probability oracle: evaluates the row payload,
// flips the probability for negated queries, and names the nearest level.
class LevelAdapter : public TextOracle {
 public:
  explicit LevelAdapter(EvaluationOracle& inner) : inner_(inner) {}

  std::string model_id() const override { return inner_.model_id(); }
  TextResponse complete(const TextQuery& query) override;

 private:
  EvaluationOracle& inner_;
};

}  // namespace prism::baselines

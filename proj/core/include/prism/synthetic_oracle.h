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

// Deterministic synthetic oracles. They read the structured row payload of a
// query, never the prompt text, and answer in double precision.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/factor.h"
#include "prism/oracle.h"
#include "prism/random.h"
#include "prism/shapley.h"

namespace prism {

// Logit of a (partially revealed) row.
using RowModel = std::function<double(const PartialRow&)>;
// Per-class logits of a row; each class probability is sigmoid(logit).
using ClassRowModel = std::function<std::vector<double>(const PartialRow&)>;

// Maps a factor value to the scalar a linear model multiplies by its weight.
// Absent factors always encode to zero.
using FactorEncoder = std::function<double(const FactorValue&)>;

// Numeric value itself (0 for non-numeric values).
FactorEncoder numeric_encoder(double center = 0.0);
// 1 when the numeric value is >= threshold, else 0.
FactorEncoder threshold_encoder(double threshold);
// Looks the category (or text) up in `codes`; unknown categories encode to 0,
// so the reference category should be left out to act as the zero vector.
FactorEncoder category_encoder(std::map<std::string, double> codes);

// z = bias + sum_j weight_j * e_j(x_j) + sum_(a,b) c_ab * e_a(x_a) * e_b(x_b)
class LinearLogitModel {
 public:
  struct Interaction {
    std::size_t a = 0;
    std::size_t b = 0;
    double coefficient = 0.0;
  };

  LinearLogitModel(double bias, std::vector<double> weights,
                   std::vector<FactorEncoder> encoders,
                   std::vector<Interaction> interactions = {});

  // Builds a model from a JSON document keyed by factor name:
  //   {"bias": b,
  //    "factors": {"Age": {"weight": 0.05, "center": 40},
  //                "Glucose": {"weight": 1.2, "threshold": 140},
  //                "Gender": {"categories": {"Female": -0.1}}},
  //    "interactions": [{"a": "Age", "b": "Glucose", "coefficient": 0.4}]}
  // Factors not listed get weight 0.
  static LinearLogitModel from_json(const nlohmann::json& j,
                                    const FactorSchema& schema);

  double operator()(const PartialRow& row) const;
  double logit_of(const std::vector<FactorValue>& values) const;

  std::size_t factor_count() const { return weights_.size(); }

 private:
  double bias_;
  std::vector<double> weights_;
  std::vector<FactorEncoder> encoders_;
  std::vector<Interaction> interactions_;
};

// Pure function of the query payload. raw_text is the canonical
// "Answer: [...]" line so that transcripts recorded from it replay exactly.
class DeterministicOracle : public EvaluationOracle {
 public:
  DeterministicOracle(std::string name, RowModel model);
  DeterministicOracle(std::string name, ClassRowModel model);

  std::string model_id() const override { return name_; }
  OracleResponse evaluate(const OracleQuery& query) override;

 private:
  std::string name_;
  RowModel model_;
  ClassRowModel class_model_;
};

// Adds independent N(0, sigma^2) noise to the logit of every evaluated row.
// Draws are sequential from one seeded stream, so results are reproducible
// for a fixed call order.
class NoisyOracle : public EvaluationOracle {
 public:
  NoisyOracle(std::string name, RowModel model, double sigma, std::uint64_t seed);

  std::string model_id() const override { return name_; }
  OracleResponse evaluate(const OracleQuery& query) override;

 private:
  std::string name_;
  RowModel model_;
  double sigma_;
  std::mutex mu_;
  Rng rng_;
};

// Replies with pre-scripted raw texts in order; the last one repeats. Used
// to exercise parsing paths of baselines.
class ScriptedOracle : public EvaluationOracle, public TextOracle {
 public:
  ScriptedOracle(std::string name, std::vector<std::string> replies);

  std::string model_id() const override { return name_; }
  OracleResponse evaluate(const OracleQuery& query) override;
  TextResponse complete(const TextQuery& query) override;

  std::vector<std::string> prompts() const;

 private:
  std::string next_reply(std::string prompt);

  std::string name_;
  std::vector<std::string> replies_;
  mutable std::mutex mu_;
  std::size_t cursor_ = 0;
  std::vector<std::string> prompts_;
};

}  // namespace prism

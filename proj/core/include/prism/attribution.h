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

// Per-instance attribution report: factor values, their contributions and
// the reconstruction ledger. Serializes to and from JSON.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/factor.h"
#include "prism/shapley.h"
#include "prism/task.h"

namespace prism {

struct FactorAttribution {
  FactorId factor;
  FactorValue value;
  std::optional<FactorValue> reference_value;
  double phi = 0.0;
  int k_samples = 0;
  std::optional<double> std_error;
  std::vector<std::vector<std::size_t>> sampled_sets;

  friend bool operator==(const FactorAttribution&, const FactorAttribution&) = default;
};

struct AttributionResult {
  std::string instance_id;
  std::string method;
  std::optional<int> label;
  std::vector<FactorAttribution> factors;
  double base_logit = 0.0;
  double total_logit = 0.0;
  double probability = 0.5;

  double phi_sum() const;
  const FactorAttribution* find(std::string_view factor_name) const;

  nlohmann::json to_json() const;
  static AttributionResult from_json(const nlohmann::json& j);

  // Aligned table of factor, value, reference, phi, then the ledger
  // (base, sum, total, probability).
  std::string ledger_text() const;

  friend bool operator==(const AttributionResult&, const AttributionResult&) = default;
};

AttributionResult make_attribution(const TaskSpec& task, const Instance& x,
                                   const ReconstructionResult& result,
                                   std::string method);

}  // namespace prism

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

// Four reference Stroke attributions (per-factor phi, shared base logit)
// and the dataset base-rate table, used by reconstruction tests.

#pragma once

#include <array>
#include <string>
#include <vector>

namespace prism::testing {

inline constexpr double kStrokeCaseBaseLogit = -4.5951;

struct StrokeCase {
  std::vector<std::pair<std::string, double>> phis;
  double sum;
  double total;
  double probability;
};

inline const std::array<StrokeCase, 4>& stroke_cases() {
  static const std::array<StrokeCase, 4> kCases = {{
      {{{"Gender", -0.08}, {"Age", 1.17}, {"Hypertension", 1.64}, {"Heart Disease", 0.66},
        {"Marital Status", 0.0}, {"Work Type", 0.0}, {"Residence Type", 0.0},
        {"Glucose Level", 0.0}, {"BMI", 0.0}, {"Smoking Status", 0.85}},
       4.240, -0.355, 0.413},
      {{{"Gender", 0.0}, {"Age", 0.57}, {"Hypertension", 1.41}, {"Heart Disease", 0.0},
        {"Marital Status", 0.0}, {"Work Type", 0.0}, {"Residence Type", 0.0},
        {"Glucose Level", 0.51}, {"BMI", 0.0}, {"Smoking Status", 0.0}},
       2.490, -2.105, 0.109},
      {{{"Gender", 0.0}, {"Age", 1.15}, {"Hypertension", 0.0}, {"Heart Disease", 1.17},
        {"Marital Status", 0.0}, {"Work Type", 0.0}, {"Residence Type", 0.0},
        {"Glucose Level", 0.62}, {"BMI", 0.53}, {"Smoking Status", 0.60}},
       4.070, -0.525, 0.372},
      {{{"Gender", 0.0}, {"Age", -0.77}, {"Hypertension", 0.0}, {"Heart Disease", 0.0},
        {"Marital Status", 0.0}, {"Work Type", 0.0}, {"Residence Type", 0.0},
        {"Glucose Level", 0.98}, {"BMI", 0.0}, {"Smoking Status", 0.0}},
       0.210, -4.385, 0.012},
  }};
  return kCases;
}

struct BaseRate {
  std::string dataset;
  double probability;
  double logit;
};

inline const std::array<BaseRate, 4>& base_rates() {
  static const std::array<BaseRate, 4> kRates = {{
      {"Stroke", 0.001, -6.9068},
      {"Adult", 0.354, -0.6015},
      {"Heart Disease", 0.410, -0.3640},
      {"Loan", 0.182, -1.5029},
  }};
  return kRates;
}

}  // namespace prism::testing

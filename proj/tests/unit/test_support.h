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

// Shared fixtures for the unit tests. The Shapley references here are
// written in permutation form, independent of the subset-form code under
// test.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "prism/factor.h"
#include "prism/random.h"
#include "prism/shapley.h"
#include "prism/synthetic_oracle.h"
#include "prism/task.h"

namespace prism::testing {

// Average marginal contribution of `factor` over all m! orderings.
inline double permutation_shapley(const std::function<double(std::uint64_t)>& v,
                                  std::size_t m, std::size_t factor) {
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  double total = 0.0;
  double count = 0.0;
  do {
    std::uint64_t before = 0;
    for (std::size_t j : order) {
      if (j == factor) break;
      before |= std::uint64_t{1} << j;
    }
    total += v(before | (std::uint64_t{1} << factor)) - v(before);
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  return total / count;
}

inline FactorSchema numeric_schema(std::size_t m) {
  std::vector<FactorSpec> specs;
  for (std::size_t j = 0; j < m; ++j) {
    specs.push_back({"f" + std::to_string(j), FactorKind::kNumeric, "", ""});
  }
  return FactorSchema(specs);
}

// Logit model with random main effects and pairwise interactions on numeric
// factors, plus matching random x and r.
struct RandomGame {
  FactorSchema schema;
  std::vector<double> weights;
  std::vector<LinearLogitModel::Interaction> interactions;
  double bias = 0.0;
  std::vector<FactorValue> x;
  ReferenceInstance r;

  LinearLogitModel model() const {
    return LinearLogitModel(bias, weights,
                            std::vector<FactorEncoder>(weights.size(), numeric_encoder()),
                            interactions);
  }

  // Logit of a complete row, computed directly from the coefficients.
  double logit_of(const std::vector<FactorValue>& row) const {
    auto val = [&row](std::size_t j) { return std::get<NumericValue>(row[j]).value; };
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * val(j);
    for (const auto& it : interactions) z += it.coefficient * val(it.a) * val(it.b);
    return z;
  }
};

inline RandomGame random_game(Rng& rng, std::size_t m) {
  RandomGame g;
  g.schema = numeric_schema(m);
  g.bias = rng.normal(0.0, 1.0);
  for (std::size_t j = 0; j < m; ++j) {
    g.weights.push_back(rng.normal(0.0, 1.0));
    g.x.push_back(make_numeric(std::round(rng.normal(0.0, 1.0) * 100.0) / 100.0));
    g.r.values.push_back(make_numeric(std::round(rng.normal(0.0, 1.0) * 100.0) / 100.0));
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      if (rng.uniform01() < 0.4) g.interactions.push_back({a, b, rng.normal(0.0, 0.5)});
    }
  }
  return g;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("prism_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace prism::testing

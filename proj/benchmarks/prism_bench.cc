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

#include <benchmark/benchmark.h>

#include <cmath>
#include <variant>
#include <vector>

#include "prism/metrics.h"
#include "prism/oracle.h"
#include "prism/prism.h"
#include "prism/random.h"
#include "prism/shapley.h"
#include "prism/synthetic_oracle.h"
#include "prism/tabular.h"

namespace prism {
namespace {

// Linear game plus pairwise interactions on consecutive factors.
CoalitionValue interaction_game(std::size_t m) {
  std::vector<double> w(m);
  Rng rng(7);
  for (auto& x : w) x = rng.normal();
  return [w, m](const Coalition& s) {
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!s.contains(j)) continue;
      z += w[j];
      if (j + 1 < m && s.contains(j + 1)) z += 0.1 * w[j] * w[j + 1];
    }
    return z;
  };
}

void BM_ExactShapleyAll(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto game = interaction_game(m);
  for (auto _ : state) benchmark::DoNotOptimize(exact_shapley_all(game, m));
  state.SetComplexityN(static_cast<std::int64_t>(m));
}
BENCHMARK(BM_ExactShapleyAll)->DenseRange(6, 16, 2);

TaskSpec tabular_task(std::size_t m) {
  std::vector<FactorSpec> specs;
  ReferenceInstance ref;
  for (std::size_t j = 0; j < m; ++j) {
    specs.push_back({"factor " + std::to_string(j), FactorKind::kNumeric, "", ""});
    ref.values.push_back(make_numeric(0.0));
  }
  TaskSpec t;
  t.id = "bench";
  t.question = "How likely is this case to be positive?";
  t.schema = FactorSchema(specs);
  t.reference = ref;
  return t;
}

Instance numeric_instance(std::size_t m) {
  Instance x;
  x.id = "x";
  for (std::size_t j = 0; j < m; ++j) x.values.push_back(make_numeric(static_cast<double>(j % 3)));
  return x;
}

RowModel linear_row_model(std::size_t m) {
  std::vector<double> w(m);
  for (std::size_t j = 0; j < m; ++j) w[j] = 0.1 * static_cast<double>(j) - 0.3;
  return [w](const PartialRow& row) {
    double z = -1.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!row[j]) continue;
      if (const auto* v = std::get_if<NumericValue>(&*row[j])) z += w[j] * v->value;
    }
    return z;
  };
}

void BM_PrismEstimate(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<int>(state.range(1));
  const TaskSpec task = tabular_task(m);
  const Instance x = numeric_instance(m);
  DeterministicOracle oracle("bench", linear_row_model(m));
  PrismOptions o;
  o.k = k;
  for (auto _ : state) benchmark::DoNotOptimize(prism_estimate(task, x, oracle, o));
}
BENCHMARK(BM_PrismEstimate)->Args({10, 10})->Args({10, 50})->Args({20, 10});

void BM_TabularPrism(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const TaskSpec task = tabular_task(m);
  const Instance x = numeric_instance(m);
  DeterministicOracle oracle("bench", linear_row_model(m));
  for (auto _ : state) benchmark::DoNotOptimize(tabular::tabular_prism(task, x, oracle));
}
BENCHMARK(BM_TabularPrism)->Arg(10)->Arg(20);

void BM_ContrastTableMarkdown(benchmark::State& state) {
  const TaskSpec task = tabular_task(10);
  const Instance x = numeric_instance(10);
  Rng rng(3);
  const auto table = tabular::build_contrast_table(task, x, 4, 10, rng);
  for (auto _ : state) benchmark::DoNotOptimize(tabular::to_markdown(task.schema, table));
}
BENCHMARK(BM_ContrastTableMarkdown);

void BM_ParseProbabilities(benchmark::State& state) {
  const std::string raw =
      "Comparing the two cases, the first shows higher risk.\nAnswer: [0.62, 0.31]\n";
  for (auto _ : state) benchmark::DoNotOptimize(parse_probabilities(raw, 2));
}
BENCHMARK(BM_ParseProbabilities);

std::vector<metrics::ScoredLabel> scored(std::size_t n) {
  Rng rng(5);
  std::vector<metrics::ScoredLabel> out(n);
  for (auto& s : out) {
    s.label = static_cast<int>(rng.uniform_index(2));
    s.score = 1.0 / (1.0 + std::exp(-(rng.normal() + (s.label ? 1.0 : -1.0))));
  }
  return out;
}

void BM_Auroc(benchmark::State& state) {
  const auto data = scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::auroc(data));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

void BM_BestF1(benchmark::State& state) {
  const auto data = scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::best_f1(data));
}
BENCHMARK(BM_BestF1)->Arg(1000)->Arg(100000);

void BM_WeightedReliability(benchmark::State& state) {
  const auto data = scored(static_cast<std::size_t>(state.range(0)));
  metrics::CalibrationConfig cfg;
  cfg.population_positive_rate = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(metrics::weighted_reliability(data, cfg));
}
BENCHMARK(BM_WeightedReliability)->Arg(1000)->Arg(100000);

}  // namespace
}  // namespace prism

BENCHMARK_MAIN();

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

#include "prism/prism.h"

#include <algorithm>

#include "prism/prompts.h"

namespace prism {

PartialRow reveal(const std::vector<FactorValue>& values, const Coalition& coalition) {
  PartialRow row(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (coalition.contains(j)) row[j] = values[j];
  }
  return row;
}

PartialRow reveal(const std::vector<FactorValue>& values, const BackgroundSet& background,
                  bool include_factor) {
  PartialRow row(values.size());
  for (std::size_t j : background.members()) row.at(j) = values[j];
  if (include_factor) row.at(background.factor_of_interest()) = values[background.factor_of_interest()];
  return row;
}

std::uint64_t factor_seed(std::uint64_t seed, const std::string& instance_id,
                          std::size_t factor) {
  return derive_seed(seed, instance_id, static_cast<std::uint64_t>(factor));
}

namespace {

void check_instance(const TaskSpec& task, const Instance& x) {
  if (x.values.size() != task.factor_count()) {
    throw InputError("instance '" + x.id + "' has " + std::to_string(x.values.size()) +
                     " factors, task '" + task.id + "' has " +
                     std::to_string(task.factor_count()));
  }
  task.schema.check_values(x.values);
}

QueryMetadata metadata_for(const TaskSpec& task, const Instance& x, std::size_t factor) {
  return {task.id, x.id, factor, task.temperature};
}

}  // namespace

OracleQuery comparative_query(const TaskSpec& task, const Instance& x,
                              const BackgroundSet& background) {
  OracleQuery q;
  q.kind = QueryKind::kComparativePair;
  q.rows = {reveal(x.values, background, true), reveal(x.values, background, false)};
  q.rendered_prompt = render_comparative_prompt(task, q.rows[0], q.rows[1]);
  q.expected_outputs = 2;
  q.metadata = metadata_for(task, x, background.factor_of_interest());
  return q;
}

OracleQuery per_class_query(const TaskSpec& task, const Instance& x,
                            const BackgroundSet& background) {
  OracleQuery q;
  q.kind = QueryKind::kPerClass;
  q.rows = {reveal(x.values, background, true), reveal(x.values, background, false)};
  q.rendered_prompt = render_per_class_prompt(task, q.rows[0], q.rows[1]);
  q.num_classes = task.classes.size();
  q.expected_outputs = 2 * q.num_classes;
  q.metadata = metadata_for(task, x, background.factor_of_interest());
  return q;
}

ShapleyEstimate estimate_factor(const TaskSpec& task, const Instance& x,
                                std::size_t factor, EvaluationOracle& oracle,
                                const PrismOptions& options) {
  Rng rng(factor_seed(options.seed, x.id, factor));
  auto evaluate = [&](const BackgroundSet& background, int) {
    const OracleResponse r = evaluate_checked(oracle, comparative_query(task, x, background));
    return PairProbabilities{r.probabilities[0], r.probabilities[1]};
  };
  EstimatorOptions est{options.k, options.keep_sampled_sets, options.clamps};
  return estimate_shapley(evaluate, task.schema.id(factor), task.factor_count(), rng, est);
}

InstanceAbortedError::InstanceAbortedError(std::string instance_id,
                                           std::vector<ShapleyEstimate> completed,
                                           std::vector<FactorFailure> failures)
    : Error(failures.empty() ? Kind::kQuery : failures.front().kind,
            "instance '" + instance_id + "' aborted: " +
                std::to_string(failures.size()) + " factor(s) failed" +
                (failures.empty() ? std::string()
                                  : "; first: " + failures.front().message)),
      instance_id_(std::move(instance_id)),
      completed_(std::move(completed)),
      failures_(std::move(failures)) {}

ReconstructionResult estimate_all_factors(const TaskSpec& task, const Instance& x,
                                          double base_logit,
                                          const FactorEstimator& estimate) {
  check_instance(task, x);
  std::vector<ShapleyEstimate> completed;
  std::vector<FactorFailure> failures;
  for (std::size_t i = 0; i < task.factor_count(); ++i) {
    try {
      completed.push_back(estimate(i));
    } catch (const Error& e) {
      failures.push_back({i, task.schema[i].name, e.kind(), e.what()});
    }
  }
  if (!failures.empty()) {
    throw InstanceAbortedError(x.id, std::move(completed), std::move(failures));
  }
  return reconstruct(base_logit, std::move(completed));
}

ReconstructionResult prism_estimate(const TaskSpec& task, const Instance& x,
                                    EvaluationOracle& oracle, const PrismOptions& options) {
  return estimate_all_factors(task, x, task.base_logit, [&](std::size_t i) {
    return estimate_factor(task, x, i, oracle, options);
  });
}

MulticlassResult combine_class_logits(std::vector<ReconstructionResult> per_class) {
  if (per_class.size() < 2) throw InputError("multi-class results need at least two classes");
  MulticlassResult out;
  out.per_class = std::move(per_class);
  for (const auto& r : out.per_class) out.class_logits.push_back(r.total_logit);
  out.distribution = softmax(out.class_logits);
  out.predicted = static_cast<std::size_t>(
      std::max_element(out.class_logits.begin(), out.class_logits.end()) -
      out.class_logits.begin());
  return out;
}

MulticlassResult multiclass_estimate(const TaskSpec& task, const Instance& x,
                                     EvaluationOracle& oracle, const PrismOptions& options) {
  const std::size_t classes = task.classes.size();
  if (classes < 2) throw ConfigError("task '" + task.id + "' lists fewer than two classes");
  if (!task.class_base_logits.empty() && task.class_base_logits.size() != classes) {
    throw ConfigError("task '" + task.id + "' has " +
                      std::to_string(task.class_base_logits.size()) +
                      " class base logits for " + std::to_string(classes) + " classes");
  }
  if (options.k < 1) throw InputError("K must be >= 1");
  check_instance(task, x);
  const std::size_t m = task.factor_count();
  auto to_logit = [&options](double p) {
    return options.clamps ? options.clamps->logit(p) : logit(p);
  };

  // per_factor[i][c] = estimate of factor i for class c
  std::vector<std::vector<ShapleyEstimate>> per_factor(m);
  std::vector<ShapleyEstimate> completed;
  std::vector<FactorFailure> failures;
  for (std::size_t i = 0; i < m; ++i) {
    Rng rng(factor_seed(options.seed, x.id, i));
    std::vector<std::vector<double>> diffs(classes);
    std::vector<BackgroundSet> sets;
    try {
      for (int k = 0; k < options.k; ++k) {
        BackgroundSet background = sample_background_set(i, m, rng);
        const OracleResponse r = evaluate_checked(oracle, per_class_query(task, x, background));
        for (std::size_t c = 0; c < classes; ++c) {
          diffs[c].push_back(to_logit(r.probabilities[c]) -
                             to_logit(r.probabilities[classes + c]));
        }
        if (options.keep_sampled_sets) sets.push_back(std::move(background));
      }
      for (std::size_t c = 0; c < classes; ++c) {
        ShapleyEstimate est = summarize_differences(task.schema.id(i), diffs[c]);
        est.sampled_sets = sets;
        per_factor[i].push_back(std::move(est));
      }
      completed.push_back(per_factor[i].front());
    } catch (const Error& e) {
      failures.push_back({i, task.schema[i].name, e.kind(),
                          "factor '" + task.schema[i].name + "': " + e.what()});
    }
  }
  if (!failures.empty()) {
    throw InstanceAbortedError(x.id, std::move(completed), std::move(failures));
  }
  std::vector<ReconstructionResult> per_class;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<ShapleyEstimate> contributions;
    for (std::size_t i = 0; i < m; ++i) contributions.push_back(per_factor[i][c]);
    const double base = task.class_base_logits.empty() ? 0.0 : task.class_base_logits[c];
    per_class.push_back(reconstruct(base, std::move(contributions)));
  }
  return combine_class_logits(std::move(per_class));
}

}  // namespace prism

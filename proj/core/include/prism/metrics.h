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

// Ranking and calibration metrics for binary scores.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace prism::metrics {

struct ScoredLabel {
  double score = 0.0;
  int label = 0;  // 0 or 1
};

// Mann-Whitney form with midranks for tied scores. Throws MetricError unless
// both classes are present.
double auroc(std::span<const ScoredLabel> data);

// Average precision: sum over distinct thresholds of recall gain times
// precision. Throws MetricError without positives.
double auprc(std::span<const ScoredLabel> data);

struct F1Result {
  double f1 = 0.0;
  // Predict positive when score >= threshold; +inf predicts all negative.
  double threshold = 0.0;
  double tpr_plus_tnr = 0.0;
};

// Threshold over the distinct scores (and +inf) maximizing TPR + TNR; ties
// go to the higher F1, then the lower threshold.
F1Result best_f1(std::span<const ScoredLabel> data);

struct CalibrationConfig {
  std::size_t bins = 10;
  // Positive rate of the evaluated sample; observed prevalence when unset.
  std::optional<double> eval_positive_rate;
  // Target population rate; equals the evaluation rate when unset.
  std::optional<double> population_positive_rate;
};

struct ReliabilityBin {
  double mean_predicted = 0.0;
  double positive_fraction = 0.0;
  double weight = 0.0;
  std::size_t count = 0;
};

struct ReliabilityCurve {
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
  double eval_positive_rate = 0.0;
  double population_positive_rate = 0.0;
  // Set when a zero-weight bin was folded into a neighbour.
  bool merged_degenerate_bins = false;
};

// Equal-count bins over the sorted scores. Positives weigh pi / pi_hat and
// negatives (1 - pi) / (1 - pi_hat). Throws MetricError when n < bins or a
// rate is outside (0, 1).
ReliabilityCurve weighted_reliability(std::span<const ScoredLabel> data,
                                      const CalibrationConfig& cfg = {});

// Same binning with unit weights.
double unweighted_ece(std::span<const ScoredLabel> data, std::size_t bins = 10);

// Fraction of exact matches. Throws InputError on a length mismatch or empty
// input.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

using Metric = std::function<double(std::span<const ScoredLabel>)>;

// Sample standard deviation of the metric over seeded resamples with
// replacement. Resamples on which the metric is undefined are skipped;
// nullopt when fewer than two remain.
std::optional<double> bootstrap_std_error(std::span<const ScoredLabel> data,
                                          const Metric& metric, int resamples = 1000,
                                          std::uint64_t seed = 0);

struct MetricsReport {
  std::string method;
  std::size_t n = 0;
  std::size_t positives = 0;
  double auroc = 0.0;
  double auprc = 0.0;
  F1Result best_f1;
  std::optional<double> auroc_se;
  std::optional<double> auprc_se;
  std::optional<double> f1_se;
  int bootstrap_resamples = 0;
  std::uint64_t bootstrap_seed = 0;
  ReliabilityCurve reliability;
  CalibrationConfig calibration;

  nlohmann::json to_json() const;
};

MetricsReport evaluate(const std::string& method, std::span<const ScoredLabel> data,
                       const CalibrationConfig& cfg = {}, int bootstrap_resamples = 1000,
                       std::uint64_t seed = 0);

// bin,mean_predicted,positive_fraction,weight
std::string reliability_csv(const ReliabilityCurve& curve);

}  // namespace prism::metrics

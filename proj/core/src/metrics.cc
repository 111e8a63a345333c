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

#include "prism/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "prism/error.h"
#include "prism/random.h"

namespace prism::metrics {
namespace {

struct Counts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

Counts check(std::span<const ScoredLabel> data) {
  Counts c;
  for (const auto& d : data) {
    if (!std::isfinite(d.score)) throw InputError("scores must be finite");
    if (d.label == 1) ++c.positives;
    else if (d.label == 0) ++c.negatives;
    else throw InputError("labels must be 0 or 1");
  }
  return c;
}

std::vector<ScoredLabel> sorted_desc(std::span<const ScoredLabel> data) {
  std::vector<ScoredLabel> v(data.begin(), data.end());
  std::stable_sort(v.begin(), v.end(),
                   [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
  return v;
}

}  // namespace

double auroc(std::span<const ScoredLabel> data) {
  const Counts c = check(data);
  if (c.positives == 0 || c.negatives == 0) {
    throw MetricError("AUROC is undefined without both classes");
  }
  std::vector<ScoredLabel> v(data.begin(), data.end());
  std::sort(v.begin(), v.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::size_t pos = 0;
    while (j < v.size() && v[j].score == v[i].score) pos += v[j++].label == 1;
    // ranks i+1 .. j share their mean
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    positive_rank_sum += midrank * static_cast<double>(pos);
    i = j;
  }
  const double p = static_cast<double>(c.positives);
  const double n = static_cast<double>(c.negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double auprc(std::span<const ScoredLabel> data) {
  const Counts c = check(data);
  if (c.positives == 0) throw MetricError("AUPRC is undefined without positives");
  const std::vector<ScoredLabel> v = sorted_desc(data);
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t gained = 0;
    const double s = v[i].score;
    while (i < v.size() && v[i].score == s) {
      if (v[i].label == 1) {
        ++tp;
        ++gained;
      } else {
        ++fp;
      }
      ++i;
    }
    if (gained > 0) {
      ap += static_cast<double>(gained) / static_cast<double>(c.positives) *
            (static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
  }
  return ap;
}

F1Result best_f1(std::span<const ScoredLabel> data) {
  const Counts c = check(data);
  if (c.positives == 0 || c.negatives == 0) {
    throw MetricError("best F1 is undefined without both classes");
  }
  const std::vector<ScoredLabel> v = sorted_desc(data);
  const auto P = static_cast<std::uint64_t>(c.positives);
  const auto N = static_cast<std::uint64_t>(c.negatives);
  auto f1_of = [P](std::uint64_t tp, std::uint64_t fp) {
    return tp == 0 ? 0.0
                   : 2.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + P);
  };
  // Threshold +inf: everything negative.
  std::uint64_t best_key = N * P;  // tp*N + tn*P with tp = 0, tn = N
  F1Result best{0.0, std::numeric_limits<double>::infinity(), 1.0};
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    const double s = v[i].score;
    while (i < v.size() && v[i].score == s) {
      (v[i].label == 1 ? tp : fp) += 1;
      ++i;
    }
    const std::uint64_t key = tp * N + (N - fp) * P;
    const double f1 = f1_of(tp, fp);
    // Thresholds only decrease along the sweep, so on a full tie the newer
    // one is the lower threshold.
    if (key > best_key || (key == best_key && f1 >= best.f1)) {
      best_key = key;
      best = {f1, s, static_cast<double>(key) / static_cast<double>(P * N)};
    }
  }
  return best;
}

namespace {

ReliabilityCurve bin_curve(std::span<const ScoredLabel> data, std::size_t bins,
                           double w_pos, double w_neg) {
  if (bins < 1) throw MetricError("bin count must be >= 1");
  if (data.size() < bins) {
    throw MetricError("need at least as many predictions as bins (" +
                      std::to_string(data.size()) + " < " + std::to_string(bins) + ")");
  }
  std::vector<ScoredLabel> v(data.begin(), data.end());
  std::stable_sort(v.begin(), v.end(),
                   [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
  ReliabilityCurve curve;
  const std::size_t n = v.size();
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * n / bins;
    const std::size_t hi = (b + 1) * n / bins;
    double w = 0.0, wp = 0.0, wy = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double wi = v[i].label == 1 ? w_pos : w_neg;
      w += wi;
      wp += wi * v[i].score;
      wy += wi * v[i].label;
    }
    if (w <= 0.0) {
      curve.merged_degenerate_bins = true;
      if (!curve.bins.empty()) curve.bins.back().count += hi - lo;
      continue;
    }
    curve.bins.push_back({wp / w, wy / w, w, hi - lo});
  }
  double total = 0.0;
  for (const auto& b : curve.bins) total += b.weight;
  if (total <= 0.0) throw MetricError("all reliability bins have zero weight");
  for (const auto& b : curve.bins) {
    curve.ece += b.weight / total * std::abs(b.mean_predicted - b.positive_fraction);
  }
  return curve;
}

}  // namespace

ReliabilityCurve weighted_reliability(std::span<const ScoredLabel> data,
                                      const CalibrationConfig& cfg) {
  const Counts c = check(data);
  const double pi_hat = cfg.eval_positive_rate.value_or(
      data.empty() ? 0.0 : static_cast<double>(c.positives) / static_cast<double>(data.size()));
  const double pi = cfg.population_positive_rate.value_or(pi_hat);
  if (!(pi_hat > 0.0 && pi_hat < 1.0) || !(pi > 0.0 && pi < 1.0)) {
    throw MetricError("positive rates must lie in (0, 1)");
  }
  ReliabilityCurve curve = bin_curve(data, cfg.bins, pi / pi_hat, (1.0 - pi) / (1.0 - pi_hat));
  curve.eval_positive_rate = pi_hat;
  curve.population_positive_rate = pi;
  return curve;
}

double unweighted_ece(std::span<const ScoredLabel> data, std::size_t bins) {
  check(data);
  return bin_curve(data, bins, 1.0, 1.0).ece;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw InputError("accuracy needs equal-length inputs (" + std::to_string(predicted.size()) +
                     " vs " + std::to_string(truth.size()) + ")");
  }
  if (predicted.empty()) throw InputError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::optional<double> bootstrap_std_error(std::span<const ScoredLabel> data,
                                          const Metric& metric, int resamples,
                                          std::uint64_t seed) {
  if (data.empty() || resamples < 2) return std::nullopt;
  Rng rng(derive_seed(seed, "bootstrap"));
  std::vector<ScoredLabel> sample(data.size());
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    for (auto& s : sample) s = data[rng.uniform_index(data.size())];
    try {
      values.push_back(metric(sample));
    } catch (const MetricError&) {
    }
  }
  if (values.size() < 2) return std::nullopt;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

MetricsReport evaluate(const std::string& method, std::span<const ScoredLabel> data,
                       const CalibrationConfig& cfg, int bootstrap_resamples,
                       std::uint64_t seed) {
  MetricsReport r;
  r.method = method;
  r.n = data.size();
  r.positives = check(data).positives;
  r.auroc = auroc(data);
  r.auprc = auprc(data);
  r.best_f1 = best_f1(data);
  r.bootstrap_resamples = bootstrap_resamples;
  r.bootstrap_seed = seed;
  r.auroc_se = bootstrap_std_error(data, auroc, bootstrap_resamples, seed);
  r.auprc_se = bootstrap_std_error(data, auprc, bootstrap_resamples, seed);
  r.f1_se = bootstrap_std_error(
      data, [](std::span<const ScoredLabel> d) { return best_f1(d).f1; },
      bootstrap_resamples, seed);
  r.calibration = cfg;
  r.reliability = weighted_reliability(data, cfg);
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : reliability.bins) {
    bins.push_back({{"mean_predicted", b.mean_predicted},
                    {"positive_fraction", b.positive_fraction},
                    {"weight", b.weight},
                    {"count", b.count}});
  }
  return {{"method", method},
          {"n", n},
          {"positives", positives},
          {"auroc", auroc},
          {"auprc", auprc},
          {"best_f1", best_f1.f1},
          {"best_f1_threshold", std::isfinite(best_f1.threshold)
                                    ? nlohmann::json(best_f1.threshold)
                                    : nlohmann::json("inf")},
          {"ece", reliability.ece},
          {"std_error", {{"auroc", opt(auroc_se)}, {"auprc", opt(auprc_se)}, {"best_f1", opt(f1_se)}}},
          {"reliability",
           {{"bins", std::move(bins)},
            {"bin_count", calibration.bins},
            {"eval_positive_rate", reliability.eval_positive_rate},
            {"population_positive_rate", reliability.population_positive_rate},
            {"merged_degenerate_bins", reliability.merged_degenerate_bins}}},
          {"conventions",
           {{"auprc", "average precision, step interpolation"},
            {"best_f1", "threshold maximizing TPR+TNR over distinct scores"},
            {"std_error", "bootstrap over instances"},
            {"bootstrap_resamples", bootstrap_resamples},
            {"bootstrap_seed", bootstrap_seed}}}};
}

std::string reliability_csv(const ReliabilityCurve& curve) {
  std::string out = "bin,mean_predicted,positive_fraction,weight\n";
  char buf[160];
  for (std::size_t b = 0; b < curve.bins.size(); ++b) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", b, curve.bins[b].mean_predicted,
                  curve.bins[b].positive_fraction, curve.bins[b].weight);
    out += buf;
  }
  return out;
}

}  // namespace prism::metrics

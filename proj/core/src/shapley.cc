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

#include "prism/shapley.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "prism/error.h"

namespace prism {

double logit(double p, double eps) {
  if (!std::isfinite(p)) throw InputError("logit: probability must be finite");
  const double q = std::clamp(p, eps, 1.0 - eps);
  return std::log(q) - std::log1p(-q);
}

double sigmoid(double z) {
  if (!std::isfinite(z)) throw InputError("sigmoid: input must be finite");
  // Saturates at the representable open-interval bounds instead of 0 or 1.
  if (z >= 0) {
    return std::min(1.0 / (1.0 + std::exp(-z)), std::nextafter(1.0, 0.0));
  }
  const double e = std::exp(z);
  return std::max(e / (1.0 + e), std::numeric_limits<double>::denorm_min());
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw InputError("softmax: no logits");
  for (double z : logits) {
    if (!std::isfinite(z)) throw InputError("softmax: non-finite logit");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - top);
    total += out[c];
  }
  for (double& v : out) v /= total;
  return out;
}

double ClampCounter::logit(double p) {
  if (std::isfinite(p) && (p < eps_ || p > 1.0 - eps_)) {
    count_.fetch_add(1, std::memory_order_relaxed);
  }
  return prism::logit(p, eps_);
}

Coalition::Coalition(std::uint64_t bits, std::size_t m) : bits_(bits), m_(m) {
  if (m > 64) throw SizeError("coalitions support at most 64 players");
  if (m < 64 && (bits >> m) != 0) {
    throw InputError("coalition has members outside [0, m)");
  }
}

Coalition Coalition::full(std::size_t m) {
  return Coalition(m == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << m) - 1), m);
}

std::size_t Coalition::size() const {
  return static_cast<std::size_t>(std::popcount(bits_));
}

Coalition Coalition::with(std::size_t j) const {
  return Coalition(bits_ | (std::uint64_t{1} << j), m_);
}

Coalition Coalition::without(std::size_t j) const {
  return Coalition(bits_ & ~(std::uint64_t{1} << j), m_);
}

std::vector<std::size_t> Coalition::members() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < m_; ++j) {
    if (contains(j)) out.push_back(j);
  }
  return out;
}

BackgroundSet::BackgroundSet(std::size_t factor_of_interest,
                             std::vector<std::size_t> members)
    : factor_(factor_of_interest), members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  if (std::adjacent_find(members_.begin(), members_.end()) != members_.end()) {
    throw InputError("background set has duplicate members");
  }
  if (std::binary_search(members_.begin(), members_.end(), factor_)) {
    throw InputError("background set contains the factor of interest");
  }
}

bool BackgroundSet::contains(std::size_t j) const {
  return std::binary_search(members_.begin(), members_.end(), j);
}

Coalition BackgroundSet::coalition(std::size_t m) const {
  std::uint64_t bits = 0;
  for (std::size_t j : members_) {
    if (j >= m) throw InputError("background set member out of range");
    bits |= std::uint64_t{1} << j;
  }
  return Coalition(bits, m);
}

Coalition BackgroundSet::coalition_with_factor(std::size_t m) const {
  return coalition(m).with(factor_);
}

BackgroundSet sample_background_set(std::size_t factor, std::size_t m, Rng& rng) {
  if (m == 0 || factor >= m) {
    throw InputError("sample_background_set: factor " + std::to_string(factor) +
                     " not in [0, " + std::to_string(m) + ")");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> preceding;
  for (std::size_t j : order) {
    if (j == factor) break;
    preceding.push_back(j);
  }
  return BackgroundSet(factor, std::move(preceding));
}

double shapley_weight(std::size_t subset_size, std::size_t m) {
  if (m == 0 || subset_size >= m) throw InputError("shapley_weight: |S| must be < m");
  // 1 / (m * C(m-1, s)); the binomial is exact in double for m <= 64.
  const std::size_t n = m - 1;
  const std::size_t k = std::min(subset_size, n - subset_size);
  double binom = 1.0;
  for (std::size_t t = 1; t <= k; ++t) {
    binom = binom * static_cast<double>(n - k + t) / static_cast<double>(t);
  }
  return 1.0 / (static_cast<double>(m) * std::round(binom));
}

namespace {

void check_exact_size(std::size_t m) {
  if (m == 0) throw InputError("exact Shapley needs at least one factor");
  if (m > kMaxExactFactors) {
    throw SizeError("exact Shapley enumeration limited to " +
                    std::to_string(kMaxExactFactors) + " factors, got " +
                    std::to_string(m) + "; use the sampled estimator");
  }
}

double scaled(const CoalitionValue& value, const Coalition& c, ValueScale scale) {
  const double v = value(c);
  return scale == ValueScale::kProbability ? logit(v) : v;
}

}  // namespace

double exact_shapley(const CoalitionValue& value, std::size_t m,
                     std::size_t factor, ValueScale scale) {
  check_exact_size(m);
  if (factor >= m) throw InputError("exact_shapley: factor out of range");
  const std::uint64_t bit = std::uint64_t{1} << factor;
  const std::uint64_t total = std::uint64_t{1} << m;
  double phi = 0.0;
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    if (bits & bit) continue;
    const Coalition without(bits, m);
    const Coalition with(bits | bit, m);
    const double diff = scaled(value, with, scale) - scaled(value, without, scale);
    phi += shapley_weight(without.size(), m) * diff;
  }
  return phi;
}

std::vector<double> exact_shapley_all(const CoalitionValue& value, std::size_t m,
                                      ValueScale scale) {
  check_exact_size(m);
  const std::uint64_t total = std::uint64_t{1} << m;
  std::vector<double> v(total);
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    v[bits] = scaled(value, Coalition(bits, m), scale);
  }
  std::vector<double> weights(m);
  for (std::size_t s = 0; s < m; ++s) weights[s] = shapley_weight(s, m);

  std::vector<double> phi(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t bits = 0; bits < total; ++bits) {
      if (bits & bit) continue;
      phi[i] += weights[std::popcount(bits)] * (v[bits | bit] - v[bits]);
    }
  }
  return phi;
}

ShapleyEstimate summarize_differences(FactorId factor,
                                      std::span<const double> differences) {
  if (differences.empty()) {
    throw InputError("cannot summarize zero paired differences");
  }
  double sum = 0.0;
  for (double d : differences) {
    if (!std::isfinite(d)) throw InputError("non-finite paired difference");
    sum += d;
  }
  const auto k = static_cast<double>(differences.size());
  ShapleyEstimate est;
  est.factor = std::move(factor);
  est.k_samples = static_cast<int>(differences.size());
  est.phi = sum / k;
  if (differences.size() > 1) {
    double ss = 0.0;
    for (double d : differences) ss += (d - est.phi) * (d - est.phi);
    est.std_error = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
  }
  return est;
}

ShapleyEstimate estimate_shapley(const PairEvaluator& evaluate,
                                 const FactorId& factor, std::size_t m,
                                 Rng& rng, const EstimatorOptions& options) {
  if (options.k < 1) throw InputError("estimate_shapley: K must be >= 1");
  auto to_logit = [&options](double p) {
    return options.clamps ? options.clamps->logit(p) : logit(p);
  };
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(options.k));
  std::vector<BackgroundSet> sets;
  for (int k = 0; k < options.k; ++k) {
    BackgroundSet background = sample_background_set(factor.index, m, rng);
    PairProbabilities pair;
    try {
      pair = evaluate(background, k);
    } catch (const QueryError& e) {
      throw QueryError("factor '" + factor.name + "' sample " + std::to_string(k) +
                           ": " + e.what(),
                       e.raw_text(), e.attempts());
    } catch (const TransportError& e) {
      throw TransportError("factor '" + factor.name + "' sample " +
                               std::to_string(k) + ": " + e.what(),
                           e.attempts(), e.http_status());
    } catch (const Error& e) {
      throw QueryError("factor '" + factor.name + "' sample " + std::to_string(k) +
                           ": " + e.what(),
                       "", 0);
    }
    diffs.push_back(to_logit(pair.with_factor) - to_logit(pair.without_factor));
    if (options.keep_sampled_sets) sets.push_back(std::move(background));
  }
  ShapleyEstimate est = summarize_differences(factor, diffs);
  est.sampled_sets = std::move(sets);
  return est;
}

double ReconstructionResult::contribution_sum() const {
  double sum = 0.0;
  for (const auto& c : contributions) sum += c.phi;
  return sum;
}

ReconstructionResult reconstruct(double base_logit,
                                 std::vector<ShapleyEstimate> contributions) {
  if (!std::isfinite(base_logit)) throw InputError("base logit must be finite");
  ReconstructionResult result;
  result.base_logit = base_logit;
  result.contributions = std::move(contributions);
  for (const auto& c : result.contributions) {
    if (!std::isfinite(c.phi)) {
      throw InputError("contribution for '" + c.factor.name + "' is not finite");
    }
  }
  result.total_logit = base_logit + result.contribution_sum();
  result.probability = sigmoid(result.total_logit);
  return result;
}

}  // namespace prism

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

// Shapley mathematics: logit transforms, background sets, exact subset-form
// values, the permutation-sampled paired-difference estimator, and
// reconstruction of a probability from a base logit plus contributions.

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "prism/factor.h"
#include "prism/random.h"

namespace prism {

inline constexpr double kDefaultClampEpsilon = 1e-6;
inline constexpr std::size_t kMaxExactFactors = 20;
inline constexpr int kDefaultSampleCount = 10;

// ln(p / (1 - p)) after clamping p to [eps, 1 - eps]. Throws InputError for
// non-finite p.
double logit(double p, double eps = kDefaultClampEpsilon);

// 1 / (1 + exp(-z)), evaluated without overflow for large |z|.
double sigmoid(double z);

// Numerically stable softmax. Throws InputError on empty or non-finite input.
std::vector<double> softmax(std::span<const double> logits);

// Converts oracle probabilities to logits and counts how many had to be
// clamped. Safe to share between threads.
class ClampCounter {
 public:
  explicit ClampCounter(double eps = kDefaultClampEpsilon) : eps_(eps) {}

  double logit(double p);
  std::uint64_t count() const { return count_.load(std::memory_order_relaxed); }
  double epsilon() const { return eps_; }

 private:
  double eps_;
  std::atomic<std::uint64_t> count_{0};
};

// A subset of factor indices of a game with m <= 64 players.
class Coalition {
 public:
  Coalition() = default;
  Coalition(std::uint64_t bits, std::size_t m);
  static Coalition empty(std::size_t m) { return Coalition(0, m); }
  static Coalition full(std::size_t m);

  std::size_t player_count() const { return m_; }
  std::size_t size() const;
  bool contains(std::size_t j) const { return (bits_ >> j) & 1U; }
  Coalition with(std::size_t j) const;
  Coalition without(std::size_t j) const;
  std::uint64_t bits() const { return bits_; }
  std::vector<std::size_t> members() const;

  friend bool operator==(const Coalition&, const Coalition&) = default;

 private:
  std::uint64_t bits_ = 0;
  std::size_t m_ = 0;
};

// The factors revealed alongside the factor of interest. Sorted,
// duplicate-free, and never contains the factor of interest.
class BackgroundSet {
 public:
  BackgroundSet(std::size_t factor_of_interest, std::vector<std::size_t> members);

  std::size_t factor_of_interest() const { return factor_; }
  const std::vector<std::size_t>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(std::size_t j) const;

  Coalition coalition(std::size_t m) const;
  Coalition coalition_with_factor(std::size_t m) const;

  friend bool operator==(const BackgroundSet&, const BackgroundSet&) = default;

 private:
  std::size_t factor_;
  std::vector<std::size_t> members_;
};

// Draws a uniformly random ordering of the m factors and returns the factors
// that precede `factor`.
BackgroundSet sample_background_set(std::size_t factor, std::size_t m, Rng& rng);

enum class ValueScale { kLogit, kProbability };

// Value of a coalition. When the scale is kProbability, exact_shapley maps
// outputs through logit before differencing.
using CoalitionValue = std::function<double(const Coalition&)>;

// |S|! (m - |S| - 1)! / m!
double shapley_weight(std::size_t subset_size, std::size_t m);

// Subset-form Shapley value of `factor` by full enumeration over the
// 2^(m-1) background sets. Throws SizeError when m > kMaxExactFactors.
double exact_shapley(const CoalitionValue& value, std::size_t m,
                     std::size_t factor,
                     ValueScale scale = ValueScale::kLogit);

// All m exact values, sharing one evaluation per coalition.
std::vector<double> exact_shapley_all(const CoalitionValue& value,
                                      std::size_t m,
                                      ValueScale scale = ValueScale::kLogit);

struct ShapleyEstimate {
  FactorId factor;
  double phi = 0.0;  // logit units
  int k_samples = 0;
  // Standard error of the mean of the K paired differences; absent for K = 1.
  std::optional<double> std_error;
  std::vector<BackgroundSet> sampled_sets;
};

// Builds an estimate from K paired logit differences. Throws InputError when
// `differences` is empty or holds a non-finite value.
ShapleyEstimate summarize_differences(FactorId factor,
                                      std::span<const double> differences);

// The two oracle probabilities of one paired query, in prompt order.
struct PairProbabilities {
  double with_factor = 0.5;
  double without_factor = 0.5;
};

using PairEvaluator =
    std::function<PairProbabilities(const BackgroundSet& background, int sample_index)>;

struct EstimatorOptions {
  int k = kDefaultSampleCount;
  bool keep_sampled_sets = false;
  ClampCounter* clamps = nullptr;
};

// phi = mean over K permutation-sampled background sets of
// logit(p(with)) - logit(p(without)). Evaluation failures are rethrown as
// QueryError naming the factor and sample index.
ShapleyEstimate estimate_shapley(const PairEvaluator& evaluate,
                                 const FactorId& factor, std::size_t m,
                                 Rng& rng, const EstimatorOptions& options = {});

struct ReconstructionResult {
  double base_logit = 0.0;
  std::vector<ShapleyEstimate> contributions;
  double total_logit = 0.0;
  double probability = 0.5;

  double contribution_sum() const;
};

// total_logit = base_logit + sum(phi); probability = sigmoid(total_logit).
ReconstructionResult reconstruct(double base_logit,
                                 std::vector<ShapleyEstimate> contributions);

}  // namespace prism

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

// Quadratic-time reference implementations of the ranking metrics, written
// independently of the sort-based code under test.

#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include "prism/metrics.h"

namespace prism::testing {

using metrics::F1Result;
using metrics::ScoredLabel;

// O(n^2) pairwise AUROC.
inline double brute_auroc(const std::vector<ScoredLabel>& d) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& a : d) {
    if (a.label != 1) continue;
    for (const auto& b : d) {
      if (b.label != 0) continue;
      pairs += 1.0;
      wins += a.score > b.score ? 1.0 : (a.score == b.score ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

// Average precision by recomputing precision and recall at every distinct
// threshold from scratch.
inline double brute_ap(const std::vector<ScoredLabel>& d) {
  std::vector<double> thresholds;
  for (const auto& x : d) thresholds.push_back(x.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double P = 0.0;
  for (const auto& x : d) P += x.label;
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, predicted = 0.0;
    for (const auto& x : d) {
      if (x.score >= t) {
        predicted += 1.0;
        tp += x.label;
      }
    }
    const double recall = tp / P;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

// Exhaustive scan over every candidate threshold, comparing TPR + TNR as
// exact rationals.
inline F1Result brute_best_f1(const std::vector<ScoredLabel>& d) {
  std::vector<double> candidates = {std::numeric_limits<double>::infinity()};
  for (const auto& x : d) candidates.push_back(x.score);
  long P = 0, N = 0;
  for (const auto& x : d) (x.label ? P : N) += 1;
  F1Result best;
  long best_num = -1;
  for (double t : candidates) {
    long tp = 0, fp = 0;
    for (const auto& x : d) {
      if (x.score >= t) (x.label ? tp : fp) += 1;
    }
    const long num = tp * N + (N - fp) * P;
    const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + (P - tp));
    const bool better = num > best_num ||
                        (num == best_num && (f1 > best.f1 || (f1 == best.f1 && t < best.threshold)));
    if (better) {
      best_num = num;
      best = {f1, t, static_cast<double>(num) / static_cast<double>(P * N)};
    }
  }
  return best;
}

}  // namespace prism::testing

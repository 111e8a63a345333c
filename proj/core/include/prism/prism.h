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

// The sampling pipeline: comparative pair queries per factor, reconstruction
// of the binary probability, and the per-class extension.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "prism/error.h"
#include "prism/oracle.h"
#include "prism/shapley.h"
#include "prism/task.h"

namespace prism {

// Keeps the values of the coalition members and blanks the rest.
PartialRow reveal(const std::vector<FactorValue>& values, const Coalition& coalition);
PartialRow reveal(const std::vector<FactorValue>& values, const BackgroundSet& background,
                  bool include_factor);

struct PrismOptions {
  int k = kDefaultSampleCount;
  std::uint64_t seed = 0;
  bool keep_sampled_sets = false;
  ClampCounter* clamps = nullptr;
};

// Seed of the sampling stream of one (instance, factor) pair.
std::uint64_t factor_seed(std::uint64_t seed, const std::string& instance_id,
                          std::size_t factor);

// One query holding both arms of a pair; Case A is the arm with the factor.
OracleQuery comparative_query(const TaskSpec& task, const Instance& x,
                              const BackgroundSet& background);
OracleQuery per_class_query(const TaskSpec& task, const Instance& x,
                            const BackgroundSet& background);

ShapleyEstimate estimate_factor(const TaskSpec& task, const Instance& x,
                                std::size_t factor, EvaluationOracle& oracle,
                                const PrismOptions& options);

struct FactorFailure {
  std::size_t factor = 0;
  std::string name;
  Error::Kind kind = Error::Kind::kQuery;
  std::string message;
};

// Raised when one or more factors of an instance could not be estimated.
// kind() is the kind of the first failure; the estimates that did succeed
// are attached.
class InstanceAbortedError : public Error {
 public:
  InstanceAbortedError(std::string instance_id, std::vector<ShapleyEstimate> completed,
                       std::vector<FactorFailure> failures);

  const std::string& instance_id() const noexcept { return instance_id_; }
  const std::vector<ShapleyEstimate>& completed() const noexcept { return completed_; }
  const std::vector<FactorFailure>& failures() const noexcept { return failures_; }

 private:
  std::string instance_id_;
  std::vector<ShapleyEstimate> completed_;
  std::vector<FactorFailure> failures_;
};

// Collects one estimate per factor, then reconstructs. Throws
// InstanceAbortedError if any factor fails.
using FactorEstimator = std::function<ShapleyEstimate(std::size_t factor)>;
ReconstructionResult estimate_all_factors(const TaskSpec& task, const Instance& x,
                                          double base_logit,
                                          const FactorEstimator& estimate);

// sigma(base + sum phi) with every factor estimated by comparative queries.
ReconstructionResult prism_estimate(const TaskSpec& task, const Instance& x,
                                    EvaluationOracle& oracle,
                                    const PrismOptions& options = {});

struct MulticlassResult {
  // One reconstruction per class, on that class's logit scale.
  std::vector<ReconstructionResult> per_class;
  std::vector<double> class_logits;
  std::vector<double> distribution;
  std::size_t predicted = 0;
};

// Softmax over the per-class total logits; argmax with ties to the lowest
// class index.
MulticlassResult combine_class_logits(std::vector<ReconstructionResult> per_class);

MulticlassResult multiclass_estimate(const TaskSpec& task, const Instance& x,
                                     EvaluationOracle& oracle,
                                     const PrismOptions& options = {});

}  // namespace prism

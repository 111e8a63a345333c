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

// Reference-imputed Shapley values: every unrevealed factor takes the value
// of a fixed reference instance, and all pairs for one factor are evaluated
// as a single contrast table.

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "prism/factor.h"
#include "prism/oracle.h"
#include "prism/prism.h"
#include "prism/shapley.h"
#include "prism/task.h"

namespace prism::tabular {

enum class Origin { kFromX, kFromReference };
enum class Arm { kWithFactor, kWithoutFactor };

std::string_view to_string(Arm arm);

struct ImputedRow {
  std::vector<FactorValue> values;
  std::vector<Origin> origin;
};

// Factor j comes from x when j is in `revealed`, otherwise from r.
ImputedRow impute(const std::vector<FactorValue>& x, const Coalition& revealed,
                  const ReferenceInstance& r);
ImputedRow impute(const std::vector<FactorValue>& x, const BackgroundSet& background,
                  bool include_factor, const ReferenceInstance& r);

struct ContrastRow {
  std::vector<FactorValue> values;
  std::vector<Origin> origin;
  std::size_t pair_id = 0;
  Arm arm = Arm::kWithFactor;
};

struct ContrastTable {
  FactorId factor;
  // Arms of one pair are adjacent, with-factor arm first.
  std::vector<ContrastRow> rows;
  std::vector<BackgroundSet> backgrounds;

  std::size_t pair_count() const { return rows.size() / 2; }
  // Throws InputError when the row count is odd, pair ids are not
  // consecutive, arms are out of order, or two arms differ anywhere other
  // than at the factor of interest.
  void validate() const;
};

// K permutation-sampled background sets, each expanded to a with/without
// pair. Requires task.reference.
ContrastTable build_contrast_table(const TaskSpec& task, const Instance& x,
                                   std::size_t factor, int k, Rng& rng);

// Splits into chunks of at most `row_limit` rows without separating a pair.
// Throws ConfigError when row_limit < 2.
std::vector<ContrastTable> split_table(const ContrastTable& table, std::size_t row_limit);

// Pipe-delimited table, header of factor names in schema order.
std::string to_markdown(const FactorSchema& schema, const ContrastTable& table);
// pair_id,arm,<factors...>,origin where origin has one 'x' or 'r' per factor.
std::string to_csv(const FactorSchema& schema, const ContrastTable& table);

OracleQuery table_query(const TaskSpec& task, const Instance& x,
                        const ContrastTable& chunk);

// phi = mean over pairs of logit(p(with)) - logit(p(without)), one query
// per chunk of the factor's table. When x matches the reference at the
// factor the queries are still issued but every difference is exactly 0.
ShapleyEstimate tabular_shapley(const TaskSpec& task, const Instance& x,
                                std::size_t factor, EvaluationOracle& oracle,
                                const PrismOptions& options = {});

ReconstructionResult tabular_prism(const TaskSpec& task, const Instance& x,
                                   EvaluationOracle& oracle,
                                   const PrismOptions& options = {});

// Logit of a complete row.
using RowLogit = std::function<double(const std::vector<FactorValue>&)>;

// Subset-form value of the game v_r(S) = f([x_S, r_rest]) by enumeration.
double exact_reference_shapley(const RowLogit& f, const std::vector<FactorValue>& x,
                               const ReferenceInstance& r, std::size_t factor);
std::vector<double> exact_reference_shapley_all(const RowLogit& f,
                                                const std::vector<FactorValue>& x,
                                                const ReferenceInstance& r);

// Exact counterpart of tabular_prism: base logit f(r) plus the exact values.
ReconstructionResult tabular_prism_exact(const RowLogit& f, const FactorSchema& schema,
                                         const std::vector<FactorValue>& x,
                                         const ReferenceInstance& r);

}  // namespace prism::tabular

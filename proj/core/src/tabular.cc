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

#include "prism/tabular.h"

#include "prism/csv.h"
#include "prism/error.h"
#include "prism/prompts.h"

namespace prism::tabular {

std::string_view to_string(Arm arm) {
  return arm == Arm::kWithFactor ? "with_factor" : "without_factor";
}

namespace {

void check_reference(const std::vector<FactorValue>& x, const ReferenceInstance& r) {
  if (x.size() != r.size()) {
    throw InputError("instance has " + std::to_string(x.size()) +
                     " factors, reference has " + std::to_string(r.size()));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (kind_of(x[j]) != kind_of(r.values[j])) {
      throw InputError("factor " + std::to_string(j) +
                       " has a different kind in the instance and the reference");
    }
  }
}

const ReferenceInstance& reference_of(const TaskSpec& task) {
  if (!task.reference) throw ConfigError("task '" + task.id + "' has no reference instance");
  return *task.reference;
}

std::string escape_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out;
}

}  // namespace

ImputedRow impute(const std::vector<FactorValue>& x, const Coalition& revealed,
                  const ReferenceInstance& r) {
  check_reference(x, r);
  ImputedRow row;
  row.values.reserve(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const bool from_x = revealed.contains(j);
    row.values.push_back(from_x ? x[j] : r.values[j]);
    row.origin.push_back(from_x ? Origin::kFromX : Origin::kFromReference);
  }
  return row;
}

ImputedRow impute(const std::vector<FactorValue>& x, const BackgroundSet& background,
                  bool include_factor, const ReferenceInstance& r) {
  const Coalition c = include_factor ? background.coalition_with_factor(x.size())
                                     : background.coalition(x.size());
  return impute(x, c, r);
}

void ContrastTable::validate() const {
  if (rows.size() % 2 != 0) throw InputError("contrast table has an odd row count");
  for (std::size_t p = 0; p < rows.size() / 2; ++p) {
    const ContrastRow& a = rows[2 * p];
    const ContrastRow& b = rows[2 * p + 1];
    if (a.pair_id != b.pair_id || a.pair_id != rows.front().pair_id + p) {
      throw InputError("pair ids of contrast table are not consecutive at pair " +
                       std::to_string(p));
    }
    if (a.arm != Arm::kWithFactor || b.arm != Arm::kWithoutFactor) {
      throw InputError("arms of pair " + std::to_string(a.pair_id) + " are out of order");
    }
    if (a.values.size() != b.values.size()) {
      throw InputError("arms of pair " + std::to_string(a.pair_id) + " differ in length");
    }
    for (std::size_t j = 0; j < a.values.size(); ++j) {
      if (j == factor.index) continue;
      if (!(a.values[j] == b.values[j]) || a.origin[j] != b.origin[j]) {
        throw InputError("arms of pair " + std::to_string(a.pair_id) +
                         " differ outside the factor of interest");
      }
    }
  }
}

ContrastTable build_contrast_table(const TaskSpec& task, const Instance& x,
                                   std::size_t factor, int k, Rng& rng) {
  if (k < 1) throw InputError("K must be >= 1");
  const ReferenceInstance& r = reference_of(task);
  task.schema.check_values(x.values);
  if (factor >= x.values.size()) throw InputError("factor index out of range");
  ContrastTable table;
  table.factor = task.schema.id(factor);
  for (int p = 0; p < k; ++p) {
    BackgroundSet background = sample_background_set(factor, x.values.size(), rng);
    for (bool with : {true, false}) {
      ImputedRow row = impute(x.values, background, with, r);
      table.rows.push_back({std::move(row.values), std::move(row.origin),
                            static_cast<std::size_t>(p),
                            with ? Arm::kWithFactor : Arm::kWithoutFactor});
    }
    table.backgrounds.push_back(std::move(background));
  }
  return table;
}

std::vector<ContrastTable> split_table(const ContrastTable& table, std::size_t row_limit) {
  if (row_limit < 2) throw ConfigError("table row limit must be at least 2");
  const std::size_t pairs_per_chunk = row_limit / 2;
  std::vector<ContrastTable> chunks;
  for (std::size_t first = 0; first < table.pair_count(); first += pairs_per_chunk) {
    const std::size_t last = std::min(first + pairs_per_chunk, table.pair_count());
    ContrastTable chunk;
    chunk.factor = table.factor;
    chunk.rows.assign(table.rows.begin() + static_cast<std::ptrdiff_t>(2 * first),
                      table.rows.begin() + static_cast<std::ptrdiff_t>(2 * last));
    if (table.backgrounds.size() == table.pair_count()) {
      chunk.backgrounds.assign(table.backgrounds.begin() + static_cast<std::ptrdiff_t>(first),
                               table.backgrounds.begin() + static_cast<std::ptrdiff_t>(last));
    }
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

std::string to_markdown(const FactorSchema& schema, const ContrastTable& table) {
  std::string out = "|";
  for (const auto& f : schema.factors()) out += " " + escape_cell(f.name) + " |";
  out += "\n|";
  for (std::size_t j = 0; j < schema.size(); ++j) out += " --- |";
  for (const auto& row : table.rows) {
    out += "\n|";
    for (const auto& v : row.values) out += " " + escape_cell(render_value(v)) + " |";
  }
  return out;
}

std::string to_csv(const FactorSchema& schema, const ContrastTable& table) {
  csv::Record header = {"pair_id", "arm"};
  for (const auto& f : schema.factors()) header.push_back(f.name);
  header.push_back("origin");
  std::string out = csv::format_record(header) + "\n";
  for (const auto& row : table.rows) {
    csv::Record rec = {std::to_string(row.pair_id), std::string(to_string(row.arm))};
    std::string origin;
    for (std::size_t j = 0; j < row.values.size(); ++j) {
      rec.push_back(render_value(row.values[j]));
      origin.push_back(row.origin[j] == Origin::kFromX ? 'x' : 'r');
    }
    rec.push_back(origin);
    out += csv::format_record(rec) + "\n";
  }
  return out;
}

OracleQuery table_query(const TaskSpec& task, const Instance& x,
                        const ContrastTable& chunk) {
  OracleQuery q;
  q.kind = QueryKind::kBatchedTable;
  for (const auto& row : chunk.rows) q.rows.emplace_back(row.values.begin(), row.values.end());
  q.expected_outputs = chunk.rows.size();
  q.rendered_prompt =
      render_table_prompt(task, to_markdown(task.schema, chunk), chunk.rows.size());
  q.metadata = {task.id, x.id, chunk.factor.index, task.temperature};
  return q;
}

ShapleyEstimate tabular_shapley(const TaskSpec& task, const Instance& x,
                                std::size_t factor, EvaluationOracle& oracle,
                                const PrismOptions& options) {
  Rng rng(factor_seed(options.seed, x.id, factor));
  const ContrastTable table = build_contrast_table(task, x, factor, options.k, rng);
  const bool matches_reference = x.values[factor] == reference_of(task).values[factor];
  auto to_logit = [&options](double p) {
    return options.clamps ? options.clamps->logit(p) : logit(p);
  };
  std::vector<double> diffs;
  std::size_t chunk_index = 0;
  for (const ContrastTable& chunk : split_table(table, task.table_row_limit)) {
    OracleResponse r;
    try {
      r = evaluate_checked(oracle, table_query(task, x, chunk));
    } catch (const QueryError& e) {
      throw QueryError("factor '" + table.factor.name + "' table chunk " +
                           std::to_string(chunk_index) + ": " + e.what(),
                       e.raw_text(), e.attempts());
    }
    for (std::size_t p = 0; p < chunk.pair_count(); ++p) {
      const double d = to_logit(r.probabilities[2 * p]) - to_logit(r.probabilities[2 * p + 1]);
      diffs.push_back(matches_reference ? 0.0 : d);
    }
    ++chunk_index;
  }
  ShapleyEstimate est = summarize_differences(table.factor, diffs);
  if (options.keep_sampled_sets) est.sampled_sets = table.backgrounds;
  return est;
}

ReconstructionResult tabular_prism(const TaskSpec& task, const Instance& x,
                                   EvaluationOracle& oracle, const PrismOptions& options) {
  reference_of(task);
  return estimate_all_factors(task, x, task.base_logit, [&](std::size_t i) {
    return tabular_shapley(task, x, i, oracle, options);
  });
}

namespace {

CoalitionValue reference_game(const RowLogit& f, const std::vector<FactorValue>& x,
                              const ReferenceInstance& r) {
  check_reference(x, r);
  return [&f, &x, &r](const Coalition& c) { return f(impute(x, c, r).values); };
}

}  // namespace

double exact_reference_shapley(const RowLogit& f, const std::vector<FactorValue>& x,
                               const ReferenceInstance& r, std::size_t factor) {
  return exact_shapley(reference_game(f, x, r), x.size(), factor, ValueScale::kLogit);
}

std::vector<double> exact_reference_shapley_all(const RowLogit& f,
                                                const std::vector<FactorValue>& x,
                                                const ReferenceInstance& r) {
  return exact_shapley_all(reference_game(f, x, r), x.size(), ValueScale::kLogit);
}

ReconstructionResult tabular_prism_exact(const RowLogit& f, const FactorSchema& schema,
                                         const std::vector<FactorValue>& x,
                                         const ReferenceInstance& r) {
  schema.check_values(x);
  const std::vector<double> phis = exact_reference_shapley_all(f, x, r);
  std::vector<ShapleyEstimate> contributions;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    ShapleyEstimate est;
    est.factor = schema.id(i);
    est.phi = phis[i];
    est.k_samples = 1;
    contributions.push_back(std::move(est));
  }
  return reconstruct(f(r.values), std::move(contributions));
}

}  // namespace prism::tabular

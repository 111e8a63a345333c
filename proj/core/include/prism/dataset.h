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

// Task configuration, CSV ingestion, datasets and base-logit resolution.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/attribution.h"
#include "prism/factor.h"
#include "prism/oracle.h"
#include "prism/random.h"
#include "prism/task.h"

namespace prism::data {

enum class BaseLogitSource { kFixedProbability, kFixedLogit, kPopulationRate, kQuery };

struct BaseLogitConfig {
  BaseLogitSource source = BaseLogitSource::kFixedProbability;
  double value = 0.5;  // probability, logit or rate depending on source
  int repeats = 5;     // query mode
};

// Everything needed to turn a CSV into instances of a task. Column names in
// `rename`, `label_column` and `id_column` refer to the raw CSV header;
// factor names and `value_map` keys refer to the renamed columns.
struct TaskConfig {
  TaskSpec task;
  std::map<std::string, std::string> rename;
  std::map<std::string, std::map<std::string, std::string>> value_map;
  std::vector<std::string> na_values = {"", "NA", "N/A", "NaN"};
  bool drop_missing = true;
  std::string label_column;
  std::string positive_label = "1";
  std::optional<std::string> negative_label;
  std::string id_column;
  BaseLogitConfig base_logit;
  bool contrast_enabled = false;

  // Parses the documented JSON layout. Relative prompt file paths resolve
  // against `base_dir`. Throws ConfigError on any inconsistency.
  static TaskConfig from_json(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = {});
  static TaskConfig load(const std::filesystem::path& path);

  // SHA-256 over the canonical form of the parsed configuration.
  const std::string& fingerprint() const { return fingerprint_; }
  // SHA-256 over the parts that affect ingestion only.
  const std::string& preprocessing_fingerprint() const { return preprocessing_fingerprint_; }

 private:
  std::string fingerprint_;
  std::string preprocessing_fingerprint_;
};

// Converts one raw cell to a factor value of the given spec.
FactorValue parse_factor_value(const FactorSpec& spec, std::string_view raw);

struct Dataset {
  std::vector<Instance> rows;
  std::string source;
  std::string fingerprint;

  std::size_t size() const { return rows.size(); }
  // Throws LookupError for unknown ids.
  const Instance& find(const std::string& id) const;

  // First line {"provenance": {...}}, then one instance per line.
  void save_jsonl(const std::filesystem::path& path, const FactorSchema& schema) const;
  static Dataset load_jsonl(const std::filesystem::path& path, const FactorSchema& schema);
};

nlohmann::json instance_to_json(const Instance& x, const FactorSchema& schema);
Instance instance_from_json(const nlohmann::json& j, const FactorSchema& schema);

// Renames, maps and validates every row. Throws IngestionError naming the
// row and column of the first bad cell.
Dataset load_csv_text(std::string_view text, const TaskConfig& config,
                      const std::string& source = "<memory>");
Dataset load_csv(const std::filesystem::path& path, const TaskConfig& config);

// Exactly n_per_class rows of each binary class, seeded, in shuffled order.
Dataset balanced_sample(const Dataset& dataset, std::size_t n_per_class, Rng& rng);

// Fixed sources convert directly; query mode averages `repeats` score
// queries on the reference instance and takes the logit.
double resolve_base_logit(const TaskConfig& config, EvaluationOracle* oracle = nullptr);

struct Bucket {
  std::string label;
  // Numeric buckets: lower <= v < upper, either bound may be open.
  std::optional<double> lower;
  std::optional<double> upper;
  // Categorical buckets list their categories instead.
  std::vector<std::string> categories;

  bool contains(const FactorValue& v) const;
};

struct Bucketing {
  std::string factor;
  std::vector<Bucket> buckets;

  // Throws ConfigError when buckets overlap or mix numeric and categorical.
  void validate() const;
  // Index of the bucket holding v; ConfigError when none does.
  std::size_t bucket_of(const FactorValue& v) const;
};

struct InteractionGrid {
  std::string target;
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  // mean[a][b]; nullopt marks an empty cell.
  std::vector<std::vector<std::optional<double>>> mean;
  std::vector<std::vector<std::size_t>> count;

  nlohmann::json to_json() const;
};

// Mean phi of `target` over the instances whose factor_a / factor_b values
// fall in each pair of buckets.
InteractionGrid interaction_aggregate(std::span<const AttributionResult> attributions,
                                      const std::string& target, const Bucketing& a,
                                      const Bucketing& b);

}  // namespace prism::data

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

// Command implementations behind the `prism` executable. Each command is a
// plain function so tests can drive it without a subprocess.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/dataset.h"
#include "prism/error.h"
#include "prism/oracle.h"

namespace prism::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitOracle = 3,
  kExitMetric = 4,
};

// Exit code for an error raised by the library.
int exit_code_for(const Error& e);
std::string_view kind_name(Error::Kind kind);

struct OracleOptions {
  std::string kind = "synthetic";  // synthetic | replay | chat
  std::filesystem::path synthetic_model;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  std::filesystem::path transcript;
  std::filesystem::path record;
  std::string endpoint;
  std::string model = "gpt-4.1-mini";
  std::string api_key_env = "PRISM_API_KEY";
  std::filesystem::path cache;
  bool no_cache = false;
  int max_retries = 3;
  int concurrency = 1;
};

// The oracles a command talks to, wrapped so that every query is counted,
// optionally forced past the cache, and optionally recorded.
class OracleBundle {
 public:
  // Either pointer may be null. `identity` enters run fingerprints.
  OracleBundle(EvaluationOracle* evaluation, TextOracle* text, nlohmann::json identity,
               bool force_no_cache = false, const std::filesystem::path& record = {});
  ~OracleBundle();

  EvaluationOracle& evaluation();
  TextOracle& text();
  bool has_text() const;
  std::string model_id() const;
  const nlohmann::json& identity() const { return identity_; }

  // Keeps an object alive for the bundle's lifetime.
  void retain(std::shared_ptr<void> owned) { owned_.push_back(std::move(owned)); }
  void set_network_counter(std::function<std::uint64_t()> counter);

  // queries, row_evaluations, cache_hits, text_queries, network_calls.
  nlohmann::json stats() const;

 private:
  struct Impl;
  std::vector<std::shared_ptr<void>> owned_;
  std::unique_ptr<Impl> impl_;
  nlohmann::json identity_;
};

using OracleFactory = std::function<std::unique_ptr<OracleBundle>(const data::TaskConfig&)>;

// Builds the oracle named by `options`. Synthetic oracles read a linear
// logit model keyed by the task's factor names.
OracleFactory make_oracle_factory(const OracleOptions& options);

struct RunOptions {
  std::string method;  // prism | tabular-prism | nshot-level | nshot-score | contrast | icl
  std::filesystem::path config;
  std::filesystem::path data;
  std::filesystem::path out_dir = "runs";
  int k = 10;
  std::uint64_t seed = 0;
  std::optional<double> temperature;
  int shots = 1;
  std::optional<std::size_t> balanced_per_class;
  std::uint64_t sample_seed = 0;
  std::optional<std::size_t> limit;
  std::size_t max_failures = 0;
  int concurrency = 1;
  std::size_t icl_positive = 5;
  std::size_t icl_negative = 5;
  bool keep_sampled_sets = false;
};

struct RunSummary {
  std::filesystem::path run_dir;
  std::size_t instances = 0;
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::size_t failed = 0;
  bool budget_exceeded = false;
  nlohmann::json manifest;
  nlohmann::json failures = nlohmann::json::array();
};

inline const std::vector<std::string>& run_methods() {
  static const std::vector<std::string> kMethods = {"prism",       "tabular-prism", "nshot-level",
                                                    "nshot-score", "contrast",      "icl"};
  return kMethods;
}

// Writes predictions.jsonl, failures.jsonl and manifest.json under
// out_dir/<method>-<fingerprint prefix>/, reusing predictions already there.
RunSummary run_command(const RunOptions& options, const OracleFactory& oracles);

struct MetricsOptions {
  std::vector<std::filesystem::path> predictions;
  std::filesystem::path labels;
  std::filesystem::path out_dir = "metrics";
  std::size_t bins = 10;
  std::optional<double> eval_positive_rate;
  std::optional<double> population_positive_rate;
  int bootstrap = 1000;
  std::uint64_t seed = 0;
};

// One report per prediction file plus comparison.csv; returns the
// comparison table as text.
std::string metrics_command(const MetricsOptions& options);

struct ExplainOptions {
  std::filesystem::path run;
  std::string id;
  bool json = false;
};

std::string explain_command(const ExplainOptions& options);

struct ExtractOptions {
  std::filesystem::path context;
  std::filesystem::path config;
  std::filesystem::path out_dir = "extract";
  int repeats = 1;
  int k = 10;
  std::uint64_t seed = 0;
  std::filesystem::path aspects;
  bool permissive = false;
};

// Per-repeat factors and attributions plus summary.json; returns the
// summary.
nlohmann::json extract_command(const ExtractOptions& options, const OracleFactory& oracles);

// Parses argv and dispatches. Never throws.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prism::cli

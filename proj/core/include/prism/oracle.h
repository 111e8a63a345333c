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

// The evaluation-oracle contract. An oracle maps a rendered query to one
// probability per evaluated case. Deterministic oracles read the structured
// `rows` payload; language-model oracles read `rendered_prompt`.

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/factor.h"

namespace prism {

enum class QueryKind { kSingle, kComparativePair, kBatchedTable, kPerClass };

std::string_view to_string(QueryKind kind);

struct QueryMetadata {
  std::string task_id;
  std::string instance_id;
  std::optional<std::size_t> factor;
  double temperature = 1.0;
};

struct OracleQuery {
  QueryKind kind = QueryKind::kSingle;
  std::string rendered_prompt;
  std::size_t expected_outputs = 1;
  // One entry per evaluated case, in prompt order.
  std::vector<PartialRow> rows;
  // Per-class queries: expected_outputs == rows.size() * num_classes, laid
  // out row-major (all classes of row 0 first).
  std::size_t num_classes = 0;
  QueryMetadata metadata;
  // Skip the cache lookup; used for self-consistency repeats.
  bool no_cache = false;
  // Distinguishes repeated identical prompts for the provider. Never part of
  // the prompt text or the cache key.
  std::uint64_t nonce = 0;

  // Throws InputError when the length contract cannot be satisfied.
  void validate() const;
};

struct OracleResponse {
  std::vector<double> probabilities;
  std::string raw_text;
  bool cache_hit = false;
  int attempts = 1;

  friend bool operator==(const OracleResponse&, const OracleResponse&) = default;
};

class EvaluationOracle {
 public:
  virtual ~EvaluationOracle() = default;

  virtual std::string model_id() const = 0;

  // Must return exactly query.expected_outputs probabilities or throw.
  virtual OracleResponse evaluate(const OracleQuery& query) = 0;
};

// Free-form completions, used by factor extraction.
struct TextQuery {
  std::string prompt;
  double temperature = 1.0;
  bool no_cache = false;
  std::uint64_t nonce = 0;
  // Structured payload for synthetic backends. Never part of the cache key.
  std::vector<PartialRow> rows;
  bool negated = false;
};

struct TextResponse {
  std::string text;
  bool cache_hit = false;
  int attempts = 1;
};

class TextOracle {
 public:
  virtual ~TextOracle() = default;
  virtual std::string model_id() const = 0;
  virtual TextResponse complete(const TextQuery& query) = 0;
};

// Content after the last line labelled "Answer:" (case-insensitive, markdown
// emphasis tolerated), or nullopt.
std::optional<std::string_view> answer_line(std::string_view raw_text);

// Extracts exactly `expected` probabilities from the answer segment of a
// model response: the last `Answer:` line, or failing that the last bracketed
// numeric list. Throws ParseError on a missing segment or a count mismatch
// and RangeError for values outside [0, 1]. No clamping happens here.
std::vector<double> parse_probabilities(std::string_view raw_text,
                                        std::size_t expected);

// "Answer: [p1, p2, ...]" with round-trip precision.
std::string format_answer(std::span<const double> probabilities);

// Hex SHA-256 of (model id, prompt, temperature, kind).
std::string cache_key(std::string_view model_id, std::string_view prompt,
                      double temperature, std::string_view kind);
std::string cache_key(std::string_view model_id, const OracleQuery& query);

std::string sha256_hex(std::string_view data);

// Validates the query, evaluates it, and enforces the length contract on the
// response. Throws ProtocolError naming expected vs. received counts.
OracleResponse evaluate_checked(EvaluationOracle& oracle, const OracleQuery& query);

// Pass-through oracle that counts queries and evaluated cases.
class CountingOracle : public EvaluationOracle {
 public:
  explicit CountingOracle(EvaluationOracle& inner) : inner_(inner) {}

  std::string model_id() const override { return inner_.model_id(); }
  OracleResponse evaluate(const OracleQuery& query) override;

  std::uint64_t queries() const { return queries_.load(); }
  std::uint64_t row_evaluations() const { return rows_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }
  void reset();

 private:
  EvaluationOracle& inner_;
  std::atomic<std::uint64_t> queries_{0};
  std::atomic<std::uint64_t> rows_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

}  // namespace prism

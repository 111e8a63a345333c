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

// Transcript replay and recording. A transcript is JSON-lines of
// {"key": ..., "raw_text": ...}, keyed by cache_key() of the query.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "prism/oracle.h"

namespace prism {

// Key kind used for free-form text completions.
inline constexpr std::string_view kTextQueryKind = "text";

std::string text_cache_key(std::string_view model_id, const TextQuery& query);

// Recorded raw responses by key. A key recorded several times replays its
// entries in recording order and then wraps around.
class Transcript {
 public:
  Transcript() = default;
  Transcript(const Transcript& other);
  Transcript& operator=(const Transcript& other);

  // Throws IngestionError naming the line on malformed input.
  static Transcript load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void add(const std::string& key, std::string raw_text);
  std::optional<std::string> next(const std::string& key);
  bool contains(const std::string& key) const;
  // Number of recorded entries across all keys.
  std::size_t size() const;
  void rewind();

 private:
  mutable std::mutex mu_;
  std::vector<std::string> order_;
  std::map<std::string, std::vector<std::string>> entries_;
  std::map<std::string, std::size_t> cursor_;
};

// Answers from a transcript only. Unknown keys raise QueryError; unusable
// recorded text raises the parse error it would have raised live.
class ReplayOracle : public EvaluationOracle, public TextOracle {
 public:
  ReplayOracle(std::string model_id, Transcript transcript);

  std::string model_id() const override { return model_id_; }
  OracleResponse evaluate(const OracleQuery& query) override;
  TextResponse complete(const TextQuery& query) override;

  Transcript& transcript() { return transcript_; }

 private:
  std::string next_text(const std::string& key);

  std::string model_id_;
  Transcript transcript_;
};

// Forwards to an inner oracle and appends every raw response to a transcript
// file. Either inner oracle may be null when that interface is unused.
class RecordingOracle : public EvaluationOracle, public TextOracle {
 public:
  RecordingOracle(EvaluationOracle* evaluation, TextOracle* text,
                  const std::filesystem::path& path);

  std::string model_id() const override;
  OracleResponse evaluate(const OracleQuery& query) override;
  TextResponse complete(const TextQuery& query) override;

  std::size_t recorded() const;

 private:
  void append(const std::string& key, const std::string& raw_text);

  EvaluationOracle* evaluation_;
  TextOracle* text_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::size_t recorded_ = 0;
};

}  // namespace prism

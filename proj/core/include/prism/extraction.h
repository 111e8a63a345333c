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

// Factor extraction for unstructured contexts: propose an aspect set, then
// summarize the context per aspect. Each summary becomes a text factor.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/factor.h"
#include "prism/oracle.h"
#include "prism/task.h"

namespace prism::extraction {

inline constexpr std::string_view kNoInformation = "NO INFORMATION";

struct Aspect {
  std::string name;
  std::string description;

  friend bool operator==(const Aspect&, const Aspect&) = default;
};

struct AspectSet {
  std::vector<Aspect> aspects;

  std::size_t size() const { return aspects.size(); }
  std::vector<std::string> names() const;
  // Throws ExtractionError on an empty set, duplicate names (ignoring case)
  // or a count outside [min_count, max_count].
  void validate(std::size_t min_count, std::size_t max_count) const;

  nlohmann::json to_json() const;
  static AspectSet from_json(const nlohmann::json& j);
};

struct ExtractionOptions {
  std::size_t min_aspects = 3;
  std::size_t max_aspects = 12;
  int max_retries = 3;
  // Failed aspects become "no information" factors instead of an error.
  bool permissive = false;
  double temperature = 1.0;
  bool no_cache = false;
  std::uint64_t nonce = 0;
  // Skips proposal when set.
  std::optional<AspectSet> fixed_aspects;
};

// The JSON array in a response (surrounding prose and code fences are
// ignored). Throws ParseError on malformed arrays, duplicates or a count out
// of bounds.
AspectSet parse_aspect_set(std::string_view raw_text, std::size_t min_count,
                           std::size_t max_count);

AspectSet propose_aspects(std::string_view task_description, std::string_view context,
                          const PromptLibrary& prompts, TextOracle& oracle,
                          const ExtractionOptions& options = {});

struct ExtractedFactor {
  std::string aspect;
  FactorValue summary;
  bool no_information = false;
  // Character offsets [start, end) into the context.
  std::vector<std::pair<std::size_t, std::size_t>> spans;

  nlohmann::json to_json() const;
  static ExtractedFactor from_json(const nlohmann::json& j);

  friend bool operator==(const ExtractedFactor&, const ExtractedFactor&) = default;
};

// Summary text used for aspects the context says nothing about.
std::string no_information_summary(std::string_view aspect);

// Parses {"summary": ..., "spans": [[s, e], ...]}. Throws ParseError on bad
// shape or spans outside the context.
ExtractedFactor parse_summary(std::string_view raw_text, const std::string& aspect,
                              std::size_t context_size);

// One factor per aspect, in aspect order.
std::vector<ExtractedFactor> extract_factor_summaries(std::string_view task_description,
                                                      std::string_view context,
                                                      const AspectSet& aspects,
                                                      const PromptLibrary& prompts,
                                                      TextOracle& oracle,
                                                      const ExtractionOptions& options = {});

// Text-factor schema named after the aspects.
FactorSchema extracted_schema(const AspectSet& aspects);
Instance extracted_instance(std::string id, const std::vector<ExtractedFactor>& factors);

void save_factors(const std::filesystem::path& path,
                  const std::vector<ExtractedFactor>& factors);
std::vector<ExtractedFactor> load_factors(const std::filesystem::path& path);

}  // namespace prism::extraction

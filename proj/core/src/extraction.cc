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

#include "prism/extraction.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "prism/error.h"

namespace prism::extraction {
namespace {

std::string lower_trim(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const auto b = out.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return out.substr(b, out.find_last_not_of(" \t\r\n") - b + 1);
}

std::string_view json_segment(std::string_view raw, char open, char close) {
  const auto b = raw.find(open);
  const auto e = raw.rfind(close);
  if (b == std::string_view::npos || e == std::string_view::npos || e < b) return {};
  return raw.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> AspectSet::names() const {
  std::vector<std::string> out;
  for (const auto& a : aspects) out.push_back(a.name);
  return out;
}

void AspectSet::validate(std::size_t min_count, std::size_t max_count) const {
  if (aspects.empty()) throw ExtractionError("aspect set is empty");
  if (aspects.size() < min_count || aspects.size() > max_count) {
    throw ExtractionError("aspect count " + std::to_string(aspects.size()) + " is outside [" +
                          std::to_string(min_count) + ", " + std::to_string(max_count) + "]");
  }
  std::set<std::string> seen;
  for (const auto& a : aspects) {
    const std::string key = lower_trim(a.name);
    if (key.empty()) throw ExtractionError("aspect with an empty name");
    if (!seen.insert(key).second) throw ExtractionError("duplicate aspect '" + a.name + "'");
  }
}

nlohmann::json AspectSet::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : aspects) out.push_back({{"name", a.name}, {"description", a.description}});
  return out;
}

AspectSet AspectSet::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("aspect list must be a JSON array", j.dump());
  AspectSet s;
  for (const auto& e : j) {
    if (e.is_string()) {
      s.aspects.push_back({e.get<std::string>(), ""});
    } else if (e.is_object() && e.contains("name") && e.at("name").is_string()) {
      const auto d = e.value("description", std::string());
      s.aspects.push_back({e.at("name").get<std::string>(), d});
    } else {
      throw ParseError("aspect entries must be strings or {name, description} objects", j.dump());
    }
  }
  return s;
}

AspectSet parse_aspect_set(std::string_view raw_text, std::size_t min_count,
                           std::size_t max_count) {
  const std::string_view segment = json_segment(raw_text, '[', ']');
  if (segment.empty()) throw ParseError("no JSON array in response", std::string(raw_text));
  const auto j = nlohmann::json::parse(segment, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed aspect array", std::string(raw_text));
  AspectSet s = AspectSet::from_json(j);
  try {
    s.validate(min_count, max_count);
  } catch (const ExtractionError& e) {
    throw ParseError(e.what(), std::string(raw_text));
  }
  return s;
}

AspectSet propose_aspects(std::string_view task_description, std::string_view context,
                          const PromptLibrary& prompts, TextOracle& oracle,
                          const ExtractionOptions& options) {
  if (options.fixed_aspects) {
    options.fixed_aspects->validate(options.min_aspects, options.max_aspects);
    return *options.fixed_aspects;
  }
  if (context.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw InputError("context is empty");
  }
  TextQuery q;
  q.prompt = fill_template(prompts.get(PromptLibrary::kProposeAspects),
                           {{"task", std::string(task_description)},
                            {"context", std::string(context)},
                            {"min_aspects", std::to_string(options.min_aspects)},
                            {"max_aspects", std::to_string(options.max_aspects)}});
  q.temperature = options.temperature;
  q.no_cache = options.no_cache;
  q.nonce = options.nonce;
  std::string last_raw;
  std::string last_error;
  const int attempts = options.max_retries + 1;
  for (int a = 0; a < attempts; ++a) {
    last_raw = oracle.complete(q).text;
    try {
      return parse_aspect_set(last_raw, options.min_aspects, options.max_aspects);
    } catch (const ParseError& e) {
      last_error = e.what();
      q.no_cache = true;
      q.nonce = options.nonce + static_cast<std::uint64_t>(a) + 1;
    }
  }
  throw ExtractionError("aspect proposal failed after " + std::to_string(attempts) +
                        " attempts: " + last_error + "; last response: " + last_raw.substr(0, 300));
}

nlohmann::json ExtractedFactor::to_json() const {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& [b, e] : spans) s.push_back({b, e});
  return {{"aspect", aspect},
          {"summary", render_value(summary)},
          {"no_information", no_information},
          {"spans", s}};
}

ExtractedFactor ExtractedFactor::from_json(const nlohmann::json& j) {
  ExtractedFactor f;
  f.aspect = j.at("aspect").get<std::string>();
  f.summary = make_text(j.at("summary").get<std::string>());
  f.no_information = j.value("no_information", false);
  for (const auto& s : j.value("spans", nlohmann::json::array())) {
    f.spans.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
  }
  return f;
}

std::string no_information_summary(std::string_view aspect) {
  return "No information is provided about " + std::string(aspect) + ".";
}

ExtractedFactor parse_summary(std::string_view raw_text, const std::string& aspect,
                              std::size_t context_size) {
  const std::string_view segment = json_segment(raw_text, '{', '}');
  if (segment.empty()) throw ParseError("no JSON object in response", std::string(raw_text));
  const auto j = nlohmann::json::parse(segment, nullptr, false);
  if (j.is_discarded() || !j.contains("summary") || !j.at("summary").is_string()) {
    throw ParseError("response lacks a string \"summary\"", std::string(raw_text));
  }
  ExtractedFactor f;
  f.aspect = aspect;
  std::string summary = j.at("summary").get<std::string>();
  const std::string key = lower_trim(summary);
  std::string marker(kNoInformation);
  std::transform(marker.begin(), marker.end(), marker.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (key.empty() || key.rfind(marker, 0) == 0) {
    f.no_information = true;
    summary = no_information_summary(aspect);
  }
  f.summary = make_text(summary);
  if (j.contains("spans") && !f.no_information) {
    const auto& spans = j.at("spans");
    if (!spans.is_array()) throw ParseError("\"spans\" must be an array", std::string(raw_text));
    for (const auto& s : spans) {
      if (!s.is_array() || s.size() != 2 || !s.at(0).is_number_unsigned() ||
          !s.at(1).is_number_unsigned()) {
        throw ParseError("spans must be [start, end] pairs", std::string(raw_text));
      }
      const auto b = s.at(0).get<std::size_t>();
      const auto e = s.at(1).get<std::size_t>();
      if (b > e || e > context_size) {
        throw ParseError("span [" + std::to_string(b) + ", " + std::to_string(e) +
                             ") lies outside the context",
                         std::string(raw_text));
      }
      f.spans.emplace_back(b, e);
    }
  }
  return f;
}

std::vector<ExtractedFactor> extract_factor_summaries(std::string_view task_description,
                                                      std::string_view context,
                                                      const AspectSet& aspects,
                                                      const PromptLibrary& prompts,
                                                      TextOracle& oracle,
                                                      const ExtractionOptions& options) {
  aspects.validate(1, std::max<std::size_t>(aspects.size(), 1));
  std::vector<ExtractedFactor> out;
  std::vector<std::string> failures;
  const int attempts = options.max_retries + 1;
  for (const auto& aspect : aspects.aspects) {
    TextQuery q;
    q.prompt = fill_template(prompts.get(PromptLibrary::kSummarizeAspect),
                             {{"task", std::string(task_description)},
                              {"context", std::string(context)},
                              {"aspect", aspect.name},
                              {"aspect_description", aspect.description}});
    q.temperature = options.temperature;
    q.no_cache = options.no_cache;
    q.nonce = options.nonce;
    std::optional<ExtractedFactor> factor;
    std::string last_error;
    for (int a = 0; a < attempts && !factor; ++a) {
      try {
        factor = parse_summary(oracle.complete(q).text, aspect.name, context.size());
      } catch (const ParseError& e) {
        last_error = e.what();
        q.no_cache = true;
        q.nonce = options.nonce + static_cast<std::uint64_t>(a) + 1;
      } catch (const Error& e) {
        last_error = e.what();
        break;
      }
    }
    if (!factor) {
      failures.push_back(aspect.name + ": " + last_error);
      factor = ExtractedFactor{aspect.name, make_text(no_information_summary(aspect.name)), true, {}};
    }
    out.push_back(std::move(*factor));
  }
  if (!failures.empty() && !options.permissive) {
    std::string msg = std::to_string(failures.size()) + " aspect(s) could not be summarized";
    for (const auto& f : failures) msg += "; " + f;
    throw ExtractionError(msg);
  }
  return out;
}

FactorSchema extracted_schema(const AspectSet& aspects) {
  std::vector<FactorSpec> specs;
  for (const auto& a : aspects.aspects) specs.push_back({a.name, FactorKind::kText, "", a.description});
  return FactorSchema(std::move(specs));
}

Instance extracted_instance(std::string id, const std::vector<ExtractedFactor>& factors) {
  Instance x;
  x.id = std::move(id);
  for (const auto& f : factors) x.values.push_back(f.summary);
  return x;
}

void save_factors(const std::filesystem::path& path,
                  const std::vector<ExtractedFactor>& factors) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path.string());
  nlohmann::json j = nlohmann::json::array();
  for (const auto& f : factors) j.push_back(f.to_json());
  out << j.dump(2) << "\n";
}

std::vector<ExtractedFactor> load_factors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::vector<ExtractedFactor> out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& f : j) out.push_back(ExtractedFactor::from_json(f));
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace prism::extraction

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

#include "prism/oracle.h"

#include <openssl/evp.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "prism/error.h"

namespace prism {

std::string_view to_string(QueryKind kind) {
  switch (kind) {
    case QueryKind::kSingle:
      return "single";
    case QueryKind::kComparativePair:
      return "comparative_pair";
    case QueryKind::kBatchedTable:
      return "batched_table";
    case QueryKind::kPerClass:
      return "per_class";
  }
  return "single";
}

void OracleQuery::validate() const {
  if (expected_outputs < 1) throw InputError("query expects no outputs");
  switch (kind) {
    case QueryKind::kSingle:
      if (expected_outputs != 1) throw InputError("single query must expect 1 output");
      break;
    case QueryKind::kComparativePair:
      if (expected_outputs != 2) {
        throw InputError("comparative_pair query must expect 2 outputs");
      }
      break;
    case QueryKind::kBatchedTable:
      if (!rows.empty() && rows.size() != expected_outputs) {
        throw InputError("batched_table query must expect one output per row");
      }
      break;
    case QueryKind::kPerClass:
      if (num_classes < 2) throw InputError("per_class query needs >= 2 classes");
      if (expected_outputs % num_classes != 0) {
        throw InputError("per_class outputs must be a multiple of the class count");
      }
      break;
  }
  if (!rows.empty() && kind != QueryKind::kPerClass &&
      rows.size() != expected_outputs) {
    throw InputError("row payload size disagrees with expected_outputs");
  }
  if (kind == QueryKind::kPerClass && !rows.empty() &&
      rows.size() * num_classes != expected_outputs) {
    throw InputError("per_class row payload disagrees with expected_outputs");
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Splits a numeric list body on commas, semicolons, and whitespace. Returns
// nullopt if any token is not a number.
std::optional<std::vector<double>> parse_number_list(std::string_view body) {
  std::vector<double> values;
  std::size_t pos = 0;
  auto is_sep = [](char c) {
    return c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c));
  };
  while (pos < body.size()) {
    while (pos < body.size() && is_sep(body[pos])) ++pos;
    if (pos >= body.size()) break;
    std::size_t end = pos;
    while (end < body.size() && !is_sep(body[end])) ++end;
    std::string_view token = body.substr(pos, end - pos);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
    values.push_back(v);
    pos = end;
  }
  return values;
}

}  // namespace

std::optional<std::string_view> answer_line(std::string_view text) {
  const std::string low = lower(text);
  std::optional<std::string_view> found;
  std::size_t line_start = 0;
  while (line_start <= text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::string_view line_low(low.data() + line_start, line_end - line_start);
    std::size_t p = 0;
    while (p < line_low.size() &&
           (std::isspace(static_cast<unsigned char>(line_low[p])) || line_low[p] == '*' ||
            line_low[p] == '#' || line_low[p] == '>')) {
      ++p;
    }
    if (line_low.substr(p, 6) == "answer") {
      std::size_t q = p + 6;
      while (q < line_low.size() && (line_low[q] == '*' || line_low[q] == ' ')) ++q;
      if (q < line_low.size() && line_low[q] == ':') {
        ++q;
        while (q < line_low.size() && line_low[q] == '*') ++q;
        found = text.substr(line_start + q, line_end - line_start - q);
      }
    }
    if (line_end == text.size()) break;
    line_start = line_end + 1;
  }
  return found;
}

namespace {

std::optional<std::vector<double>> last_bracketed_list(std::string_view text) {
  std::size_t close = text.rfind(']');
  while (close != std::string_view::npos) {
    const std::size_t open = text.rfind('[', close);
    if (open == std::string_view::npos) return std::nullopt;
    auto values = parse_number_list(text.substr(open + 1, close - open - 1));
    if (values && !values->empty()) return values;
    if (open == 0) return std::nullopt;
    close = text.rfind(']', open - 1);
  }
  return std::nullopt;
}

}  // namespace

std::vector<double> parse_probabilities(std::string_view raw_text,
                                        std::size_t expected) {
  std::optional<std::vector<double>> values;
  if (auto line = answer_line(raw_text)) {
    std::string_view body = trim(*line);
    const auto open = body.find('[');
    const auto close = body.rfind(']');
    if (open != std::string_view::npos && close != std::string_view::npos &&
        close > open) {
      body = body.substr(open + 1, close - open - 1);
    }
    values = parse_number_list(body);
    if (!values) {
      throw ParseError("answer line is not a numeric list: '" +
                           std::string(trim(*line)) + "'",
                       std::string(raw_text));
    }
  } else {
    values = last_bracketed_list(raw_text);
  }
  if (!values || values->empty()) {
    throw ParseError("no answer segment found in response", std::string(raw_text));
  }
  if (values->size() != expected) {
    throw ParseError("expected " + std::to_string(expected) +
                         " probabilities, found " + std::to_string(values->size()),
                     std::string(raw_text));
  }
  for (double v : *values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%g", v);
      throw RangeError(std::string("probability ") + buf + " outside [0, 1]");
    }
  }
  return *values;
}

std::string format_answer(std::span<const double> probabilities) {
  std::string out = "Answer: [";
  char buf[64];
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (i > 0) out += ", ";
    std::snprintf(buf, sizeof(buf), "%.17g", probabilities[i]);
    out += buf;
  }
  out += "]";
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string cache_key(std::string_view model_id, std::string_view prompt,
                      double temperature, std::string_view kind) {
  char temp[64];
  std::snprintf(temp, sizeof(temp), "%.17g", temperature);
  // A JSON array keeps the field boundaries unambiguous.
  const nlohmann::json payload = {std::string(model_id), std::string(prompt),
                                  std::string(temp), std::string(kind)};
  return sha256_hex(payload.dump());
}

std::string cache_key(std::string_view model_id, const OracleQuery& query) {
  return cache_key(model_id, query.rendered_prompt, query.metadata.temperature,
                   to_string(query.kind));
}

OracleResponse evaluate_checked(EvaluationOracle& oracle, const OracleQuery& query) {
  query.validate();
  OracleResponse response = oracle.evaluate(query);
  if (response.probabilities.size() != query.expected_outputs) {
    throw ProtocolError("oracle '" + oracle.model_id() + "' returned " +
                        std::to_string(response.probabilities.size()) +
                        " probabilities, expected " +
                        std::to_string(query.expected_outputs));
  }
  return response;
}

OracleResponse CountingOracle::evaluate(const OracleQuery& query) {
  OracleResponse response = inner_.evaluate(query);
  queries_.fetch_add(1);
  const std::size_t cases = query.kind == QueryKind::kPerClass
                                ? query.expected_outputs / query.num_classes
                                : query.expected_outputs;
  rows_.fetch_add(cases);
  if (response.cache_hit) cache_hits_.fetch_add(1);
  return response;
}

void CountingOracle::reset() {
  queries_ = 0;
  rows_ = 0;
  cache_hits_ = 0;
}

}  // namespace prism

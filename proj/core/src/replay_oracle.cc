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

#include "prism/replay_oracle.h"

#include <nlohmann/json.hpp>

#include "prism/error.h"

namespace prism {

std::string text_cache_key(std::string_view model_id, const TextQuery& query) {
  return cache_key(model_id, query.prompt, query.temperature, kTextQueryKind);
}

Transcript::Transcript(const Transcript& other) {
  std::lock_guard lock(other.mu_);
  order_ = other.order_;
  entries_ = other.entries_;
  cursor_ = other.cursor_;
}

Transcript& Transcript::operator=(const Transcript& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  order_ = other.order_;
  entries_ = other.entries_;
  cursor_ = other.cursor_;
  return *this;
}

Transcript Transcript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open transcript " + path.string());
  Transcript t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      t.add(j.at("key").get<std::string>(), j.at("raw_text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(path.string() + ":" + std::to_string(line_no) +
                           ": malformed transcript entry (" + e.what() + ")");
    }
  }
  return t;
}

void Transcript::save(const std::filesystem::path& path) const {
  std::lock_guard lock(mu_);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write transcript " + path.string());
  for (const auto& key : order_) {
    for (const auto& raw : entries_.at(key)) {
      out << nlohmann::json{{"key", key}, {"raw_text", raw}}.dump() << "\n";
    }
  }
}

void Transcript::add(const std::string& key, std::string raw_text) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = entries_.try_emplace(key);
  if (inserted) order_.push_back(key);
  it->second.push_back(std::move(raw_text));
}

std::optional<std::string> Transcript::next(const std::string& key) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  std::size_t& cursor = cursor_[key];
  const std::string& out = it->second[cursor % it->second.size()];
  ++cursor;
  return out;
}

bool Transcript::contains(const std::string& key) const {
  std::lock_guard lock(mu_);
  return entries_.count(key) > 0;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [key, raws] : entries_) n += raws.size();
  return n;
}

void Transcript::rewind() {
  std::lock_guard lock(mu_);
  cursor_.clear();
}

ReplayOracle::ReplayOracle(std::string model_id, Transcript transcript)
    : model_id_(std::move(model_id)), transcript_(std::move(transcript)) {}

std::string ReplayOracle::next_text(const std::string& key) {
  auto raw = transcript_.next(key);
  if (!raw) {
    throw QueryError("transcript has no entry for key " + key, std::string(), 0);
  }
  return *raw;
}

OracleResponse ReplayOracle::evaluate(const OracleQuery& query) {
  OracleResponse response;
  response.raw_text = next_text(cache_key(model_id_, query));
  response.probabilities = parse_probabilities(response.raw_text, query.expected_outputs);
  return response;
}

TextResponse ReplayOracle::complete(const TextQuery& query) {
  TextResponse response;
  response.text = next_text(text_cache_key(model_id_, query));
  return response;
}

RecordingOracle::RecordingOracle(EvaluationOracle* evaluation, TextOracle* text,
                                 const std::filesystem::path& path)
    : evaluation_(evaluation), text_(text), out_(path, std::ios::app) {
  if (!evaluation_ && !text_) throw InputError("recording oracle needs an inner oracle");
  if (!out_) throw IngestionError("cannot open transcript " + path.string());
}

std::string RecordingOracle::model_id() const {
  return evaluation_ ? evaluation_->model_id() : text_->model_id();
}

void RecordingOracle::append(const std::string& key, const std::string& raw_text) {
  std::lock_guard lock(mu_);
  out_ << nlohmann::json{{"key", key}, {"raw_text", raw_text}}.dump() << "\n";
  out_.flush();
  ++recorded_;
}

OracleResponse RecordingOracle::evaluate(const OracleQuery& query) {
  if (!evaluation_) throw InputError("recording oracle has no evaluation backend");
  OracleResponse response = evaluation_->evaluate(query);
  append(cache_key(evaluation_->model_id(), query), response.raw_text);
  return response;
}

TextResponse RecordingOracle::complete(const TextQuery& query) {
  if (!text_) throw InputError("recording oracle has no text backend");
  TextResponse response = text_->complete(query);
  append(text_cache_key(text_->model_id(), query), response.text);
  return response;
}

std::size_t RecordingOracle::recorded() const {
  std::lock_guard lock(mu_);
  return recorded_;
}

}  // namespace prism

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

#include "prism/chat_oracle.h"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <thread>

#include "prism/error.h"

namespace prism {

nlohmann::json build_chat_request(std::string_view model, std::string_view prompt,
                                  double temperature, std::uint64_t nonce) {
  nlohmann::json request = {
      {"model", std::string(model)},
      {"messages", nlohmann::json::array(
                       {{{"role", "user"}, {"content", std::string(prompt)}}})},
      {"temperature", temperature}};
  if (nonce != 0) request["user"] = "prism-" + std::to_string(nonce);
  return request;
}

std::string parse_chat_response(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ParseError("response body is not JSON", std::string(body));
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ParseError("message content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("response has no choices[0].message.content", std::string(body));
  }
}

std::chrono::milliseconds RetryPolicy::backoff(int retry) const {
  const double ms = static_cast<double>(initial_backoff.count()) *
                    std::pow(multiplier, std::max(0, retry));
  return std::chrono::milliseconds(
      static_cast<std::int64_t>(std::min(ms, static_cast<double>(max_backoff.count()))));
}

nlohmann::json CacheEntry::to_json() const {
  return {{"key", key},
          {"response",
           {{"probabilities", response.probabilities},
            {"raw_text", response.raw_text},
            {"attempts", response.attempts}}},
          {"created_at", created_at}};
}

CacheEntry CacheEntry::from_json(const nlohmann::json& j) {
  CacheEntry e;
  e.key = j.at("key").get<std::string>();
  const auto& r = j.at("response");
  e.response.probabilities = r.at("probabilities").get<std::vector<double>>();
  e.response.raw_text = r.at("raw_text").get<std::string>();
  e.response.attempts = r.value("attempts", 1);
  e.created_at = j.value("created_at", "");
  return e;
}

ResponseCache::ResponseCache(const std::filesystem::path& path) {
  if (std::ifstream in(path); in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        CacheEntry e = CacheEntry::from_json(nlohmann::json::parse(line));
        entries_[e.key] = std::move(e);
      } catch (const nlohmann::json::exception& e) {
        throw IngestionError(path.string() + ":" + std::to_string(line_no) +
                             ": malformed cache entry (" + e.what() + ")");
      }
    }
  }
  out_.open(path, std::ios::app);
  if (!out_) throw IngestionError("cannot open cache file " + path.string());
}

std::optional<CacheEntry> ResponseCache::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(CacheEntry entry) {
  std::lock_guard lock(mu_);
  if (out_.is_open()) {
    out_ << entry.to_json().dump() << "\n";
    out_.flush();
  }
  entries_[entry.key] = std::move(entry);
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ChatCompletionOracle::ChatCompletionOracle(ChatTransport& transport, std::string model,
                                           ResponseCache* cache, RetryPolicy retry,
                                           int max_in_flight)
    : transport_(transport),
      model_(std::move(model)),
      cache_(cache),
      retry_(retry),
      slots_(std::clamp(max_in_flight, 1, 1024)),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (retry_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

OracleResponse ChatCompletionOracle::call_with_retries(const std::string& prompt,
                                                       double temperature,
                                                       std::uint64_t nonce,
                                                       const Parser& parse) {
  const std::string body = build_chat_request(model_, prompt, temperature, nonce).dump();
  const int max_attempts = retry_.max_retries + 1;
  std::string last_raw;
  std::string last_error;
  int last_status = 0;
  bool last_was_transport = false;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) sleep_(retry_.backoff(attempt - 2));
    HttpResult result;
    {
      slots_.acquire();
      network_calls_.fetch_add(1);
      try {
        result = transport_.post(body);
      } catch (...) {
        slots_.release();
        throw;
      }
      slots_.release();
    }
    if (result.status == 0 || result.status == 429 || result.status >= 500) {
      last_was_transport = true;
      last_status = result.status;
      last_error = result.status == 0 ? result.error
                                      : "HTTP " + std::to_string(result.status);
      continue;
    }
    if (result.status < 200 || result.status >= 300) {
      throw TransportError("chat endpoint returned HTTP " + std::to_string(result.status) +
                               ": " + result.body.substr(0, 200),
                           attempt, result.status);
    }
    last_was_transport = false;
    try {
      last_raw = parse_chat_response(result.body);
      OracleResponse response;
      response.probabilities = parse(last_raw);
      response.raw_text = last_raw;
      response.attempts = attempt;
      return response;
    } catch (const ParseError& e) {
      last_error = e.what();
      if (last_raw.empty()) last_raw = e.raw_text();
    } catch (const RangeError& e) {
      last_error = e.what();
    }
  }
  if (last_was_transport) {
    throw TransportError("chat request failed after " + std::to_string(max_attempts) +
                             " attempts: " + last_error,
                         max_attempts, last_status);
  }
  throw QueryError("no usable answer after " + std::to_string(max_attempts) +
                       " attempts: " + last_error,
                   last_raw, max_attempts);
}

OracleResponse ChatCompletionOracle::fetch(const std::string& key,
                                           const std::string& prompt, double temperature,
                                           std::uint64_t nonce, bool no_cache,
                                           const Parser& parse) {
  if (no_cache) return call_with_retries(prompt, temperature, nonce, parse);
  if (cache_) {
    if (auto hit = cache_->find(key)) {
      OracleResponse response = hit->response;
      response.cache_hit = true;
      return response;
    }
  }
  std::promise<OracleResponse> promise;
  std::shared_future<OracleResponse> shared;
  {
    std::lock_guard lock(flight_mu_);
    auto it = in_flight_.find(key);
    if (it != in_flight_.end()) {
      shared = it->second;
    } else if (auto hit = cache_ ? cache_->find(key) : std::nullopt) {
      OracleResponse response = hit->response;
      response.cache_hit = true;
      return response;
    } else {
      in_flight_.emplace(key, promise.get_future().share());
    }
  }
  if (shared.valid()) {
    OracleResponse response = shared.get();
    response.cache_hit = true;
    return response;
  }
  try {
    OracleResponse response = call_with_retries(prompt, temperature, nonce, parse);
    if (cache_) cache_->put(CacheEntry{key, response, utc_timestamp()});
    promise.set_value(response);
    std::lock_guard lock(flight_mu_);
    in_flight_.erase(key);
    return response;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(flight_mu_);
    in_flight_.erase(key);
    throw;
  }
}

OracleResponse ChatCompletionOracle::evaluate(const OracleQuery& query) {
  const std::size_t expected = query.expected_outputs;
  return fetch(cache_key(model_, query), query.rendered_prompt, query.metadata.temperature,
               query.nonce, query.no_cache, [expected](const std::string& raw) {
                 return parse_probabilities(raw, expected);
               });
}

TextResponse ChatCompletionOracle::complete(const TextQuery& query) {
  const std::string key =
      cache_key(model_, query.prompt, query.temperature, "text");
  OracleResponse r = fetch(key, query.prompt, query.temperature, query.nonce,
                           query.no_cache, [](const std::string&) {
                             return std::vector<double>{};
                           });
  TextResponse response;
  response.text = std::move(r.raw_text);
  response.cache_hit = r.cache_hit;
  response.attempts = r.attempts;
  return response;
}

}  // namespace prism

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

// Live chat-completions oracle: response cache, retries with exponential
// backoff, in-flight deduplication and a bounded number of concurrent calls.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prism/oracle.h"

namespace prism {

// {model, messages: [{role: "user", content: prompt}], temperature}, plus a
// "user" field carrying the nonce when it is non-zero.
nlohmann::json build_chat_request(std::string_view model, std::string_view prompt,
                                  double temperature, std::uint64_t nonce = 0);

// Message content of the first choice. Throws ParseError on other shapes.
std::string parse_chat_response(std::string_view body);

struct HttpResult {
  int status = 0;  // 0 when no HTTP response was received
  std::string body;
  std::string error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResult post(const std::string& json_body) = 0;
};

struct ChatEndpoint {
  // Full URL of the chat-completions route, e.g.
  // https://api.openai.com/v1/chat/completions
  std::string url;
  std::string model;
  // Name of the environment variable holding the bearer token.
  std::string api_key_env = "PRISM_API_KEY";
  int timeout_seconds = 120;
};

// HTTP(S) transport. The bearer token is read from the environment once, at
// construction; an unset variable sends no Authorization header.
class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(const ChatEndpoint& endpoint);
  ~HttpChatTransport() override;

  HttpResult post(const std::string& json_body) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds backoff(int retry) const;
};

struct CacheEntry {
  std::string key;
  OracleResponse response;
  std::string created_at;  // ISO-8601 UTC

  nlohmann::json to_json() const;
  static CacheEntry from_json(const nlohmann::json& j);
};

// In-memory map backed by an append-only JSON-lines file. Safe for
// concurrent use; a key written twice keeps the latest entry.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(const std::filesystem::path& path);

  std::optional<CacheEntry> find(const std::string& key) const;
  void put(CacheEntry entry);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, CacheEntry> entries_;
  std::ofstream out_;
};

std::string utc_timestamp();

class ChatCompletionOracle : public EvaluationOracle, public TextOracle {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  // The cache may be null. At most max_in_flight transport calls run at once.
  ChatCompletionOracle(ChatTransport& transport, std::string model,
                       ResponseCache* cache = nullptr, RetryPolicy retry = {},
                       int max_in_flight = 4);

  std::string model_id() const override { return model_; }
  OracleResponse evaluate(const OracleQuery& query) override;
  TextResponse complete(const TextQuery& query) override;

  std::uint64_t network_calls() const { return network_calls_.load(); }
  void set_sleeper(Sleeper sleeper) { sleep_ = std::move(sleeper); }

 private:
  using Parser = std::function<std::vector<double>(const std::string&)>;

  OracleResponse fetch(const std::string& key, const std::string& prompt,
                       double temperature, std::uint64_t nonce, bool no_cache,
                       const Parser& parse);
  OracleResponse call_with_retries(const std::string& prompt, double temperature,
                                   std::uint64_t nonce, const Parser& parse);

  ChatTransport& transport_;
  std::string model_;
  ResponseCache* cache_;
  RetryPolicy retry_;
  std::counting_semaphore<1024> slots_;
  Sleeper sleep_;
  std::atomic<std::uint64_t> network_calls_{0};
  std::mutex flight_mu_;
  std::map<std::string, std::shared_future<OracleResponse>> in_flight_;
};

}  // namespace prism

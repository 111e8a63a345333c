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

// The loopback server test links httplib with the same configuration as the
// library's transport.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "prism/chat_oracle.h"
#include "prism/error.h"
#include "test_support.h"

namespace prism {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;
using std::chrono::milliseconds;

std::string chat_body(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

HttpResult ok(const std::string& content) { return {200, chat_body(content), ""}; }

// Serves scripted results in order (the last repeats) and records request
// bodies.
class FakeTransport : public ChatTransport {
 public:
  explicit FakeTransport(std::vector<HttpResult> script) : script_(std::move(script)) {}

  HttpResult post(const std::string& body) override {
    std::lock_guard lock(mu_);
    bodies_.push_back(nlohmann::json::parse(body));
    const std::size_t i = std::min(next_++, script_.size() - 1);
    return script_[i];
  }

  std::vector<nlohmann::json> bodies() const {
    std::lock_guard lock(mu_);
    return bodies_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<HttpResult> script_;
  std::size_t next_ = 0;
  std::vector<nlohmann::json> bodies_;
};

OracleQuery pair_query(const std::string& prompt = "compare") {
  OracleQuery q;
  q.kind = QueryKind::kComparativePair;
  q.expected_outputs = 2;
  q.rendered_prompt = prompt;
  return q;
}

struct Sleeps {
  std::vector<milliseconds> recorded;
  ChatCompletionOracle::Sleeper sleeper() {
    return [this](milliseconds d) { recorded.push_back(d); };
  }
};

TEST(ChatRequest, Shape) {
  const auto j = build_chat_request("gpt-test", "hello", 0.7);
  EXPECT_EQ(j.at("model"), "gpt-test");
  EXPECT_EQ(j.at("messages").size(), 1u);
  EXPECT_EQ(j.at("messages")[0].at("role"), "user");
  EXPECT_EQ(j.at("messages")[0].at("content"), "hello");
  EXPECT_EQ(j.at("temperature"), 0.7);
  EXPECT_FALSE(j.contains("user"));
  EXPECT_EQ(build_chat_request("m", "p", 1.0, 5).at("user"), "prism-5");
}

TEST(ChatResponse, ExtractsFirstChoiceContent) {
  EXPECT_EQ(parse_chat_response(chat_body("Answer: [0.4]")), "Answer: [0.4]");
  EXPECT_THROW(parse_chat_response("not json"), ParseError);
  EXPECT_THROW(parse_chat_response(R"({"choices": []})"), ParseError);
  EXPECT_THROW(parse_chat_response(R"({"choices": [{"message": {"content": 3}}]})"), ParseError);
}

TEST(RetryPolicy, ExponentialWithCap) {
  const RetryPolicy p;
  EXPECT_EQ(p.max_retries, 3);
  EXPECT_EQ(p.backoff(0), milliseconds(500));
  EXPECT_EQ(p.backoff(1), milliseconds(1000));
  EXPECT_EQ(p.backoff(2), milliseconds(2000));
  EXPECT_EQ(p.backoff(4), milliseconds(8000));
  EXPECT_EQ(p.backoff(10), milliseconds(8000));
}

TEST(ChatOracle, RetriesServerErrorsThenSucceeds) {
  FakeTransport t({{500, "", ""}, {0, "", "connection refused"}, ok("Answer: [0.8, 0.3]")});
  ChatCompletionOracle oracle(t, "m");
  Sleeps sleeps;
  oracle.set_sleeper(sleeps.sleeper());
  const auto r = oracle.evaluate(pair_query());
  EXPECT_THAT(r.probabilities, ElementsAre(0.8, 0.3));
  EXPECT_EQ(r.attempts, 3);
  EXPECT_FALSE(r.cache_hit);
  EXPECT_EQ(oracle.network_calls(), 3u);
  EXPECT_THAT(sleeps.recorded, ElementsAre(milliseconds(500), milliseconds(1000)));
}

TEST(ChatOracle, ExhaustedTransportRetriesRaiseTransportError) {
  FakeTransport t({{429, "slow down", ""}});
  ChatCompletionOracle oracle(t, "m");
  Sleeps sleeps;
  oracle.set_sleeper(sleeps.sleeper());
  try {
    oracle.evaluate(pair_query());
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 4);
    EXPECT_EQ(e.http_status(), 429);
  }
  EXPECT_EQ(oracle.network_calls(), 4u);
  EXPECT_EQ(sleeps.recorded.size(), 3u);
}

TEST(ChatOracle, ClientErrorIsNotRetried) {
  FakeTransport t({{401, "unauthorized", ""}});
  ChatCompletionOracle oracle(t, "m");
  oracle.set_sleeper([](milliseconds) {});
  EXPECT_THROW(oracle.evaluate(pair_query()), TransportError);
  EXPECT_EQ(oracle.network_calls(), 1u);
}

TEST(ChatOracle, UnusableAnswersAreRetriedThenQueryError) {
  FakeTransport good({ok("thinking"), ok("Answer: [0.1, 0.2]")});
  ChatCompletionOracle a(good, "m");
  a.set_sleeper([](milliseconds) {});
  EXPECT_EQ(a.evaluate(pair_query()).attempts, 2);

  FakeTransport bad({ok("Answer: [1.5, 0.2]")});
  ChatCompletionOracle b(bad, "m");
  b.set_sleeper([](milliseconds) {});
  try {
    b.evaluate(pair_query());
    FAIL();
  } catch (const QueryError& e) {
    EXPECT_EQ(e.attempts(), 4);
    EXPECT_EQ(e.raw_text(), "Answer: [1.5, 0.2]");
  }
  EXPECT_EQ(b.network_calls(), 4u);
}

TEST(ChatOracle, ZeroRetriesMeansOneAttempt) {
  FakeTransport t({{503, "", ""}});
  RetryPolicy none;
  none.max_retries = 0;
  ChatCompletionOracle oracle(t, "m", nullptr, none);
  EXPECT_THROW(oracle.evaluate(pair_query()), TransportError);
  EXPECT_EQ(oracle.network_calls(), 1u);
  RetryPolicy negative;
  negative.max_retries = -1;
  EXPECT_THROW(ChatCompletionOracle(t, "m", nullptr, negative), ConfigError);
}

TEST(ChatOracle, CacheHitsAndPersistence) {
  const auto dir = testing::temp_dir("chat_cache");
  FakeTransport t({ok("Answer: [0.6, 0.4]")});
  {
    ResponseCache cache(dir / "cache.jsonl");
    ChatCompletionOracle oracle(t, "m", &cache);
    const auto first = oracle.evaluate(pair_query());
    const auto second = oracle.evaluate(pair_query());
    EXPECT_FALSE(first.cache_hit);
    EXPECT_TRUE(second.cache_hit);
    EXPECT_EQ(second.probabilities, first.probabilities);
    EXPECT_EQ(second.raw_text, first.raw_text);
    EXPECT_EQ(oracle.network_calls(), 1u);
    EXPECT_EQ(cache.size(), 1u);
  }
  ResponseCache warm(dir / "cache.jsonl");
  EXPECT_EQ(warm.size(), 1u);
  ChatCompletionOracle again(t, "m", &warm);
  EXPECT_TRUE(again.evaluate(pair_query()).cache_hit);
  EXPECT_EQ(again.network_calls(), 0u);
  // The model id is part of the key.
  ChatCompletionOracle other(t, "m2", &warm);
  EXPECT_FALSE(other.evaluate(pair_query()).cache_hit);
}

TEST(ChatOracle, NoCacheBypassesAndSendsNonce) {
  FakeTransport t({ok("Answer: [0.6, 0.4]")});
  ResponseCache cache;
  ChatCompletionOracle oracle(t, "m", &cache);
  oracle.evaluate(pair_query());
  OracleQuery repeat = pair_query();
  repeat.no_cache = true;
  repeat.nonce = 7;
  EXPECT_FALSE(oracle.evaluate(repeat).cache_hit);
  EXPECT_EQ(oracle.network_calls(), 2u);
  EXPECT_EQ(cache.size(), 1u);
  const auto bodies = t.bodies();
  ASSERT_EQ(bodies.size(), 2u);
  EXPECT_FALSE(bodies[0].contains("user"));
  EXPECT_EQ(bodies[1].at("user"), "prism-7");
  EXPECT_EQ(bodies[1].at("messages")[0].at("content"), "compare");
}

TEST(ChatOracle, TextCompletionsUseSeparateKeys) {
  FakeTransport t({ok("free text")});
  ResponseCache cache;
  ChatCompletionOracle oracle(t, "m", &cache);
  TextQuery q;
  q.prompt = "compare";
  EXPECT_EQ(oracle.complete(q).text, "free text");
  EXPECT_TRUE(oracle.complete(q).cache_hit);
  EXPECT_TRUE(cache.find(cache_key("m", "compare", 1.0, "text")).has_value());
  EXPECT_FALSE(cache.find(cache_key("m", pair_query())).has_value());
}

// Blocks every call until released and tracks peak concurrency.
class GatedTransport : public ChatTransport {
 public:
  HttpResult post(const std::string&) override {
    std::unique_lock lock(mu_);
    ++calls_;
    peak_ = std::max(peak_, ++active_);
    cv_.wait(lock, [this] { return open_; });
    --active_;
    return ok("Answer: [0.5, 0.5]");
  }
  void open() {
    std::lock_guard lock(mu_);
    open_ = true;
    cv_.notify_all();
  }
  int calls() {
    std::lock_guard lock(mu_);
    return calls_;
  }
  int peak() {
    std::lock_guard lock(mu_);
    return peak_;
  }
  int active() {
    std::lock_guard lock(mu_);
    return active_;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  bool open_ = false;
  int calls_ = 0;
  int active_ = 0;
  int peak_ = 0;
};

TEST(ChatOracle, IdenticalConcurrentQueriesShareOneCall) {
  GatedTransport t;
  ResponseCache cache;
  ChatCompletionOracle oracle(t, "m", &cache);
  std::atomic<int> hits{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      if (oracle.evaluate(pair_query()).cache_hit) ++hits;
    });
  }
  while (t.active() < 1) std::this_thread::sleep_for(milliseconds(1));
  std::this_thread::sleep_for(milliseconds(50));
  t.open();
  for (auto& th : threads) th.join();
  EXPECT_EQ(t.calls(), 1);
  EXPECT_EQ(oracle.network_calls(), 1u);
  EXPECT_EQ(hits.load(), 7);
}

TEST(ChatOracle, InFlightCallsAreBounded) {
  GatedTransport t;
  ChatCompletionOracle oracle(t, "m", nullptr, {}, 3);
  std::vector<std::thread> threads;
  for (int i = 0; i < 10; ++i) {
    threads.emplace_back([&, i] { oracle.evaluate(pair_query("p" + std::to_string(i))); });
  }
  while (t.active() < 3) std::this_thread::sleep_for(milliseconds(1));
  std::this_thread::sleep_for(milliseconds(50));
  EXPECT_EQ(t.active(), 3);
  t.open();
  for (auto& th : threads) th.join();
  EXPECT_EQ(t.peak(), 3);
  EXPECT_EQ(t.calls(), 10);
}

TEST(CacheEntry, JsonRoundTrip) {
  CacheEntry e{"k", {{0.25, 1.0}, "Answer: [0.25, 1]", false, 2}, "2026-01-01T00:00:00Z"};
  const CacheEntry back = CacheEntry::from_json(e.to_json());
  EXPECT_EQ(back.key, e.key);
  EXPECT_EQ(back.response, e.response);
  EXPECT_EQ(back.created_at, e.created_at);
  EXPECT_EQ(utc_timestamp().size(), 20u);
}

TEST(ResponseCache, MalformedFileNamesLine) {
  const auto dir = testing::temp_dir("bad_cache");
  std::ofstream(dir / "c.jsonl") << "{\"key\": 1}\n";
  EXPECT_THROW(ResponseCache(dir / "c.jsonl"), IngestionError);
}

TEST(HttpChatTransport, TalksToLoopbackServer) {
  httplib::Server server;
  std::string seen_auth;
  std::string seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(chat_body("Answer: [0.9, 0.1]"), "application/json");
  });
  server.Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("PRISM_TEST_KEY", "secret-token", 1);
  ChatEndpoint ep;
  ep.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  ep.model = "local";
  ep.api_key_env = "PRISM_TEST_KEY";
  ep.timeout_seconds = 5;
  HttpChatTransport transport(ep);
  ChatCompletionOracle oracle(transport, "local");
  const auto r = oracle.evaluate(pair_query("hi"));
  EXPECT_THAT(r.probabilities, ElementsAre(0.9, 0.1));
  EXPECT_EQ(seen_auth, "Bearer secret-token");
  EXPECT_EQ(nlohmann::json::parse(seen_body).at("model"), "local");

  ep.url = "http://127.0.0.1:" + std::to_string(port) + "/down";
  HttpChatTransport down(ep);
  EXPECT_EQ(down.post("{}").status, 503);
  server.stop();
  th.join();

  EXPECT_EQ(down.post("{}").status, 0);
  ep.url = "no-scheme";
  EXPECT_THROW(HttpChatTransport bad(ep), ConfigError);
}

}  // namespace
}  // namespace prism

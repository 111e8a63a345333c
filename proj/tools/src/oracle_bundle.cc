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

#include <atomic>
#include <fstream>

#include "commands.h"
#include "prism/baselines.h"
#include "prism/chat_oracle.h"
#include "prism/error.h"
#include "prism/replay_oracle.h"
#include "prism/synthetic_oracle.h"

namespace prism::cli {
namespace {

class CountingEvaluation : public EvaluationOracle {
 public:
  CountingEvaluation(EvaluationOracle& inner, bool force_no_cache)
      : inner_(inner), force_no_cache_(force_no_cache) {}

  std::string model_id() const override { return inner_.model_id(); }

  OracleResponse evaluate(const OracleQuery& query) override {
    queries.fetch_add(1);
    rows.fetch_add(query.rows.size());
    OracleResponse r;
    if (force_no_cache_ && !query.no_cache) {
      OracleQuery q = query;
      q.no_cache = true;
      r = inner_.evaluate(q);
    } else {
      r = inner_.evaluate(query);
    }
    if (r.cache_hit) cache_hits.fetch_add(1);
    return r;
  }

  std::atomic<std::uint64_t> queries{0};
  std::atomic<std::uint64_t> rows{0};
  std::atomic<std::uint64_t> cache_hits{0};

 private:
  EvaluationOracle& inner_;
  bool force_no_cache_;
};

class CountingText : public TextOracle {
 public:
  CountingText(TextOracle& inner, bool force_no_cache)
      : inner_(inner), force_no_cache_(force_no_cache) {}

  std::string model_id() const override { return inner_.model_id(); }

  TextResponse complete(const TextQuery& query) override {
    queries.fetch_add(1);
    TextResponse r;
    if (force_no_cache_ && !query.no_cache) {
      TextQuery q = query;
      q.no_cache = true;
      r = inner_.complete(q);
    } else {
      r = inner_.complete(query);
    }
    if (r.cache_hit) cache_hits.fetch_add(1);
    return r;
  }

  std::atomic<std::uint64_t> queries{0};
  std::atomic<std::uint64_t> cache_hits{0};

 private:
  TextOracle& inner_;
  bool force_no_cache_;
};

nlohmann::json read_json_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + what + " " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(what + " " + path.string() + " is not valid JSON");
  return j;
}

}  // namespace

struct OracleBundle::Impl {
  std::unique_ptr<RecordingOracle> recorder;
  std::unique_ptr<CountingEvaluation> evaluation;
  std::unique_ptr<CountingText> text;
  std::function<std::uint64_t()> network_calls;
};

OracleBundle::OracleBundle(EvaluationOracle* evaluation, TextOracle* text,
                           nlohmann::json identity, bool force_no_cache,
                           const std::filesystem::path& record)
    : impl_(std::make_unique<Impl>()), identity_(std::move(identity)) {
  if (!record.empty()) {
    impl_->recorder = std::make_unique<RecordingOracle>(evaluation, text, record);
    if (evaluation) evaluation = impl_->recorder.get();
    if (text) text = impl_->recorder.get();
  }
  if (evaluation) {
    impl_->evaluation = std::make_unique<CountingEvaluation>(*evaluation, force_no_cache);
  }
  if (text) impl_->text = std::make_unique<CountingText>(*text, force_no_cache);
}

OracleBundle::~OracleBundle() {
  // Wrappers refer to retained objects, so they go first.
  impl_.reset();
  while (!owned_.empty()) owned_.pop_back();
}

EvaluationOracle& OracleBundle::evaluation() {
  if (!impl_->evaluation) throw ConfigError("the selected oracle cannot answer probability queries");
  return *impl_->evaluation;
}

TextOracle& OracleBundle::text() {
  if (!impl_->text) throw ConfigError("the selected oracle cannot answer free-text queries");
  return *impl_->text;
}

bool OracleBundle::has_text() const { return impl_->text != nullptr; }

std::string OracleBundle::model_id() const {
  if (impl_->evaluation) return impl_->evaluation->model_id();
  if (impl_->text) return impl_->text->model_id();
  return "";
}

void OracleBundle::set_network_counter(std::function<std::uint64_t()> counter) {
  impl_->network_calls = std::move(counter);
}

nlohmann::json OracleBundle::stats() const {
  nlohmann::json s = {{"queries", 0}, {"row_evaluations", 0}, {"cache_hits", 0},
                      {"text_queries", 0}};
  if (impl_->evaluation) {
    s["queries"] = impl_->evaluation->queries.load();
    s["row_evaluations"] = impl_->evaluation->rows.load();
    s["cache_hits"] = impl_->evaluation->cache_hits.load();
  }
  if (impl_->text) {
    s["text_queries"] = impl_->text->queries.load();
    s["cache_hits"] = s["cache_hits"].get<std::uint64_t>() + impl_->text->cache_hits.load();
  }
  if (impl_->network_calls) s["network_calls"] = impl_->network_calls();
  return s;
}

OracleFactory make_oracle_factory(const OracleOptions& options) {
  return [options](const data::TaskConfig& config) -> std::unique_ptr<OracleBundle> {
    nlohmann::json identity = {{"oracle", options.kind}};
    if (options.kind == "synthetic") {
      if (options.synthetic_model.empty()) {
        throw ConfigError("--oracle synthetic needs --synthetic-model");
      }
      const auto j = read_json_file(options.synthetic_model, "synthetic model");
      auto model = std::make_shared<LinearLogitModel>(
          LinearLogitModel::from_json(j, config.task.schema));
      RowModel row_model = [model](const PartialRow& row) { return (*model)(row); };
      const std::string name = "synthetic-" + sha256_hex(j.dump()).substr(0, 12);
      identity["model"] = j;
      std::shared_ptr<EvaluationOracle> base;
      if (options.noise_sigma > 0.0) {
        base = std::make_shared<NoisyOracle>(name, row_model, options.noise_sigma,
                                             options.noise_seed);
        identity["noise_sigma"] = options.noise_sigma;
        identity["noise_seed"] = options.noise_seed;
      } else {
        base = std::make_shared<DeterministicOracle>(name, row_model);
      }
      auto levels = std::make_shared<baselines::LevelAdapter>(*base);
      auto bundle = std::make_unique<OracleBundle>(base.get(), levels.get(), identity,
                                                   options.no_cache, options.record);
      bundle->retain(base);
      bundle->retain(levels);
      return bundle;
    }
    if (options.kind == "replay") {
      if (options.transcript.empty()) throw ConfigError("--oracle replay needs --transcript");
      auto replay = std::make_shared<ReplayOracle>(options.model,
                                                   Transcript::load(options.transcript));
      identity["model"] = options.model;
      auto bundle = std::make_unique<OracleBundle>(replay.get(), replay.get(), identity,
                                                   options.no_cache, options.record);
      bundle->retain(replay);
      return bundle;
    }
    if (options.kind == "chat") {
      if (options.endpoint.empty()) throw ConfigError("--oracle chat needs --endpoint");
      ChatEndpoint endpoint;
      endpoint.url = options.endpoint;
      endpoint.model = options.model;
      endpoint.api_key_env = options.api_key_env;
      auto transport = std::make_shared<HttpChatTransport>(endpoint);
      std::shared_ptr<ResponseCache> cache;
      if (!options.cache.empty()) cache = std::make_shared<ResponseCache>(options.cache);
      RetryPolicy retry;
      retry.max_retries = options.max_retries;
      auto chat = std::make_shared<ChatCompletionOracle>(*transport, options.model, cache.get(),
                                                         retry, options.concurrency);
      identity["model"] = options.model;
      identity["endpoint"] = options.endpoint;
      auto bundle = std::make_unique<OracleBundle>(chat.get(), chat.get(), identity,
                                                   options.no_cache, options.record);
      bundle->retain(transport);
      bundle->retain(cache);
      bundle->retain(chat);
      bundle->set_network_counter([c = chat.get()] { return c->network_calls(); });
      return bundle;
    }
    throw ConfigError("unknown oracle '" + options.kind + "' (synthetic, replay or chat)");
  };
}

}  // namespace prism::cli

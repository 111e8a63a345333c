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

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "commands.h"
#include "io_util.h"
#include "prism/attribution.h"
#include "prism/baselines.h"
#include "prism/chat_oracle.h"
#include "prism/error.h"
#include "prism/prism.h"
#include "prism/tabular.h"

namespace prism::cli {
namespace {

bool is_attribution_method(const std::string& m) { return m == "prism" || m == "tabular-prism"; }

data::Dataset load_dataset(const RunOptions& o, const data::TaskConfig& config) {
  if (o.data.extension() == ".jsonl") {
    return data::Dataset::load_jsonl(o.data, config.task.schema);
  }
  return data::load_csv(o.data, config);
}

void check_method(const RunOptions& o, const data::TaskConfig& config) {
  const auto& methods = run_methods();
  if (std::find(methods.begin(), methods.end(), o.method) == methods.end()) {
    throw ConfigError("unknown method '" + o.method + "'");
  }
  if (o.k < 1) throw ConfigError("--k must be >= 1");
  if (o.shots < 1) throw ConfigError("--shots must be >= 1");
  if (o.concurrency < 1) throw ConfigError("--concurrency must be >= 1");
  const bool multiclass = !config.task.classes.empty();
  if (multiclass && o.method != "prism") {
    throw ConfigError("method '" + o.method + "' supports binary tasks only");
  }
  if (o.method == "tabular-prism" && !config.task.reference) {
    throw ConfigError("tabular-prism needs a reference instance in the task config");
  }
  if (o.method == "contrast" && !config.contrast_enabled) {
    throw ConfigError("contrast needs a negated_question in the task config");
  }
}

nlohmann::json failure_record(const std::string& id, const Error& e) {
  nlohmann::json f = {{"id", id}, {"kind", std::string(kind_name(e.kind()))}, {"message", e.what()}};
  if (const auto* aborted = dynamic_cast<const InstanceAbortedError*>(&e)) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& ff : aborted->failures()) {
      factors.push_back({{"factor", ff.name},
                         {"kind", std::string(kind_name(ff.kind))},
                         {"message", ff.message}});
    }
    f["factors"] = factors;
  }
  return f;
}

}  // namespace

RunSummary run_command(const RunOptions& o, const OracleFactory& oracles) {
  const std::string started_at = utc_timestamp();
  data::TaskConfig config = data::TaskConfig::load(o.config);
  check_method(o, config);
  TaskSpec& task = config.task;
  if (o.temperature) task.temperature = *o.temperature;
  task.k = o.k;

  const data::Dataset full = load_dataset(o, config);
  data::Dataset selected = full;
  if (o.balanced_per_class) {
    Rng rng(o.sample_seed);
    selected = data::balanced_sample(full, *o.balanced_per_class, rng);
  }
  if (o.limit && selected.rows.size() > *o.limit) selected.rows.resize(*o.limit);

  auto bundle = oracles(config);

  nlohmann::json fingerprint_input = {
      {"config", config.fingerprint()},
      {"dataset", full.fingerprint},
      {"method", o.method},
      {"oracle", bundle->identity()},
      {"model", bundle->model_id()},
      {"seed", o.seed},
      {"k", o.k},
      {"temperature", task.temperature},
      {"shots", o.shots},
      {"icl", {o.icl_positive, o.icl_negative}},
      {"balanced_per_class", o.balanced_per_class ? nlohmann::json(*o.balanced_per_class) : nlohmann::json(nullptr)},
      {"sample_seed", o.sample_seed},
      {"limit", o.limit ? nlohmann::json(*o.limit) : nlohmann::json(nullptr)},
      {"keep_sampled_sets", o.keep_sampled_sets}};
  const std::string fingerprint = sha256_hex(fingerprint_input.dump());

  RunSummary summary;
  summary.run_dir = o.out_dir / (o.method + "-" + fingerprint.substr(0, 16));
  std::filesystem::create_directories(summary.run_dir);
  const auto predictions_path = summary.run_dir / "predictions.jsonl";

  std::map<std::string, std::string> done;
  for (const auto& [line_no, line] : read_jsonl_lines(predictions_path)) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("id")) {
      throw IngestionError(predictions_path.string() + ":" + std::to_string(line_no) +
                           ": malformed prediction record");
    }
    done[j.at("id").get<std::string>()] = line;
  }

  ClampCounter clamps;
  PrismOptions popts;
  popts.k = o.k;
  popts.seed = o.seed;
  popts.keep_sampled_sets = o.keep_sampled_sets;
  popts.clamps = &clamps;

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < selected.rows.size(); ++i) {
    if (!done.count(selected.rows[i].id)) todo.push_back(i);
  }

  const bool multiclass = !task.classes.empty();
  if (is_attribution_method(o.method) && !multiclass && !todo.empty()) {
    task.base_logit = data::resolve_base_logit(config, &bundle->evaluation());
  }
  const nlohmann::json stats_before = bundle->stats();

  auto predict = [&](const Instance& x) -> nlohmann::json {
    nlohmann::json rec = {{"id", x.id},
                          {"method", o.method},
                          {"label", x.label ? nlohmann::json(*x.label) : nlohmann::json(nullptr)}};
    if (o.method == "prism" && multiclass) {
      const auto r = multiclass_estimate(task, x, bundle->evaluation(), popts);
      rec["class_probabilities"] = r.distribution;
      rec["class_logits"] = r.class_logits;
      rec["predicted_class"] = task.classes.at(r.predicted);
      nlohmann::json per_class = nlohmann::json::array();
      for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        auto a = make_attribution(task, x, r.per_class[c], o.method + ":" + task.classes[c]);
        per_class.push_back(a.to_json());
      }
      rec["class_attributions"] = per_class;
      return rec;
    }
    if (is_attribution_method(o.method)) {
      const auto r = o.method == "prism" ? prism_estimate(task, x, bundle->evaluation(), popts)
                                         : tabular::tabular_prism(task, x, bundle->evaluation(), popts);
      const auto a = make_attribution(task, x, r, o.method);
      rec["score"] = r.probability;
      rec["base_logit"] = r.base_logit;
      rec["total_logit"] = r.total_logit;
      rec["attribution"] = a.to_json();
      return rec;
    }
    double score = 0.0;
    if (o.method == "nshot-level") {
      score = baselines::nshot_level(task, x, bundle->text(), o.shots);
    } else if (o.method == "nshot-score") {
      score = baselines::nshot_score(task, x, bundle->evaluation(), o.shots);
    } else if (o.method == "contrast") {
      score = baselines::contrast(task, x, bundle->text());
    } else {
      Rng rng(derive_seed(o.seed, x.id, "demonstrations"));
      const auto demos = baselines::select_demonstrations(full.rows, o.icl_positive,
                                                          o.icl_negative, rng, {x.id});
      score = baselines::icl(task, x, demos, bundle->evaluation(), derive_seed(o.seed, x.id));
    }
    rec["score"] = score;
    return rec;
  };

  std::vector<std::optional<std::string>> fresh(selected.rows.size());
  std::vector<std::optional<nlohmann::json>> failures(selected.rows.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed{0};
  std::atomic<bool> stop{false};
  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t t = next.fetch_add(1);
      if (t >= todo.size()) return;
      const std::size_t i = todo[t];
      const Instance& x = selected.rows[i];
      try {
        fresh[i] = predict(x).dump();
      } catch (const Error& e) {
        failures[i] = failure_record(x.id, e);
        if (failed.fetch_add(1) + 1 > o.max_failures) stop.store(true);
      }
    }
  };
  const int workers = std::min<int>(o.concurrency, static_cast<int>(std::max<std::size_t>(todo.size(), 1)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::string predictions;
  std::string failure_lines;
  for (std::size_t i = 0; i < selected.rows.size(); ++i) {
    const auto& id = selected.rows[i].id;
    if (auto it = done.find(id); it != done.end()) {
      predictions += it->second + "\n";
      ++summary.reused;
    } else if (fresh[i]) {
      predictions += *fresh[i] + "\n";
      ++summary.computed;
    } else if (failures[i]) {
      failure_lines += failures[i]->dump() + "\n";
      summary.failures.push_back(*failures[i]);
      ++summary.failed;
    }
  }
  write_file_atomic(predictions_path, predictions);
  write_file_atomic(summary.run_dir / "failures.jsonl", failure_lines);
  summary.instances = selected.rows.size();
  summary.budget_exceeded = summary.failed > o.max_failures;

  const nlohmann::json stats = bundle->stats();
  const auto delta = [&](const char* key) {
    return stats.value(key, std::uint64_t{0}) - stats_before.value(key, std::uint64_t{0});
  };
  nlohmann::json per_instance = nullptr;
  if (summary.computed > 0) {
    const double n = static_cast<double>(summary.computed);
    per_instance = {{"queries", static_cast<double>(delta("queries")) / n},
                    {"row_evaluations", static_cast<double>(delta("row_evaluations")) / n},
                    {"text_queries", static_cast<double>(delta("text_queries")) / n}};
  }
  summary.manifest = {
      {"fingerprint", fingerprint},
      {"method", o.method},
      {"task_id", task.id},
      {"config_fingerprint", config.fingerprint()},
      {"dataset", {{"source", full.source}, {"fingerprint", full.fingerprint}, {"rows", full.size()}}},
      {"model", bundle->model_id()},
      {"oracle", bundle->identity()},
      {"seed", o.seed},
      {"k", o.k},
      {"temperature", task.temperature},
      {"shots", o.shots},
      {"factor_count", task.factor_count()},
      {"base_logit", is_attribution_method(o.method) && !multiclass ? nlohmann::json(task.base_logit)
                                                                    : nlohmann::json(nullptr)},
      {"balanced_per_class", fingerprint_input["balanced_per_class"]},
      {"sample_seed", o.sample_seed},
      {"limit", fingerprint_input["limit"]},
      {"instances", summary.instances},
      {"completed", summary.computed + summary.reused},
      {"computed", summary.computed},
      {"reused", summary.reused},
      {"failed", summary.failed},
      {"max_failures", o.max_failures},
      {"concurrency", o.concurrency},
      {"oracle_stats", stats},
      {"queries_per_instance", per_instance},
      {"clamps", {{"count", clamps.count()}, {"epsilon", clamps.epsilon()}}},
      {"started_at", started_at},
      {"finished_at", utc_timestamp()}};
  write_file_atomic(summary.run_dir / "manifest.json", summary.manifest.dump(2) + "\n");
  return summary;
}

}  // namespace prism::cli

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

#include <CLI11.hpp>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "commands.h"
#include "prism/error.h"

namespace prism::cli {

std::string_view kind_name(Error::Kind kind) {
  switch (kind) {
    case Error::Kind::kInput: return "InputError";
    case Error::Kind::kSize: return "SizeError";
    case Error::Kind::kQuery: return "QueryError";
    case Error::Kind::kProtocol: return "ProtocolError";
    case Error::Kind::kParse: return "ParseError";
    case Error::Kind::kRange: return "RangeError";
    case Error::Kind::kTransport: return "TransportError";
    case Error::Kind::kMetric: return "MetricError";
    case Error::Kind::kConfig: return "ConfigError";
    case Error::Kind::kIngestion: return "IngestionError";
    case Error::Kind::kLookup: return "LookupError";
    case Error::Kind::kExtraction: return "ExtractionError";
  }
  return "Error";
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::kConfig:
    case Error::Kind::kInput:
    case Error::Kind::kIngestion:
    case Error::Kind::kLookup:
    case Error::Kind::kSize:
      return kExitConfig;
    case Error::Kind::kMetric:
      return kExitMetric;
    default:
      return kExitOracle;
  }
}

namespace {

void add_oracle_options(CLI::App& cmd, OracleOptions& o) {
  cmd.add_option("--oracle", o.kind, "synthetic, replay or chat")
      ->check(CLI::IsMember({"synthetic", "replay", "chat"}))
      ->capture_default_str();
  cmd.add_option("--synthetic-model", o.synthetic_model, "linear logit model JSON (synthetic)");
  cmd.add_option("--noise-sigma", o.noise_sigma, "logit noise per evaluated row (synthetic)")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--noise-seed", o.noise_seed, "noise stream seed (synthetic)");
  cmd.add_option("--transcript", o.transcript, "transcript to answer from (replay)");
  cmd.add_option("--record", o.record, "append every raw response to this transcript");
  cmd.add_option("--endpoint", o.endpoint, "chat-completions URL (chat)");
  cmd.add_option("--model", o.model, "model id; for replay, the id the transcript was recorded with")
      ->capture_default_str();
  cmd.add_option("--api-key-env", o.api_key_env, "environment variable holding the API key")
      ->capture_default_str();
  cmd.add_option("--cache", o.cache, "response cache file (chat)");
  cmd.add_flag("--no-cache", o.no_cache, "bypass the response cache for every query");
  cmd.add_option("--max-retries", o.max_retries, "retries per query (chat)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

std::string rule(char c = '-') { return std::string(60, c) + "\n"; }

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shapley-value attribution of language-model probability estimates", "prism"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "prism 0.1.0");

  OracleOptions oracle;
  RunOptions run;
  std::optional<std::size_t> balanced;
  std::optional<std::size_t> limit;
  std::optional<double> temperature;
  auto* run_cmd = app.add_subcommand("run", "score a dataset with one method");
  run_cmd->add_option("method", run.method, "prism, tabular-prism, nshot-level, nshot-score, contrast or icl")
      ->required()
      ->check(CLI::IsMember(run_methods()));
  run_cmd->add_option("--config", run.config, "task config JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--data", run.data, "dataset CSV or JSONL")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out_dir, "parent directory of run directories")->capture_default_str();
  run_cmd->add_option("--k", run.k, "sampled sets per factor")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "sampling seed")->capture_default_str();
  run_cmd->add_option("--temperature", temperature, "overrides the task temperature");
  run_cmd->add_option("--shots", run.shots, "repeats for n-shot methods")->capture_default_str();
  run_cmd->add_option("--balanced", balanced, "sample this many rows per class");
  run_cmd->add_option("--sample-seed", run.sample_seed, "seed of --balanced")->capture_default_str();
  run_cmd->add_option("--limit", limit, "keep the first N selected rows");
  run_cmd->add_option("--max-failures", run.max_failures, "aborted instances tolerated")->capture_default_str();
  run_cmd->add_option("--concurrency", run.concurrency, "parallel instances and in-flight requests")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--icl-positive", run.icl_positive, "positive demonstrations (icl)")->capture_default_str();
  run_cmd->add_option("--icl-negative", run.icl_negative, "negative demonstrations (icl)")->capture_default_str();
  run_cmd->add_flag("--keep-sampled-sets", run.keep_sampled_sets, "store sampled background sets");
  add_oracle_options(*run_cmd, oracle);

  MetricsOptions metrics;
  std::optional<double> eval_rate;
  std::optional<double> population_rate;
  auto* metrics_cmd = app.add_subcommand("metrics", "ranking and calibration metrics of predictions");
  metrics_cmd->add_option("predictions", metrics.predictions, "predictions.jsonl files or run directories")
      ->required();
  metrics_cmd->add_option("--labels", metrics.labels, "labels CSV (id,label) or JSONL");
  metrics_cmd->add_option("--out", metrics.out_dir, "output directory")->capture_default_str();
  metrics_cmd->add_option("--bins", metrics.bins, "reliability bins")->capture_default_str();
  metrics_cmd->add_option("--eval-rate", eval_rate, "positive rate of the evaluated sample");
  metrics_cmd->add_option("--population-rate", population_rate, "target population positive rate");
  metrics_cmd->add_option("--bootstrap", metrics.bootstrap, "bootstrap resamples")->capture_default_str();
  metrics_cmd->add_option("--seed", metrics.seed, "bootstrap seed")->capture_default_str();

  ExplainOptions explain;
  auto* explain_cmd = app.add_subcommand("explain", "print the attribution ledger of one instance");
  explain_cmd->add_option("--run", explain.run, "run directory or predictions file")->required();
  explain_cmd->add_option("--id", explain.id, "instance id")->required();
  explain_cmd->add_flag("--json", explain.json, "print the attribution as JSON");

  ExtractOptions extract;
  auto* extract_cmd = app.add_subcommand("extract", "extract factors from a text context and attribute");
  extract_cmd->add_option("--context", extract.context, "context text file")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--config", extract.config, "task config JSON")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--out", extract.out_dir, "output directory")->capture_default_str();
  extract_cmd->add_option("--repeats", extract.repeats, "independent extraction repeats")->capture_default_str();
  extract_cmd->add_option("--k", extract.k, "sampled sets per factor")->capture_default_str();
  extract_cmd->add_option("--seed", extract.seed, "sampling seed")->capture_default_str();
  extract_cmd->add_option("--aspects", extract.aspects, "fixed aspect list JSON");
  extract_cmd->add_flag("--permissive", extract.permissive, "keep aspects whose summary failed");
  OracleOptions extract_oracle;
  extract_oracle.kind = "replay";
  add_oracle_options(*extract_cmd, extract_oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      run.balanced_per_class = balanced;
      run.limit = limit;
      run.temperature = temperature;
      oracle.concurrency = run.concurrency;
      const auto s = run_command(run, make_oracle_factory(oracle));
      out << "run directory: " << s.run_dir.string() << "\n"
          << "instances: " << s.instances << " (computed " << s.computed << ", reused "
          << s.reused << ", failed " << s.failed << ")\n";
      if (s.budget_exceeded) {
        const nlohmann::json summary = {{"error", "failure budget exceeded"},
                                        {"failed", s.failed},
                                        {"max_failures", run.max_failures},
                                        {"run_dir", s.run_dir.string()},
                                        {"failures", s.failures}};
        err << summary.dump(2) << "\n";
        return kExitOracle;
      }
      return kExitOk;
    }
    if (*metrics_cmd) {
      metrics.eval_positive_rate = eval_rate;
      metrics.population_positive_rate = population_rate;
      out << metrics_command(metrics);
      return kExitOk;
    }
    if (*explain_cmd) {
      out << explain_command(explain);
      return kExitOk;
    }
    if (*extract_cmd) {
      const auto s = extract_command(extract, make_oracle_factory(extract_oracle));
      std::ostringstream table;
      table << std::fixed << std::setprecision(4);
      table << "repeat  aspects  total_logit  probability\n" << rule();
      for (const auto& r : s.at("per_repeat")) {
        table << std::setw(6) << r.at("repeat").get<int>() << "  " << std::setw(7)
              << r.at("aspect_count").get<std::size_t>() << "  " << std::setw(11)
              << r.at("total_logit").get<double>() << "  " << std::setw(11)
              << r.at("probability").get<double>() << "\n";
      }
      table << rule() << "mean probability: " << s.at("mean_probability").get<double>() << "\n";
      if (s.contains("spread")) {
        table << "probability sd:   " << s.at("spread").at("probability_sd").get<double>() << "\n";
      }
      out << table.str();
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << kind_name(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

}  // namespace prism::cli

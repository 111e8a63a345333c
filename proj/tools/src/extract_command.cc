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

#include <cmath>
#include <cstdio>
#include <map>

#include "commands.h"
#include "io_util.h"
#include "prism/attribution.h"
#include "prism/chat_oracle.h"
#include "prism/error.h"
#include "prism/extraction.h"
#include "prism/prism.h"

namespace prism::cli {
namespace {

struct ExtractionTask {
  data::TaskConfig config;
  std::optional<extraction::AspectSet> fixed_aspects;
  std::size_t min_aspects = 3;
  std::size_t max_aspects = 12;
};

// Task configs for unstructured contexts need no factor list; the schema is
// replaced by the extracted aspects.
ExtractionTask load_extraction_task(const ExtractOptions& o) {
  nlohmann::json j;
  try {
    j = read_json(o.config);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  if (!j.is_object()) throw ConfigError(o.config.string() + " must hold a JSON object");
  ExtractionTask t;
  try {
    if (!o.aspects.empty()) {
      t.fixed_aspects = extraction::AspectSet::from_json(read_json(o.aspects));
    } else if (j.contains("aspects")) {
      t.fixed_aspects = extraction::AspectSet::from_json(j.at("aspects"));
    }
  } catch (const ParseError& e) {
    throw ConfigError(std::string("invalid aspect list: ") + e.what());
  }
  t.min_aspects = j.value("min_aspects", std::size_t{3});
  t.max_aspects = j.value("max_aspects", std::size_t{12});
  if (t.min_aspects < 1 || t.min_aspects > t.max_aspects) {
    throw ConfigError("aspect bounds must satisfy 1 <= min_aspects <= max_aspects");
  }
  if (!j.contains("factors")) {
    nlohmann::json factors = nlohmann::json::array();
    if (t.fixed_aspects) {
      for (const auto& a : t.fixed_aspects->aspects) factors.push_back({{"name", a.name}, {"kind", "text"}});
    } else {
      factors.push_back({{"name", "context"}, {"kind", "text"}});
    }
    j["factors"] = factors;
  }
  j.erase("reference");
  t.config = data::TaskConfig::from_json(j, o.config.parent_path());
  if (t.config.base_logit.source == data::BaseLogitSource::kQuery) {
    throw ConfigError("extract needs a fixed base logit (probability, logit or population rate)");
  }
  return t;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string repeat_name(int r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "repeat-%02d", r);
  return buf;
}

}  // namespace

nlohmann::json extract_command(const ExtractOptions& o, const OracleFactory& oracles) {
  if (o.repeats < 1) throw ConfigError("--repeats must be >= 1");
  if (o.k < 1) throw ConfigError("--k must be >= 1");
  const std::string context = read_text_file(o.context);
  const ExtractionTask et = load_extraction_task(o);
  const TaskSpec& task = et.config.task;
  auto bundle = oracles(et.config);
  if (!bundle->has_text() || bundle->identity().value("oracle", "") == "synthetic") {
    throw ConfigError("extract needs a replay or chat oracle");
  }

  std::string task_description = task.description;
  if (!task_description.empty()) task_description += "\n";
  task_description += task.question;

  std::vector<double> probabilities;
  std::vector<double> totals;
  std::vector<double> counts;
  std::map<std::string, std::vector<double>> phis_by_aspect;
  nlohmann::json per_repeat = nlohmann::json::array();
  for (int r = 0; r < o.repeats; ++r) {
    extraction::ExtractionOptions eo;
    eo.min_aspects = et.min_aspects;
    eo.max_aspects = et.max_aspects;
    eo.permissive = o.permissive;
    eo.temperature = task.temperature;
    eo.nonce = static_cast<std::uint64_t>(r);
    eo.no_cache = r > 0;
    eo.fixed_aspects = et.fixed_aspects;
    const auto aspects =
        extraction::propose_aspects(task_description, context, task.prompts, bundle->text(), eo);
    const auto factors = extraction::extract_factor_summaries(task_description, context, aspects,
                                                              task.prompts, bundle->text(), eo);
    TaskSpec t = task;
    t.schema = extraction::extracted_schema(aspects);
    t.reference.reset();
    const Instance x = extraction::extracted_instance(repeat_name(r), factors);
    PrismOptions popts;
    popts.k = o.k;
    popts.seed = derive_seed(o.seed, static_cast<std::uint64_t>(r));
    const auto result = prism_estimate(t, x, bundle->evaluation(), popts);
    const auto attribution = make_attribution(t, x, result, "prism");

    const auto dir = o.out_dir / repeat_name(r);
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "aspects.json", aspects.to_json().dump(2) + "\n");
    extraction::save_factors(dir / "factors.json", factors);
    write_file_atomic(dir / "attribution.json", attribution.to_json().dump(2) + "\n");

    nlohmann::json phis = nlohmann::json::object();
    for (const auto& f : attribution.factors) {
      phis[f.factor.name] = f.phi;
      phis_by_aspect[f.factor.name].push_back(f.phi);
    }
    per_repeat.push_back({{"repeat", r},
                          {"aspect_count", aspects.size()},
                          {"aspects", aspects.names()},
                          {"base_logit", result.base_logit},
                          {"total_logit", result.total_logit},
                          {"probability", result.probability},
                          {"phis", phis}});
    probabilities.push_back(result.probability);
    totals.push_back(result.total_logit);
    counts.push_back(static_cast<double>(aspects.size()));
  }

  nlohmann::json aspect_stats = nlohmann::json::object();
  for (const auto& [name, values] : phis_by_aspect) {
    nlohmann::json s = {{"repeats", values.size()}, {"mean_phi", mean(values)}};
    if (values.size() > 1) s["sd_phi"] = sample_sd(values);
    aspect_stats[name] = s;
  }
  nlohmann::json summary = {{"task_id", task.id},
                            {"model", bundle->model_id()},
                            {"context_sha256", sha256_hex(context)},
                            {"repeats", o.repeats},
                            {"k", o.k},
                            {"seed", o.seed},
                            {"mean_probability", mean(probabilities)},
                            {"mean_total_logit", mean(totals)},
                            {"mean_aspect_count", mean(counts)},
                            {"aspects", aspect_stats},
                            {"per_repeat", per_repeat},
                            {"oracle_stats", bundle->stats()}};
  if (o.repeats > 1) {
    summary["spread"] = {{"probability_sd", sample_sd(probabilities)},
                         {"total_logit_sd", sample_sd(totals)},
                         {"aspect_count_sd", sample_sd(counts)}};
  }
  write_file_atomic(o.out_dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace prism::cli

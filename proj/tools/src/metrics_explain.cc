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
#include <cstdio>
#include <map>
#include <set>

#include "commands.h"
#include "io_util.h"
#include "prism/attribution.h"
#include "prism/csv.h"
#include "prism/error.h"
#include "prism/metrics.h"

namespace prism::cli {
namespace {

std::filesystem::path predictions_file(const std::filesystem::path& p) {
  return std::filesystem::is_directory(p) ? p / "predictions.jsonl" : p;
}

// A run directory stands for its predictions file; a directory of run
// directories stands for all of them, in name order.
std::vector<std::filesystem::path> expand_predictions(const std::vector<std::filesystem::path>& in) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : in) {
    if (!std::filesystem::is_directory(p) || std::filesystem::exists(p / "predictions.jsonl")) {
      out.push_back(predictions_file(p));
      continue;
    }
    std::vector<std::filesystem::path> runs;
    for (const auto& e : std::filesystem::directory_iterator(p)) {
      if (e.is_directory() && std::filesystem::exists(e.path() / "predictions.jsonl")) {
        runs.push_back(e.path() / "predictions.jsonl");
      }
    }
    if (runs.empty()) throw InputError("no predictions under " + p.string());
    std::sort(runs.begin(), runs.end());
    out.insert(out.end(), runs.begin(), runs.end());
  }
  return out;
}

std::vector<nlohmann::json> load_records(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("no such file " + path.string());
  std::vector<nlohmann::json> out;
  for (const auto& [n, line] : read_jsonl_lines(path)) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.at("id").is_string()) {
      throw InputError(path.string() + ":" + std::to_string(n) + ": malformed record");
    }
    out.push_back(std::move(j));
  }
  return out;
}

int parse_label(const nlohmann::json& v, const std::string& where) {
  int label = -1;
  if (v.is_number_integer()) label = v.get<int>();
  else if (v.is_boolean()) label = v.get<bool>() ? 1 : 0;
  else if (v.is_string() && (v == "0" || v == "1")) label = v == "1" ? 1 : 0;
  if (label != 0 && label != 1) throw InputError(where + ": label must be 0 or 1");
  return label;
}

std::map<std::string, int> load_labels(const std::filesystem::path& path) {
  std::map<std::string, int> labels;
  if (path.extension() == ".csv") {
    const auto table = csv::parse(read_text_file(path));
    if (table.empty()) throw InputError(path.string() + " is empty");
    const auto& h = table.front();
    const auto id_col = std::find(h.begin(), h.end(), "id");
    const auto label_col = std::find(h.begin(), h.end(), "label");
    if (id_col == h.end() || label_col == h.end()) {
      throw InputError(path.string() + ": labels CSV needs 'id' and 'label' columns");
    }
    const auto ic = static_cast<std::size_t>(id_col - h.begin());
    const auto lc = static_cast<std::size_t>(label_col - h.begin());
    for (std::size_t r = 1; r < table.size(); ++r) {
      const auto where = path.string() + ": row " + std::to_string(r);
      if (table[r].size() != h.size()) throw InputError(where + ": wrong field count");
      labels[table[r][ic]] = parse_label(nlohmann::json(table[r][lc]), where);
    }
    return labels;
  }
  for (const auto& rec : load_records(path)) {
    const auto id = rec.at("id").get<std::string>();
    if (!rec.contains("label")) throw InputError(path.string() + ": record '" + id + "' has no label");
    labels[id] = parse_label(rec.at("label"), path.string() + ": record '" + id + "'");
  }
  return labels;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

std::string metrics_command(const MetricsOptions& o) {
  if (o.predictions.empty()) throw InputError("no prediction files given");
  std::optional<std::map<std::string, int>> labels;
  if (!o.labels.empty()) labels = load_labels(o.labels);
  metrics::CalibrationConfig cfg;
  cfg.bins = o.bins;
  cfg.eval_positive_rate = o.eval_positive_rate;
  cfg.population_positive_rate = o.population_positive_rate;

  std::set<std::string> names;
  std::string comparison =
      "method,n,positives,auroc,auroc_se,auprc,auprc_se,best_f1,best_f1_se,threshold,ece\n";
  for (const auto& path : expand_predictions(o.predictions)) {
    const auto records = load_records(path);
    if (records.empty()) throw InputError(path.string() + " holds no predictions");
    std::string method = records.front().value("method", path.stem().string());
    for (int n = 2; names.count(method); ++n) method = records.front().value("method", path.stem().string()) + "-" + std::to_string(n);
    names.insert(method);

    std::vector<metrics::ScoredLabel> data;
    std::vector<std::string> orphans;
    for (const auto& rec : records) {
      const auto id = rec.at("id").get<std::string>();
      if (!rec.contains("score") || !rec.at("score").is_number()) {
        throw MetricError(path.string() + ": record '" + id + "' has no binary score");
      }
      metrics::ScoredLabel s;
      s.score = rec.at("score").get<double>();
      if (labels) {
        auto it = labels->find(id);
        if (it == labels->end()) {
          orphans.push_back(id);
          continue;
        }
        s.label = it->second;
      } else {
        if (!rec.contains("label") || rec.at("label").is_null()) {
          throw InputError(path.string() + ": record '" + id + "' has no label; pass --labels");
        }
        s.label = parse_label(rec.at("label"), path.string() + ": record '" + id + "'");
      }
      data.push_back(s);
    }
    if (!orphans.empty()) {
      std::string msg = path.string() + ": " + std::to_string(orphans.size()) +
                        " prediction id(s) have no label:";
      for (std::size_t i = 0; i < orphans.size() && i < 20; ++i) msg += " " + orphans[i];
      if (orphans.size() > 20) msg += " ...";
      throw InputError(msg);
    }

    const auto report = metrics::evaluate(method, data, cfg, o.bootstrap, o.seed);
    write_file_atomic(o.out_dir / (method + ".metrics.json"), report.to_json().dump(2) + "\n");
    write_file_atomic(o.out_dir / (method + ".reliability.csv"),
                      metrics::reliability_csv(report.reliability));
    comparison += method + "," + std::to_string(report.n) + "," + std::to_string(report.positives) +
                  "," + fmt(report.auroc) + "," + fmt(report.auroc_se) + "," + fmt(report.auprc) +
                  "," + fmt(report.auprc_se) + "," + fmt(report.best_f1.f1) + "," +
                  fmt(report.f1_se) + "," + fmt(report.best_f1.threshold) + "," +
                  fmt(report.reliability.ece) + "\n";
  }
  write_file_atomic(o.out_dir / "comparison.csv", comparison);
  return comparison;
}

std::string explain_command(const ExplainOptions& o) {
  const auto path = predictions_file(o.run);
  for (const auto& rec : load_records(path)) {
    if (rec.at("id").get<std::string>() != o.id) continue;
    if (!rec.contains("attribution")) {
      throw InputError("record '" + o.id + "' of method '" + rec.value("method", std::string("?")) +
                       "' has no attribution");
    }
    const auto a = AttributionResult::from_json(rec.at("attribution"));
    return o.json ? a.to_json().dump(2) + "\n" : a.ledger_text();
  }
  throw LookupError("no instance with id '" + o.id + "' in " + path.string());
}

}  // namespace prism::cli

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

#include "prism/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "prism/baselines.h"
#include "prism/csv.h"
#include "prism/error.h"
#include "prism/shapley.h"

namespace prism::data {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BaseLogitSource source_from_string(const std::string& s) {
  if (s == "probability") return BaseLogitSource::kFixedProbability;
  if (s == "logit") return BaseLogitSource::kFixedLogit;
  if (s == "population_rate") return BaseLogitSource::kPopulationRate;
  if (s == "query") return BaseLogitSource::kQuery;
  throw ConfigError("unknown base_logit source '" + s + "'");
}

FactorValue reference_value(const FactorSpec& spec, const nlohmann::json& v) {
  if (v.is_number()) {
    if (spec.kind == FactorKind::kNumeric) return make_numeric(v.get<double>(), spec.unit);
    return parse_factor_value(spec, format_number(v.get<double>()));
  }
  if (v.is_string()) return parse_factor_value(spec, v.get<std::string>());
  throw ConfigError("reference value for '" + spec.name + "' must be a number or string");
}

}  // namespace

FactorValue parse_factor_value(const FactorSpec& spec, std::string_view raw) {
  const std::string s = trim(raw);
  switch (spec.kind) {
    case FactorKind::kNumeric: {
      double v = 0.0;
      const char* first = s.data();
      const char* last = s.data() + s.size();
      if (!s.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (s.empty() || ec != std::errc() || ptr != last) {
        throw InputError("'" + s + "' is not a number");
      }
      return make_numeric(v, spec.unit);
    }
    case FactorKind::kCategorical:
      if (s.empty()) throw InputError("empty category");
      return make_categorical(s);
    case FactorKind::kText:
      return make_text(s);
  }
  throw InputError("unknown factor kind");
}

TaskConfig TaskConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  TaskConfig c;
  try {
    TaskSpec& t = c.task;
    t.id = j.at("id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    t.negated_question = j.value("negated_question", "");
    t.description = j.value("description", "");
    t.subject = j.value("subject", "case");
    std::vector<FactorSpec> specs;
    for (const auto& f : j.at("factors")) {
      specs.push_back({f.at("name").get<std::string>(),
                       factor_kind_from_string(f.value("kind", "categorical")),
                       f.value("unit", ""), f.value("description", "")});
    }
    if (specs.empty()) throw ConfigError("task '" + t.id + "' defines no factors");
    t.schema = FactorSchema(std::move(specs));

    c.rename = j.value("rename", std::map<std::string, std::string>{});
    c.value_map = j.value("value_map", std::map<std::string, std::map<std::string, std::string>>{});
    for (const auto& [name, map] : c.value_map) {
      if (!t.schema.index_of(name)) {
        throw ConfigError("value_map refers to unknown factor '" + name + "'");
      }
    }
    if (j.contains("na_values")) c.na_values = j.at("na_values").get<std::vector<std::string>>();
    c.drop_missing = j.value("drop_missing", true);
    c.label_column = j.value("label_column", "");
    c.positive_label = j.value("positive_label", "1");
    if (j.contains("negative_label")) c.negative_label = j.at("negative_label").get<std::string>();
    c.id_column = j.value("id_column", "");

    if (j.contains("reference")) {
      const auto& r = j.at("reference");
      ReferenceInstance ref;
      for (std::size_t i = 0; i < t.schema.size(); ++i) {
        const auto& spec = t.schema[i];
        if (!r.contains(spec.name)) {
          throw ConfigError("reference instance lacks factor '" + spec.name + "'");
        }
        ref.values.push_back(reference_value(spec, r.at(spec.name)));
      }
      for (const auto& [name, v] : r.items()) {
        if (!t.schema.index_of(name)) {
          throw ConfigError("reference names unknown factor '" + name + "'");
        }
      }
      t.reference = std::move(ref);
    }

    if (j.contains("base_logit")) {
      const auto& b = j.at("base_logit");
      c.base_logit.source = source_from_string(b.at("source").get<std::string>());
      c.base_logit.repeats = b.value("repeats", 5);
      if (c.base_logit.source != BaseLogitSource::kQuery) {
        c.base_logit.value = b.at("value").get<double>();
      }
      if (c.base_logit.repeats < 1) throw ConfigError("base_logit repeats must be >= 1");
      const bool is_rate = c.base_logit.source == BaseLogitSource::kFixedProbability ||
                           c.base_logit.source == BaseLogitSource::kPopulationRate;
      if (is_rate && !(c.base_logit.value > 0.0 && c.base_logit.value < 1.0)) {
        throw ConfigError("base_logit probability must lie in (0, 1)");
      }
    }
    if (c.base_logit.source == BaseLogitSource::kFixedLogit) {
      t.base_logit = c.base_logit.value;
    } else if (c.base_logit.source != BaseLogitSource::kQuery) {
      t.base_logit = logit(c.base_logit.value);
    }

    t.k = j.value("k", kDefaultSampleCount);
    if (t.k < 1) throw ConfigError("k must be >= 1");
    t.temperature = j.value("temperature", 1.0);
    t.table_row_limit = j.value("table_row_limit", std::size_t{20});
    if (t.table_row_limit < 2) throw ConfigError("table_row_limit must be >= 2");

    if (j.contains("prompts")) {
      for (const auto& [id, text] : j.at("prompts").items()) t.prompts.set(id, text.get<std::string>());
    }
    if (j.contains("prompt_files")) {
      for (const auto& [id, file] : j.at("prompt_files").items()) {
        t.prompts.set(id, read_file(base_dir / file.get<std::string>(), "prompt template"));
      }
    }

    t.classes = j.value("classes", std::vector<std::string>{});
    t.class_base_logits = j.value("class_base_logits", std::vector<double>{});
    if (t.classes.size() == 1) throw ConfigError("a multi-class task needs at least two classes");
    if (!t.class_base_logits.empty() && t.class_base_logits.size() != t.classes.size()) {
      throw ConfigError("class_base_logits must have one entry per class");
    }

    c.contrast_enabled = j.value("contrast", !t.negated_question.empty());
    if (c.contrast_enabled != !t.negated_question.empty()) {
      throw ConfigError("negated_question must be present exactly when contrast is enabled");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed task config: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(std::string("invalid task config: ") + e.what());
  }

  nlohmann::json canonical = j;
  canonical.erase("prompt_files");
  nlohmann::json prompts = nlohmann::json::object();
  for (auto id : PromptLibrary::ids()) prompts[std::string(id)] = c.task.prompts.get(id);
  canonical["prompts"] = prompts;
  c.fingerprint_ = sha256_hex(canonical.dump());
  const nlohmann::json pre = {
      {"factors", j.at("factors")}, {"rename", c.rename},
      {"value_map", c.value_map},   {"na_values", c.na_values},
      {"drop_missing", c.drop_missing}, {"label_column", c.label_column},
      {"positive_label", c.positive_label},
      {"negative_label", c.negative_label ? nlohmann::json(*c.negative_label) : nlohmann::json(nullptr)},
      {"id_column", c.id_column}, {"classes", c.task.classes}};
  c.preprocessing_fingerprint_ = sha256_hex(pre.dump());
  return c;
}

TaskConfig TaskConfig::load(const std::filesystem::path& path) {
  const std::string text = read_file(path, "task config");
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("task config " + path.string() + " is not valid JSON");
  return from_json(j, path.parent_path());
}

const Instance& Dataset::find(const std::string& id) const {
  for (const auto& r : rows) {
    if (r.id == id) return r;
  }
  throw LookupError("no instance with id '" + id + "'");
}

nlohmann::json instance_to_json(const Instance& x, const FactorSchema& schema) {
  schema.check_values(x.values);
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    values[schema[i].name] = nlohmann::ordered_json::parse(to_json(x.values[i]).dump());
  }
  nlohmann::ordered_json out;
  out["id"] = x.id;
  out["label"] = x.label ? nlohmann::ordered_json(*x.label) : nlohmann::ordered_json(nullptr);
  out["values"] = std::move(values);
  return nlohmann::json::parse(out.dump());
}

Instance instance_from_json(const nlohmann::json& j, const FactorSchema& schema) {
  Instance x;
  x.id = j.at("id").get<std::string>();
  if (j.contains("label") && !j.at("label").is_null()) x.label = j.at("label").get<int>();
  const auto& values = j.at("values");
  for (const auto& spec : schema.factors()) {
    x.values.push_back(factor_value_from_json(values.at(spec.name)));
  }
  schema.check_values(x.values);
  return x;
}

void Dataset::save_jsonl(const std::filesystem::path& path, const FactorSchema& schema) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write dataset " + path.string());
  nlohmann::ordered_json header;
  header["provenance"] = {{"source", source}, {"fingerprint", fingerprint}};
  out << header.dump() << "\n";
  for (const auto& r : rows) {
    // ordered dump keeps schema order of the values object
    nlohmann::ordered_json line;
    line["id"] = r.id;
    line["label"] = r.label ? nlohmann::ordered_json(*r.label) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json values = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      values[schema[i].name] = nlohmann::ordered_json::parse(to_json(r.values[i]).dump());
    }
    line["values"] = std::move(values);
    out << line.dump() << "\n";
  }
}

Dataset Dataset::load_jsonl(const std::filesystem::path& path, const FactorSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open dataset " + path.string());
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("provenance")) {
        d.source = j.at("provenance").value("source", "");
        d.fingerprint = j.at("provenance").value("fingerprint", "");
        continue;
      }
      d.rows.push_back(instance_from_json(j, schema));
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return d;
}

Dataset load_csv_text(std::string_view text, const TaskConfig& config,
                      const std::string& source) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  const std::vector<csv::Record> records = csv::parse(text);
  if (records.empty()) throw IngestionError(source + ": empty CSV");
  const csv::Record& raw_header = records.front();
  std::vector<std::string> header;
  for (const auto& h : raw_header) header.push_back(trim(h));
  for (const auto& [from, to] : config.rename) {
    if (std::find(header.begin(), header.end(), from) == header.end()) {
      throw IngestionError(source + ": renamed column '" + from + "' is not in the header");
    }
  }
  auto raw_index = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::string> renamed = header;
  for (auto& h : renamed) {
    if (auto it = config.rename.find(h); it != config.rename.end()) h = it->second;
  }
  const FactorSchema& schema = config.task.schema;
  std::vector<std::size_t> columns;
  for (const auto& spec : schema.factors()) {
    auto it = std::find(renamed.begin(), renamed.end(), spec.name);
    if (it == renamed.end()) {
      throw IngestionError(source + ": no column provides factor '" + spec.name + "'");
    }
    columns.push_back(static_cast<std::size_t>(it - renamed.begin()));
  }
  std::optional<std::size_t> label_col;
  if (!config.label_column.empty()) {
    label_col = raw_index(config.label_column);
    if (!label_col) throw IngestionError(source + ": label column '" + config.label_column + "' not found");
  }
  std::optional<std::size_t> id_col;
  if (!config.id_column.empty()) {
    id_col = raw_index(config.id_column);
    if (!id_col) throw IngestionError(source + ": id column '" + config.id_column + "' not found");
  }
  const std::set<std::string> na(config.na_values.begin(), config.na_values.end());

  Dataset d;
  d.source = source;
  d.fingerprint = sha256_hex(config.preprocessing_fingerprint() + ":" +
                             sha256_hex(std::string(text)));
  std::set<std::string> seen_ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const csv::Record& rec = records[r];
    if (rec.size() == 1 && trim(rec[0]).empty()) continue;
    const std::string where = source + ": row " + std::to_string(r);
    if (rec.size() != header.size()) {
      throw IngestionError(where + " has " + std::to_string(rec.size()) + " fields, header has " +
                           std::to_string(header.size()));
    }
    Instance x;
    x.id = id_col ? trim(rec[*id_col]) : "row-" + std::to_string(r);
    bool missing = false;
    for (std::size_t i = 0; i < schema.size() && !missing; ++i) {
      const std::string& column = header[columns[i]];
      std::string cell = trim(rec[columns[i]]);
      if (na.count(cell)) {
        if (config.drop_missing) {
          missing = true;
          break;
        }
        throw IngestionError(where + ", column '" + column + "': missing value");
      }
      if (auto vm = config.value_map.find(schema[i].name); vm != config.value_map.end()) {
        auto hit = vm->second.find(cell);
        if (hit == vm->second.end()) {
          throw IngestionError(where + ", column '" + column + "': unmapped value '" + cell + "'");
        }
        cell = hit->second;
      }
      try {
        x.values.push_back(parse_factor_value(schema[i], cell));
      } catch (const InputError& e) {
        throw IngestionError(where + ", column '" + column + "': " + e.what());
      }
    }
    if (missing) continue;
    if (label_col) {
      const std::string cell = trim(rec[*label_col]);
      if (na.count(cell)) {
        if (config.drop_missing) continue;
        throw IngestionError(where + ", column '" + config.label_column + "': missing label");
      }
      const auto& classes = config.task.classes;
      if (!classes.empty()) {
        auto it = std::find(classes.begin(), classes.end(), cell);
        if (it != classes.end()) {
          x.label = static_cast<int>(it - classes.begin());
        } else {
          int idx = -1;
          auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), idx);
          if (ec != std::errc() || p != cell.data() + cell.size() || idx < 0 ||
              static_cast<std::size_t>(idx) >= classes.size()) {
            throw IngestionError(where + ", column '" + config.label_column +
                                 "': unknown class '" + cell + "'");
          }
          x.label = idx;
        }
      } else if (cell == config.positive_label) {
        x.label = 1;
      } else if (!config.negative_label || cell == *config.negative_label) {
        x.label = 0;
      } else {
        throw IngestionError(where + ", column '" + config.label_column +
                             "': unexpected label '" + cell + "'");
      }
    }
    if (!seen_ids.insert(x.id).second) {
      throw IngestionError(where + ": duplicate id '" + x.id + "'");
    }
    d.rows.push_back(std::move(x));
  }
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const TaskConfig& config) {
  return load_csv_text(read_file(path, "CSV"), config, path.string());
}

Dataset balanced_sample(const Dataset& dataset, std::size_t n_per_class, Rng& rng) {
  std::vector<const Instance*> pos;
  std::vector<const Instance*> neg;
  for (const auto& r : dataset.rows) {
    if (!r.label) continue;
    if (*r.label == 1) pos.push_back(&r);
    else if (*r.label == 0) neg.push_back(&r);
    else throw InputError("balanced sampling needs binary labels");
  }
  if (pos.size() < n_per_class || neg.size() < n_per_class) {
    throw SizeError("need " + std::to_string(n_per_class) + " rows per class, have " +
                    std::to_string(pos.size()) + " positive and " + std::to_string(neg.size()) +
                    " negative");
  }
  rng.shuffle(std::span(pos));
  rng.shuffle(std::span(neg));
  std::vector<const Instance*> picked(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_per_class));
  picked.insert(picked.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_per_class));
  rng.shuffle(std::span(picked));
  Dataset out;
  out.source = dataset.source;
  out.fingerprint = dataset.fingerprint;
  for (const auto* r : picked) out.rows.push_back(*r);
  return out;
}

double resolve_base_logit(const TaskConfig& config, EvaluationOracle* oracle) {
  const BaseLogitConfig& b = config.base_logit;
  switch (b.source) {
    case BaseLogitSource::kFixedLogit:
      return b.value;
    case BaseLogitSource::kFixedProbability:
    case BaseLogitSource::kPopulationRate:
      return logit(b.value);
    case BaseLogitSource::kQuery: {
      if (!oracle) throw ConfigError("query-mode base logit needs an oracle");
      if (!config.task.reference) {
        throw ConfigError("query-mode base logit needs a reference instance");
      }
      Instance ref{"reference", config.task.reference->values, std::nullopt};
      return logit(baselines::nshot_score(config.task, ref, *oracle, b.repeats));
    }
  }
  throw ConfigError("unknown base logit source");
}

bool Bucket::contains(const FactorValue& v) const {
  if (!categories.empty()) {
    const std::string s = render_value(v);
    std::string raw = s;
    if (const auto* c = std::get_if<CategoricalValue>(&v)) raw = c->category;
    return std::find(categories.begin(), categories.end(), raw) != categories.end();
  }
  const auto* n = std::get_if<NumericValue>(&v);
  if (!n) return false;
  if (lower && n->value < *lower) return false;
  if (upper && n->value >= *upper) return false;
  return true;
}

void Bucketing::validate() const {
  if (buckets.empty()) throw ConfigError("bucketing of '" + factor + "' has no buckets");
  const bool categorical = !buckets.front().categories.empty();
  std::set<std::string> seen;
  std::vector<std::pair<double, double>> ranges;
  for (const auto& b : buckets) {
    if (b.categories.empty() == categorical) {
      throw ConfigError("bucketing of '" + factor + "' mixes numeric and categorical buckets");
    }
    if (categorical) {
      for (const auto& c : b.categories) {
        if (!seen.insert(c).second) {
          throw ConfigError("category '" + c + "' appears in two buckets of '" + factor + "'");
        }
      }
    } else {
      const double lo = b.lower.value_or(-INFINITY);
      const double hi = b.upper.value_or(INFINITY);
      if (!(lo < hi)) throw ConfigError("empty numeric bucket '" + b.label + "'");
      ranges.emplace_back(lo, hi);
    }
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first < ranges[i - 1].second) {
      throw ConfigError("numeric buckets of '" + factor + "' overlap");
    }
  }
}

std::size_t Bucketing::bucket_of(const FactorValue& v) const {
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets[i].contains(v)) return i;
  }
  throw ConfigError("value '" + render_value(v) + "' of '" + factor + "' falls in no bucket");
}

nlohmann::json InteractionGrid::to_json() const {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t a = 0; a < mean.size(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t b = 0; b < mean[a].size(); ++b) {
      row.push_back({{"mean", mean[a][b] ? nlohmann::json(*mean[a][b]) : nlohmann::json(nullptr)},
                     {"count", count[a][b]}});
    }
    cells.push_back(std::move(row));
  }
  return {{"target", target}, {"rows", row_labels}, {"columns", column_labels}, {"cells", cells}};
}

InteractionGrid interaction_aggregate(std::span<const AttributionResult> attributions,
                                      const std::string& target, const Bucketing& a,
                                      const Bucketing& b) {
  a.validate();
  b.validate();
  InteractionGrid g;
  g.target = target;
  for (const auto& x : a.buckets) g.row_labels.push_back(x.label);
  for (const auto& x : b.buckets) g.column_labels.push_back(x.label);
  std::vector<std::vector<double>> sum(a.buckets.size(), std::vector<double>(b.buckets.size(), 0.0));
  g.count.assign(a.buckets.size(), std::vector<std::size_t>(b.buckets.size(), 0));
  for (const auto& attr : attributions) {
    const FactorAttribution* t = attr.find(target);
    const FactorAttribution* fa = attr.find(a.factor);
    const FactorAttribution* fb = attr.find(b.factor);
    if (!t || !fa || !fb) {
      throw LookupError("attribution '" + attr.instance_id + "' lacks a factor named in the grid");
    }
    const std::size_t i = a.bucket_of(fa->value);
    const std::size_t j = b.bucket_of(fb->value);
    sum[i][j] += t->phi;
    ++g.count[i][j];
  }
  g.mean.assign(a.buckets.size(), std::vector<std::optional<double>>(b.buckets.size()));
  for (std::size_t i = 0; i < a.buckets.size(); ++i) {
    for (std::size_t j = 0; j < b.buckets.size(); ++j) {
      if (g.count[i][j] > 0) g.mean[i][j] = sum[i][j] / static_cast<double>(g.count[i][j]);
    }
  }
  return g;
}

}  // namespace prism::data

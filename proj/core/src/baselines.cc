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

#include "prism/baselines.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "prism/error.h"
#include "prism/prompts.h"

namespace prism::baselines {

const std::vector<LikelihoodLevel>& likelihood_levels() {
  static const std::vector<LikelihoodLevel> kLevels = {
      {"very unlikely", 0.05}, {"unlikely", 0.2},      {"somewhat unlikely", 0.35},
      {"neutral", 0.5},        {"somewhat likely", 0.65}, {"likely", 0.8},
      {"very likely", 0.95}};
  return kLevels;
}

namespace {

std::string normalize_label(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalpha(u)) {
      if (space && !out.empty()) out.push_back(' ');
      out.push_back(static_cast<char>(std::tolower(u)));
      space = false;
    } else if (std::isspace(u) || c == '_' || c == '-') {
      space = true;
    }
  }
  return out;
}

}  // namespace

double level_value(std::string_view label) {
  const std::string key = normalize_label(label);
  for (const auto& level : likelihood_levels()) {
    if (level.label == key) return level.value;
  }
  throw ParseError("unrecognized likelihood level '" + std::string(label) + "'",
                   std::string(label));
}

std::string parse_level_label(std::string_view raw_text) {
  std::string_view segment;
  if (auto line = answer_line(raw_text)) {
    segment = *line;
  } else {
    std::size_t end = raw_text.size();
    while (end > 0) {
      const std::size_t nl = raw_text.rfind('\n', end - 1);
      const std::size_t from = nl == std::string_view::npos ? 0 : nl + 1;
      segment = raw_text.substr(from, end - from);
      if (!normalize_label(segment).empty() || from == 0) break;
      end = nl;
    }
  }
  const std::string key = normalize_label(segment);
  for (const auto& level : likelihood_levels()) {
    if (level.label == key) return level.label;
  }
  throw ParseError("response names no likelihood level", std::string(raw_text));
}

std::string modal_label(const std::vector<std::string>& labels) {
  if (labels.empty()) throw InputError("no labels to aggregate");
  std::map<std::string, int> counts;
  for (const auto& l : labels) {
    level_value(l);
    ++counts[normalize_label(l)];
  }
  const LikelihoodLevel* best = nullptr;
  int best_count = 0;
  for (const auto& level : likelihood_levels()) {
    auto it = counts.find(level.label);
    if (it == counts.end()) continue;
    const bool better =
        !best || it->second > best_count ||
        (it->second == best_count &&
         (std::abs(level.value - 0.5) < std::abs(best->value - 0.5) ||
          (std::abs(level.value - 0.5) == std::abs(best->value - 0.5) &&
           level.value < best->value)));
    if (better) {
      best = &level;
      best_count = it->second;
    }
  }
  return best->label;
}

std::string nearest_level(double p) {
  const LikelihoodLevel* best = nullptr;
  for (const auto& level : likelihood_levels()) {
    if (!best || std::abs(level.value - p) < std::abs(best->value - p)) best = &level;
  }
  return best->label;
}

namespace {

TextQuery level_query(const TaskSpec& task, const Instance& x, bool negated) {
  TextQuery q;
  q.prompt = render_level_prompt(task, x.values, negated);
  q.temperature = task.temperature;
  q.rows = {PartialRow(x.values.begin(), x.values.end())};
  q.negated = negated;
  return q;
}

}  // namespace

double nshot_level(const TaskSpec& task, const Instance& x, TextOracle& oracle, int n) {
  if (n < 1) throw InputError("n must be >= 1");
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) {
    TextQuery q = level_query(task, x, false);
    q.no_cache = i > 0;
    q.nonce = static_cast<std::uint64_t>(i);
    labels.push_back(parse_level_label(oracle.complete(q).text));
  }
  return level_value(modal_label(labels));
}

OracleQuery score_query(const TaskSpec& task, const Instance& x) {
  OracleQuery q;
  q.kind = QueryKind::kSingle;
  q.rendered_prompt = render_score_prompt(task, x.values);
  q.rows = {PartialRow(x.values.begin(), x.values.end())};
  q.expected_outputs = 1;
  q.metadata = {task.id, x.id, std::nullopt, task.temperature};
  return q;
}

double nshot_score(const TaskSpec& task, const Instance& x, EvaluationOracle& oracle,
                   int n) {
  if (n < 1) throw InputError("n must be >= 1");
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    OracleQuery q = score_query(task, x);
    q.no_cache = i > 0;
    q.nonce = static_cast<std::uint64_t>(i);
    const double p = evaluate_checked(oracle, q).probabilities[0];
    if (!(p >= 0.0 && p <= 1.0)) throw RangeError("score answer outside [0, 1]");
    sum += p;
  }
  return sum / n;
}

double contrast_normalize(double p_pos, double p_neg) {
  if (!(p_pos >= 0.0) || !(p_neg >= 0.0) || !std::isfinite(p_pos + p_neg)) {
    throw RangeError("contrast answers must be non-negative and finite");
  }
  if (p_pos + p_neg == 0.0) throw InputError("degenerate contrast: both answers are zero");
  return p_pos / (p_pos + p_neg);
}

double contrast(const TaskSpec& task, const Instance& x, TextOracle& oracle) {
  const double p_pos = level_value(parse_level_label(oracle.complete(level_query(task, x, false)).text));
  const double p_neg = level_value(parse_level_label(oracle.complete(level_query(task, x, true)).text));
  return contrast_normalize(p_pos, p_neg);
}

std::vector<Demonstration> select_demonstrations(const std::vector<Instance>& pool,
                                                 std::size_t n_positive,
                                                 std::size_t n_negative, Rng& rng,
                                                 const std::vector<std::string>& exclude) {
  const std::set<std::string> skip(exclude.begin(), exclude.end());
  std::vector<const Instance*> pos;
  std::vector<const Instance*> neg;
  for (const auto& inst : pool) {
    if (!inst.label || skip.count(inst.id)) continue;
    (*inst.label == 1 ? pos : neg).push_back(&inst);
  }
  if (pos.size() < n_positive || neg.size() < n_negative) {
    throw SizeError("demonstration pool has " + std::to_string(pos.size()) +
                    " positive and " + std::to_string(neg.size()) +
                    " negative rows; need " + std::to_string(n_positive) + " and " +
                    std::to_string(n_negative));
  }
  rng.shuffle(std::span(pos));
  rng.shuffle(std::span(neg));
  std::vector<Demonstration> out;
  for (std::size_t i = 0; i < n_positive; ++i) out.push_back({pos[i]->id, pos[i]->values, true});
  for (std::size_t i = 0; i < n_negative; ++i) out.push_back({neg[i]->id, neg[i]->values, false});
  return out;
}

std::string icl_prompt(const TaskSpec& task, const Instance& x,
                       std::vector<Demonstration> demos, std::uint64_t seed) {
  Rng rng(derive_seed(seed, x.id, "icl"));
  rng.shuffle(std::span(demos));
  std::vector<RenderedDemonstration> rendered;
  for (auto& d : demos) rendered.push_back({std::move(d.values), d.positive});
  return render_icl_prompt(task, rendered, x.values);
}

double icl(const TaskSpec& task, const Instance& x, const std::vector<Demonstration>& demos,
           EvaluationOracle& oracle, std::uint64_t seed) {
  OracleQuery q = score_query(task, x);
  q.rendered_prompt = icl_prompt(task, x, demos, seed);
  const double p = evaluate_checked(oracle, q).probabilities[0];
  if (!(p >= 0.0 && p <= 1.0)) throw RangeError("score answer outside [0, 1]");
  return p;
}

TextResponse LevelAdapter::complete(const TextQuery& query) {
  if (query.rows.empty()) throw InputError("level adapter needs a row payload");
  OracleQuery q;
  q.kind = QueryKind::kSingle;
  q.rendered_prompt = query.prompt;
  q.rows = {query.rows.front()};
  q.expected_outputs = 1;
  q.metadata.temperature = query.temperature;
  q.no_cache = query.no_cache;
  q.nonce = query.nonce;
  OracleResponse r = evaluate_checked(inner_, q);
  const double p = query.negated ? 1.0 - r.probabilities[0] : r.probabilities[0];
  TextResponse out;
  out.text = "Answer: " + nearest_level(p);
  out.cache_hit = r.cache_hit;
  out.attempts = r.attempts;
  return out;
}

}  // namespace prism::baselines

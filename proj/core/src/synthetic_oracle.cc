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

#include "prism/synthetic_oracle.h"

#include <utility>

#include "prism/error.h"

namespace prism {

FactorEncoder numeric_encoder(double center) {
  return [center](const FactorValue& v) {
    if (const auto* n = std::get_if<NumericValue>(&v)) return n->value - center;
    return 0.0;
  };
}

FactorEncoder threshold_encoder(double threshold) {
  return [threshold](const FactorValue& v) {
    if (const auto* n = std::get_if<NumericValue>(&v)) {
      return n->value >= threshold ? 1.0 : 0.0;
    }
    return 0.0;
  };
}

FactorEncoder category_encoder(std::map<std::string, double> codes) {
  return [codes = std::move(codes)](const FactorValue& v) {
    std::string key;
    if (const auto* c = std::get_if<CategoricalValue>(&v)) {
      key = c->category;
    } else if (const auto* t = std::get_if<TextValue>(&v)) {
      key = t->text;
    } else {
      key = render_value(v);
    }
    auto it = codes.find(key);
    return it == codes.end() ? 0.0 : it->second;
  };
}

LinearLogitModel::LinearLogitModel(double bias, std::vector<double> weights,
                                   std::vector<FactorEncoder> encoders,
                                   std::vector<Interaction> interactions)
    : bias_(bias),
      weights_(std::move(weights)),
      encoders_(std::move(encoders)),
      interactions_(std::move(interactions)) {
  if (weights_.size() != encoders_.size()) {
    throw InputError("linear model needs one encoder per weight");
  }
  for (const auto& it : interactions_) {
    if (it.a >= weights_.size() || it.b >= weights_.size() || it.a == it.b) {
      throw InputError("interaction refers to an invalid factor pair");
    }
  }
}

LinearLogitModel LinearLogitModel::from_json(const nlohmann::json& j,
                                             const FactorSchema& schema) {
  const std::size_t m = schema.size();
  std::vector<double> weights(m, 0.0);
  std::vector<FactorEncoder> encoders(m, numeric_encoder());
  auto index = [&schema](const std::string& name) {
    auto idx = schema.index_of(name);
    if (!idx) throw ConfigError("synthetic model refers to unknown factor '" + name + "'");
    return *idx;
  };
  if (j.contains("factors")) {
    for (const auto& [name, spec] : j.at("factors").items()) {
      const std::size_t i = index(name);
      if (spec.contains("categories")) {
        weights[i] = spec.value("weight", 1.0);
        encoders[i] = category_encoder(spec.at("categories").get<std::map<std::string, double>>());
      } else if (spec.contains("threshold")) {
        weights[i] = spec.value("weight", 1.0);
        encoders[i] = threshold_encoder(spec.at("threshold").get<double>());
      } else {
        weights[i] = spec.value("weight", 0.0);
        encoders[i] = numeric_encoder(spec.value("center", 0.0));
      }
    }
  }
  std::vector<Interaction> interactions;
  if (j.contains("interactions")) {
    for (const auto& spec : j.at("interactions")) {
      interactions.push_back({index(spec.at("a").get<std::string>()),
                              index(spec.at("b").get<std::string>()),
                              spec.at("coefficient").get<double>()});
    }
  }
  return LinearLogitModel(j.value("bias", 0.0), std::move(weights), std::move(encoders),
                          std::move(interactions));
}

double LinearLogitModel::operator()(const PartialRow& row) const {
  if (row.size() != weights_.size()) {
    throw InputError("row has " + std::to_string(row.size()) + " factors, model expects " +
                     std::to_string(weights_.size()));
  }
  std::vector<double> enc(row.size(), 0.0);
  double z = bias_;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (!row[j]) continue;
    enc[j] = encoders_[j](*row[j]);
    z += weights_[j] * enc[j];
  }
  for (const auto& it : interactions_) z += it.coefficient * enc[it.a] * enc[it.b];
  return z;
}

double LinearLogitModel::logit_of(const std::vector<FactorValue>& values) const {
  PartialRow row(values.begin(), values.end());
  return (*this)(row);
}

DeterministicOracle::DeterministicOracle(std::string name, RowModel model)
    : name_(std::move(name)), model_(std::move(model)) {}

DeterministicOracle::DeterministicOracle(std::string name, ClassRowModel model)
    : name_(std::move(name)), class_model_(std::move(model)) {}

OracleResponse DeterministicOracle::evaluate(const OracleQuery& query) {
  if (query.rows.empty()) {
    throw InputError("deterministic oracle '" + name_ + "' needs a row payload");
  }
  OracleResponse response;
  if (query.kind == QueryKind::kPerClass) {
    if (!class_model_) throw ProtocolError("oracle '" + name_ + "' has no per-class model");
    for (const auto& row : query.rows) {
      const std::vector<double> logits = class_model_(row);
      if (logits.size() != query.num_classes) {
        throw ProtocolError("per-class model produced " + std::to_string(logits.size()) +
                            " classes, query expects " +
                            std::to_string(query.num_classes));
      }
      for (double z : logits) response.probabilities.push_back(sigmoid(z));
    }
  } else {
    if (!model_) throw ProtocolError("oracle '" + name_ + "' has no binary model");
    for (const auto& row : query.rows) response.probabilities.push_back(sigmoid(model_(row)));
  }
  response.raw_text = format_answer(response.probabilities);
  return response;
}

NoisyOracle::NoisyOracle(std::string name, RowModel model, double sigma,
                         std::uint64_t seed)
    : name_(std::move(name)), model_(std::move(model)), sigma_(sigma), rng_(seed) {}

OracleResponse NoisyOracle::evaluate(const OracleQuery& query) {
  if (query.rows.empty()) {
    throw InputError("noisy oracle '" + name_ + "' needs a row payload");
  }
  OracleResponse response;
  {
    std::lock_guard lock(mu_);
    for (const auto& row : query.rows) {
      response.probabilities.push_back(sigmoid(model_(row) + rng_.normal(0.0, sigma_)));
    }
  }
  response.raw_text = format_answer(response.probabilities);
  return response;
}

ScriptedOracle::ScriptedOracle(std::string name, std::vector<std::string> replies)
    : name_(std::move(name)), replies_(std::move(replies)) {
  if (replies_.empty()) throw InputError("scripted oracle needs at least one reply");
}

std::string ScriptedOracle::next_reply(std::string prompt) {
  std::lock_guard lock(mu_);
  prompts_.push_back(std::move(prompt));
  const std::size_t i = std::min(cursor_, replies_.size() - 1);
  ++cursor_;
  return replies_[i];
}

OracleResponse ScriptedOracle::evaluate(const OracleQuery& query) {
  OracleResponse response;
  response.raw_text = next_reply(query.rendered_prompt);
  response.probabilities = parse_probabilities(response.raw_text, query.expected_outputs);
  return response;
}

TextResponse ScriptedOracle::complete(const TextQuery& query) {
  TextResponse response;
  response.text = next_reply(query.prompt);
  return response;
}

std::vector<std::string> ScriptedOracle::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

}  // namespace prism

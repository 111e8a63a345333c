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

#include "prism/factor.h"

#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "prism/error.h"

namespace prism {

std::string_view to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::kNumeric:
      return "numeric";
    case FactorKind::kCategorical:
      return "categorical";
    case FactorKind::kText:
      return "text";
  }
  return "categorical";
}

FactorKind factor_kind_from_string(std::string_view s) {
  if (s == "numeric") return FactorKind::kNumeric;
  if (s == "categorical") return FactorKind::kCategorical;
  if (s == "text") return FactorKind::kText;
  throw ConfigError("unknown factor kind '" + std::string(s) + "'");
}

FactorValue make_numeric(double value, std::string unit) {
  if (!std::isfinite(value)) {
    throw InputError("numeric factor value must be finite");
  }
  return NumericValue{value, std::move(unit)};
}

FactorValue make_categorical(std::string category) {
  return CategoricalValue{std::move(category)};
}

FactorValue make_text(std::string text) {
  if (text.empty()) throw InputError("text factor value must be non-empty");
  return TextValue{std::move(text)};
}

FactorKind kind_of(const FactorValue& value) {
  switch (value.index()) {
    case 0:
      return FactorKind::kNumeric;
    case 1:
      return FactorKind::kCategorical;
    default:
      return FactorKind::kText;
  }
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string render_value(const FactorValue& value) {
  struct Visitor {
    std::string operator()(const NumericValue& v) const {
      std::string out = format_number(v.value);
      if (!v.unit.empty()) out += " " + v.unit;
      return out;
    }
    std::string operator()(const CategoricalValue& v) const { return v.category; }
    std::string operator()(const TextValue& v) const { return v.text; }
  };
  return std::visit(Visitor{}, value);
}

nlohmann::json to_json(const FactorValue& value) {
  struct Visitor {
    nlohmann::json operator()(const NumericValue& v) const {
      nlohmann::json j = {{"kind", "numeric"}, {"value", v.value}};
      if (!v.unit.empty()) j["unit"] = v.unit;
      return j;
    }
    nlohmann::json operator()(const CategoricalValue& v) const {
      return {{"kind", "categorical"}, {"value", v.category}};
    }
    nlohmann::json operator()(const TextValue& v) const {
      return {{"kind", "text"}, {"value", v.text}};
    }
  };
  return std::visit(Visitor{}, value);
}

FactorValue factor_value_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("value")) {
    throw InputError("factor value JSON needs 'kind' and 'value'");
  }
  switch (factor_kind_from_string(j.at("kind").get<std::string>())) {
    case FactorKind::kNumeric:
      return make_numeric(j.at("value").get<double>(), j.value("unit", ""));
    case FactorKind::kCategorical:
      return make_categorical(j.at("value").get<std::string>());
    case FactorKind::kText:
      return make_text(j.at("value").get<std::string>());
  }
  throw InputError("unreachable factor kind");
}

FactorSchema::FactorSchema(std::vector<FactorSpec> factors)
    : factors_(std::move(factors)) {
  std::set<std::string> seen;
  for (const auto& f : factors_) {
    if (f.name.empty()) throw ConfigError("factor names must be non-empty");
    if (!seen.insert(f.name).second) {
      throw ConfigError("duplicate factor name '" + f.name + "'");
    }
  }
}

FactorId FactorSchema::id(std::size_t i) const {
  if (i >= factors_.size()) {
    throw InputError("factor index " + std::to_string(i) + " out of range");
  }
  return FactorId{i, factors_[i].name};
}

std::optional<std::size_t> FactorSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> FactorSchema::names() const {
  std::vector<std::string> out;
  out.reserve(factors_.size());
  for (const auto& f : factors_) out.push_back(f.name);
  return out;
}

void FactorSchema::check_values(const std::vector<FactorValue>& values) const {
  if (values.size() != factors_.size()) {
    throw InputError("instance has " + std::to_string(values.size()) +
                     " values, schema has " + std::to_string(factors_.size()) +
                     " factors");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (kind_of(values[i]) != factors_[i].kind) {
      throw InputError("factor '" + factors_[i].name + "' expects a " +
                       std::string(to_string(factors_[i].kind)) + " value, got " +
                       std::string(to_string(kind_of(values[i]))));
    }
  }
}

}  // namespace prism

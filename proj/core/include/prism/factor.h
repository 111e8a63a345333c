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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace prism {

struct FactorId {
  std::size_t index = 0;
  std::string name;

  friend bool operator==(const FactorId&, const FactorId&) = default;
};

enum class FactorKind { kNumeric, kCategorical, kText };

std::string_view to_string(FactorKind kind);
FactorKind factor_kind_from_string(std::string_view s);

struct NumericValue {
  double value = 0.0;
  std::string unit;

  friend bool operator==(const NumericValue&, const NumericValue&) = default;
};

struct CategoricalValue {
  std::string category;

  friend bool operator==(const CategoricalValue&, const CategoricalValue&) = default;
};

struct TextValue {
  std::string text;

  friend bool operator==(const TextValue&, const TextValue&) = default;
};

// A single factor's value. Numeric values must be finite and text values
// non-empty; make_* helpers enforce both.
using FactorValue = std::variant<NumericValue, CategoricalValue, TextValue>;

FactorValue make_numeric(double value, std::string unit = {});
FactorValue make_categorical(std::string category);
FactorValue make_text(std::string text);

FactorKind kind_of(const FactorValue& value);

// Trailing-zero-free decimal with at most four fractional digits, so that
// prompt bytes are stable for equal inputs. -0 renders as "0".
std::string format_number(double value);

// Human-readable rendering used in prompts and tables.
std::string render_value(const FactorValue& value);

nlohmann::json to_json(const FactorValue& value);
FactorValue factor_value_from_json(const nlohmann::json& j);

struct FactorSpec {
  std::string name;
  FactorKind kind = FactorKind::kCategorical;
  std::string unit;
  std::string description;
};

// Ordered factor schema. Indices are dense and names unique.
class FactorSchema {
 public:
  FactorSchema() = default;
  explicit FactorSchema(std::vector<FactorSpec> factors);

  std::size_t size() const { return factors_.size(); }
  bool empty() const { return factors_.empty(); }
  const FactorSpec& operator[](std::size_t i) const { return factors_[i]; }
  const std::vector<FactorSpec>& factors() const { return factors_; }

  FactorId id(std::size_t i) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;

  // Throws InputError when a value's kind disagrees with the schema.
  void check_values(const std::vector<FactorValue>& values) const;

 private:
  std::vector<FactorSpec> factors_;
};

struct Instance {
  std::string id;
  std::vector<FactorValue> values;
  // 0/1 for binary tasks, class index for multi-class tasks.
  std::optional<int> label;

  std::size_t size() const { return values.size(); }
};

// A partially revealed instance: absent factors are std::nullopt.
using PartialRow = std::vector<std::optional<FactorValue>>;

}  // namespace prism

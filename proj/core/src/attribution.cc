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

#include "prism/attribution.h"

#include <algorithm>
#include <array>
#include <cstdio>

#include "prism/error.h"

namespace prism {

double AttributionResult::phi_sum() const {
  double sum = 0.0;
  for (const auto& f : factors) sum += f.phi;
  return sum;
}

const FactorAttribution* AttributionResult::find(std::string_view factor_name) const {
  for (const auto& f : factors) {
    if (f.factor.name == factor_name) return &f;
  }
  return nullptr;
}

nlohmann::json AttributionResult::to_json() const {
  nlohmann::json fs = nlohmann::json::array();
  for (const auto& f : factors) {
    nlohmann::json jf = {{"index", f.factor.index},
                         {"name", f.factor.name},
                         {"value", prism::to_json(f.value)},
                         {"phi", f.phi},
                         {"k_samples", f.k_samples}};
    jf["reference_value"] =
        f.reference_value ? prism::to_json(*f.reference_value) : nlohmann::json(nullptr);
    jf["std_error"] = f.std_error ? nlohmann::json(*f.std_error) : nlohmann::json(nullptr);
    if (!f.sampled_sets.empty()) jf["sampled_sets"] = f.sampled_sets;
    fs.push_back(std::move(jf));
  }
  return {{"instance_id", instance_id},
          {"method", method},
          {"label", label ? nlohmann::json(*label) : nlohmann::json(nullptr)},
          {"factors", std::move(fs)},
          {"base_logit", base_logit},
          {"total_logit", total_logit},
          {"probability", probability}};
}

AttributionResult AttributionResult::from_json(const nlohmann::json& j) {
  try {
    AttributionResult a;
    a.instance_id = j.at("instance_id").get<std::string>();
    a.method = j.value("method", "");
    if (j.contains("label") && !j.at("label").is_null()) a.label = j.at("label").get<int>();
    for (const auto& jf : j.at("factors")) {
      FactorAttribution f;
      f.factor = {jf.at("index").get<std::size_t>(), jf.at("name").get<std::string>()};
      f.value = factor_value_from_json(jf.at("value"));
      if (jf.contains("reference_value") && !jf.at("reference_value").is_null()) {
        f.reference_value = factor_value_from_json(jf.at("reference_value"));
      }
      f.phi = jf.at("phi").get<double>();
      f.k_samples = jf.value("k_samples", 0);
      if (jf.contains("std_error") && !jf.at("std_error").is_null()) {
        f.std_error = jf.at("std_error").get<double>();
      }
      if (jf.contains("sampled_sets")) {
        f.sampled_sets = jf.at("sampled_sets").get<std::vector<std::vector<std::size_t>>>();
      }
      a.factors.push_back(std::move(f));
    }
    a.base_logit = j.at("base_logit").get<double>();
    a.total_logit = j.at("total_logit").get<double>();
    a.probability = j.at("probability").get<double>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed attribution record: ") + e.what());
  }
}

std::string AttributionResult::ledger_text() const {
  std::vector<std::array<std::string, 4>> rows = {{"Factor", "Value", "Reference", "Phi"}};
  char buf[64];
  for (const auto& f : factors) {
    std::snprintf(buf, sizeof(buf), "%.3f", f.phi);
    rows.push_back({f.factor.name, render_value(f.value),
                    f.reference_value ? render_value(*f.reference_value) : "-", buf});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out = "Instance " + instance_id + " (" + method + ")\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < 4; ++c) {
      std::string cell = r[c];
      if (c == 3) cell.insert(0, width[c] - cell.size(), ' ');
      else cell.append(width[c] - cell.size(), ' ');
      out += cell;
      out += c == 3 ? "\n" : "  ";
    }
  }
  auto line = [&out, &buf](const char* label, const char* fmt, double v) {
    std::snprintf(buf, sizeof(buf), fmt, v);
    out += label;
    out += buf;
    out += "\n";
  };
  line("Base logit:      ", "%.4f", base_logit);
  line("Sum of phi:      ", "%.3f", phi_sum());
  line("Total logit:     ", "%.3f", total_logit);
  line("Predicted prob:  ", "%.3f", probability);
  return out;
}

AttributionResult make_attribution(const TaskSpec& task, const Instance& x,
                                   const ReconstructionResult& result, std::string method) {
  AttributionResult a;
  a.instance_id = x.id;
  a.method = std::move(method);
  a.label = x.label;
  for (const auto& c : result.contributions) {
    FactorAttribution f;
    f.factor = c.factor;
    f.value = x.values.at(c.factor.index);
    if (task.reference) f.reference_value = task.reference->values.at(c.factor.index);
    f.phi = c.phi;
    f.k_samples = c.k_samples;
    f.std_error = c.std_error;
    for (const auto& s : c.sampled_sets) f.sampled_sets.push_back(s.members());
    a.factors.push_back(std::move(f));
  }
  a.base_logit = result.base_logit;
  a.total_logit = result.total_logit;
  a.probability = result.probability;
  return a;
}

}  // namespace prism

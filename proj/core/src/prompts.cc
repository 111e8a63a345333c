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

#include "prism/prompts.h"

#include <cctype>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "prism/baselines.h"
#include "prism/error.h"

namespace prism {
namespace {

constexpr std::string_view kComparativeTemplate = R"({{description}}

Question: {{question}}

Below are two descriptions of a {{subject}}. They are identical except that Case A reveals one additional piece of information. Judge each case only from the information listed and do not assume anything about facts that are not mentioned.

Case A:
{{case_a}}

Case B:
{{case_b}}

Estimate the probability for each case, paying close attention to how the extra information in Case A changes the likelihood relative to Case B.
Format guideline: finish your reply with one final line of the form
Answer: [probability for Case A, probability for Case B]
where each probability is a decimal number between 0 and 1.
)";

constexpr std::string_view kPerClassTemplate = R"({{description}}

Question: {{question}}
Possible classes, in order: {{classes}}

Below are two descriptions of a {{subject}}. They are identical except that Case A reveals one additional piece of information. Judge each case only from the information listed.

Case A:
{{case_a}}

Case B:
{{case_b}}

For each case, estimate the probability that it belongs to each class.
Format guideline: finish your reply with one final line of the form
Answer: [Case A probabilities in class order, then Case B probabilities in class order]
containing {{output_count}} decimal numbers between 0 and 1.
)";

constexpr std::string_view kTableTemplate = R"({{description}}

Question: {{question}}

The Markdown table below contains {{row_count}} records, one {{subject}} per row, arranged as {{pair_count}} pairs of adjacent rows. In each pair the first row is a target case and the second row is its matched baseline case; the two rows of a pair differ in a single column. Evaluate every row on its own and estimate the probability for each record.

{{table}}

Format guideline: finish your reply with one final line of the form
Answer: [p1, p2, ..., p{{row_count}}]
with exactly one probability between 0 and 1 per table row, in row order (p1 is the first data row).
)";

constexpr std::string_view kScoreTemplate = R"({{description}}

{{subject_title}} information: {{instance_json}}

Question: {{question}}
Give your estimate as a probability between 0 and 1.
Format guideline: finish your reply with one final line of the form
Answer: [probability]
)";

constexpr std::string_view kLevelTemplate = R"({{description}}

{{subject_title}} information: {{instance_json}}

Question: {{question}}
Choose exactly one of the following options: {{levels}}.
Format guideline: finish your reply with one final line of the form
Answer: <option>
)";

constexpr std::string_view kIclTemplate = R"({{description}}

Here are {{demo_count}} labeled examples with their observed outcomes:

{{demonstrations}}

Now consider a new {{subject}}.
{{subject_title}} information: {{instance_json}}

Question: {{question}}
Give your estimate as a probability between 0 and 1.
Format guideline: finish your reply with one final line of the form
Answer: [probability]
)";

constexpr std::string_view kProposeAspectsTemplate = R"(Task: {{task}}

Context:
{{context}}

Propose the minimal set of aspects of this context that are required to complete the task. The aspects must be non-overlapping (no piece of information belongs to two aspects) and complete (together they cover all information relevant to the task). Use between {{min_aspects}} and {{max_aspects}} aspects.
Format guideline: reply with a JSON array of objects, each with a "name" and a "description" field, and nothing else.
)";

constexpr std::string_view kSummarizeAspectTemplate = R"(Task: {{task}}

Context:
{{context}}

Aspect: {{aspect}}
Aspect description: {{aspect_description}}

Summarize what the context says about this aspect that is relevant to the task. Keep only information about this aspect. If the context contains nothing about it, use the summary NO INFORMATION.
Format guideline: reply with a JSON object {"summary": "...", "spans": [[start, end], ...]} where spans are optional character offsets into the context, and nothing else.
)";

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::map<std::string, std::string> base_vars(const TaskSpec& task) {
  return {{"description", task.description},
          {"question", task.question},
          {"subject", task.subject},
          {"subject_title", capitalize(task.subject)}};
}

// Drops the blank lines a missing description leaves at the top.
std::string finish(std::string text) {
  const auto first = text.find_first_not_of(" \n\r\t");
  return first == std::string::npos ? std::string() : text.substr(first);
}

}  // namespace

const std::vector<std::string_view>& PromptLibrary::ids() {
  static const std::vector<std::string_view> kIds = {
      kComparative, kTable,          kScore,          kLevel,
      kIcl,         kPerClass,       kProposeAspects, kSummarizeAspect};
  return kIds;
}

std::string_view PromptLibrary::builtin(std::string_view id) {
  if (id == kComparative) return kComparativeTemplate;
  if (id == kTable) return kTableTemplate;
  if (id == kScore) return kScoreTemplate;
  if (id == kLevel) return kLevelTemplate;
  if (id == kIcl) return kIclTemplate;
  if (id == kPerClass) return kPerClassTemplate;
  if (id == kProposeAspects) return kProposeAspectsTemplate;
  if (id == kSummarizeAspect) return kSummarizeAspectTemplate;
  throw ConfigError("unknown prompt template id '" + std::string(id) + "'");
}

void PromptLibrary::set(std::string_view id, std::string text) {
  builtin(id);  // validates the id
  overrides_[std::string(id)] = std::move(text);
}

const std::string& PromptLibrary::get(std::string_view id) const {
  if (auto it = overrides_.find(id); it != overrides_.end()) return it->second;
  static const std::map<std::string, std::string, std::less<>> kBuiltins = [] {
    std::map<std::string, std::string, std::less<>> out;
    for (auto tid : ids()) out.emplace(std::string(tid), std::string(builtin(tid)));
    return out;
  }();
  auto it = kBuiltins.find(id);
  if (it == kBuiltins.end()) {
    throw ConfigError("unknown prompt template id '" + std::string(id) + "'");
  }
  return it->second;
}

std::string fill_template(std::string_view text,
                          const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw ConfigError("unterminated placeholder in prompt template");
    }
    out.append(text.substr(pos, open - pos));
    const std::string key(text.substr(open + 2, close - open - 2));
    auto it = vars.find(key);
    if (it == vars.end()) {
      throw ConfigError("prompt template uses unknown placeholder {{" + key + "}}");
    }
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

std::string render_case(const TaskSpec& task, const PartialRow& row) {
  if (row.size() != task.schema.size()) {
    throw InputError("partial row has " + std::to_string(row.size()) +
                     " entries, schema has " + std::to_string(task.schema.size()));
  }
  std::string out;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (!row[j]) continue;
    out += "- " + task.schema[j].name + ": " + render_value(*row[j]) + "\n";
  }
  if (out.empty()) out = "- (no information provided)\n";
  out.pop_back();
  return out;
}

std::string render_instance_json(const TaskSpec& task,
                                 const std::vector<FactorValue>& values) {
  task.schema.check_values(values);
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < values.size(); ++i) {
    j[task.schema[i].name] = render_value(values[i]);
  }
  return j.dump();
}

std::string render_comparative_prompt(const TaskSpec& task,
                                      const PartialRow& with_factor,
                                      const PartialRow& without_factor) {
  auto vars = base_vars(task);
  vars["case_a"] = render_case(task, with_factor);
  vars["case_b"] = render_case(task, without_factor);
  return finish(fill_template(task.prompts.get(PromptLibrary::kComparative), vars));
}

std::string render_per_class_prompt(const TaskSpec& task,
                                    const PartialRow& with_factor,
                                    const PartialRow& without_factor) {
  if (task.classes.size() < 2) {
    throw ConfigError("per-class prompts need at least two class names");
  }
  auto vars = base_vars(task);
  std::string classes;
  for (std::size_t c = 0; c < task.classes.size(); ++c) {
    if (c > 0) classes += ", ";
    classes += task.classes[c];
  }
  vars["classes"] = classes;
  vars["output_count"] = std::to_string(2 * task.classes.size());
  vars["case_a"] = render_case(task, with_factor);
  vars["case_b"] = render_case(task, without_factor);
  return finish(fill_template(task.prompts.get(PromptLibrary::kPerClass), vars));
}

std::string render_table_prompt(const TaskSpec& task, const std::string& markdown,
                                std::size_t row_count) {
  auto vars = base_vars(task);
  vars["table"] = markdown;
  vars["row_count"] = std::to_string(row_count);
  vars["pair_count"] = std::to_string(row_count / 2);
  return finish(fill_template(task.prompts.get(PromptLibrary::kTable), vars));
}

std::string render_score_prompt(const TaskSpec& task,
                                 const std::vector<FactorValue>& values) {
  auto vars = base_vars(task);
  vars["instance_json"] = render_instance_json(task, values);
  return finish(fill_template(task.prompts.get(PromptLibrary::kScore), vars));
}

std::string render_level_prompt(const TaskSpec& task,
                                 const std::vector<FactorValue>& values,
                                 bool negated) {
  auto vars = base_vars(task);
  if (negated) {
    if (task.negated_question.empty()) {
      throw ConfigError("task '" + task.id + "' has no negated question");
    }
    vars["question"] = task.negated_question;
  }
  vars["instance_json"] = render_instance_json(task, values);
  std::string levels;
  for (const auto& level : baselines::likelihood_levels()) {
    if (!levels.empty()) levels += ", ";
    levels += "\"" + level.label + "\"";
  }
  vars["levels"] = levels;
  return finish(fill_template(task.prompts.get(PromptLibrary::kLevel), vars));
}

std::string render_icl_prompt(const TaskSpec& task,
                              std::span<const RenderedDemonstration> demos,
                              const std::vector<FactorValue>& values) {
  if (demos.empty()) return render_score_prompt(task, values);
  auto vars = base_vars(task);
  std::string block;
  for (std::size_t d = 0; d < demos.size(); ++d) {
    block += "Example " + std::to_string(d + 1) + ": " +
             render_instance_json(task, demos[d].values) +
             "\nOutcome: " + (demos[d].positive ? "Yes" : "No") + "\n";
  }
  if (!block.empty()) block.pop_back();
  vars["demonstrations"] = block;
  vars["demo_count"] = std::to_string(demos.size());
  vars["instance_json"] = render_instance_json(task, values);
  return finish(fill_template(task.prompts.get(PromptLibrary::kIcl), vars));
}

}  // namespace prism

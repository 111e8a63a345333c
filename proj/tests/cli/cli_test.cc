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
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "io_util.h"
#include "metric_oracles.h"
#include "prism/attribution.h"
#include "prism/error.h"
#include "prism/metrics.h"
#include "prism/synthetic_oracle.h"
#include "stroke_cases.h"

namespace prism::cli {
namespace {

using ::testing::HasSubstr;

const std::filesystem::path kData = PRISM_TEST_DATA_DIR;
const std::filesystem::path kConfigs = std::filesystem::path(PRISM_SOURCE_DIR) / "configs";

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "prism");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("prism_cli_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<nlohmann::json> records(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  for (const auto& [n, line] : read_jsonl_lines(path)) out.push_back(nlohmann::json::parse(line));
  return out;
}

// Run directory named on the first output line.
std::filesystem::path run_dir_of(const CliResult& r) {
  const std::string prefix = "run directory: ";
  const auto b = r.out.find(prefix);
  EXPECT_NE(b, std::string::npos) << r.out << r.err;
  const auto e = r.out.find('\n', b);
  return r.out.substr(b + prefix.size(), e - b - prefix.size());
}

std::vector<std::string> toy_run(const std::string& method, const std::filesystem::path& out) {
  return {"run", method,
          "--config", (kData / "toy3.json").string(),
          "--data", (kData / "toy3.csv").string(),
          "--synthetic-model", (kData / "toy3_model.json").string(),
          "--out", out.string(), "--k", "12", "--seed", "5"};
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

TEST(CliRun, PrismPhisSumToTotalMinusBase) {
  const auto dir = fresh_dir("sum");
  const auto r = cli(toy_run("prism", dir));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = records(run_dir_of(r) / "predictions.jsonl");
  ASSERT_EQ(recs.size(), 40u);
  for (const auto& rec : recs) {
    const auto a = AttributionResult::from_json(rec.at("attribution"));
    ASSERT_EQ(a.factors.size(), 3u);
    double sum = 0.0;
    for (const auto& f : a.factors) sum += f.phi;
    EXPECT_NEAR(sum, rec.at("total_logit").get<double>() - rec.at("base_logit").get<double>(), 1e-9);
    EXPECT_NEAR(rec.at("score").get<double>(), sigmoid(rec.at("total_logit").get<double>()), 1e-12);
    EXPECT_EQ(rec.at("base_logit").get<double>(), -0.5);
  }
}

TEST(CliRun, TabularReferenceMatchIsExactlyZero) {
  const auto dir = fresh_dir("refzero");
  const auto r = cli(toy_run("tabular-prism", dir));
  ASSERT_EQ(r.code, 0) << r.err;
  int matched = 0;
  for (const auto& rec : records(run_dir_of(r) / "predictions.jsonl")) {
    const auto a = AttributionResult::from_json(rec.at("attribution"));
    if (render_value(a.factors[0].value) == "red") {
      EXPECT_EQ(a.factors[0].phi, 0.0);
      ++matched;
    }
  }
  EXPECT_GT(matched, 0);
}

TEST(CliRun, ManifestRecordsRunParameters) {
  const auto dir = fresh_dir("manifest");
  const auto r = cli(toy_run("tabular-prism", dir));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(run_dir_of(r) / "manifest.json");
  EXPECT_EQ(m.at("method"), "tabular-prism");
  EXPECT_EQ(m.at("task_id"), "toy3");
  EXPECT_EQ(m.at("k"), 12);
  EXPECT_EQ(m.at("seed"), 5);
  EXPECT_EQ(m.at("instances"), 40);
  EXPECT_EQ(m.at("factor_count"), 3);
  EXPECT_EQ(m.at("failed"), 0);
  EXPECT_EQ(m.at("clamps").at("count"), 0);
  // 24 rows per factor split into two chunks under the 20-row limit.
  EXPECT_EQ(m.at("queries_per_instance").at("queries"), 6.0);
  EXPECT_EQ(m.at("oracle_stats").at("queries"), 240);
  EXPECT_TRUE(m.contains("started_at"));
  EXPECT_EQ(run_dir_of(r).filename().string(),
            "tabular-prism-" + m.at("fingerprint").get<std::string>().substr(0, 16));
}

TEST(CliRun, EveryMethodProducesScoresInUnitInterval) {
  const auto dir = fresh_dir("methods");
  for (const auto& method : run_methods()) {
    const auto r = cli(toy_run(method, dir));
    ASSERT_EQ(r.code, 0) << method << ": " << r.err;
    const auto recs = records(run_dir_of(r) / "predictions.jsonl");
    ASSERT_EQ(recs.size(), 40u) << method;
    for (const auto& rec : recs) {
      EXPECT_EQ(rec.at("method"), method);
      const double s = rec.at("score").get<double>();
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 1.0);
    }
  }
}

TEST(CliRun, ResumeKeepsCompletedInstances) {
  const auto dir = fresh_dir("resume");
  const auto first = cli(toy_run("prism", dir));
  ASSERT_EQ(first.code, 0) << first.err;
  const auto path = run_dir_of(first) / "predictions.jsonl";
  const std::string full = read_text_file(path);

  std::vector<std::string> lines;
  for (const auto& [n, line] : read_jsonl_lines(path)) lines.push_back(line);
  std::string partial;
  for (std::size_t i = 0; i < 25; ++i) partial += lines[i] + "\n";
  write_file_atomic(path, partial);

  const auto second = cli(toy_run("prism", dir));
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_THAT(second.out, HasSubstr("computed 15, reused 25"));
  EXPECT_EQ(read_text_file(path), full);
}

std::string record_then_replay(const std::filesystem::path& dir, const std::string& sigma,
                               const std::string& replay_concurrency, std::string* live_out) {
  const auto transcript = dir / "transcript.jsonl";
  auto args = toy_run("prism", dir / "live");
  args.insert(args.end(), {"--record", transcript.string(), "--noise-sigma", sigma});
  const auto live = cli(args);
  EXPECT_EQ(live.code, 0) << live.err;
  const auto model = read_json(run_dir_of(live) / "manifest.json").at("model").get<std::string>();
  *live_out = read_text_file(run_dir_of(live) / "predictions.jsonl");
  const auto replay = cli({"run", "prism", "--config", (kData / "toy3.json").string(),
                           "--data", (kData / "toy3.csv").string(), "--oracle", "replay",
                           "--transcript", transcript.string(), "--model", model,
                           "--out", (dir / "replay").string(), "--k", "12", "--seed", "5",
                           "--concurrency", replay_concurrency});
  EXPECT_EQ(replay.code, 0) << replay.err;
  return read_text_file(run_dir_of(replay) / "predictions.jsonl");
}

TEST(CliRun, ReplayOfNoisyRecordingIsByteIdentical) {
  std::string live;
  const std::string replayed = record_then_replay(fresh_dir("replay_noisy"), "0.3", "1", &live);
  EXPECT_EQ(replayed, live);
}

// Concurrent replay is order-free only when each key has one recorded
// answer, which holds for a noise-free oracle.
TEST(CliRun, ConcurrentReplayOfDeterministicRecordingIsByteIdentical) {
  std::string live;
  const std::string replayed = record_then_replay(fresh_dir("replay_det"), "0", "3", &live);
  EXPECT_EQ(replayed, live);
}

TEST(CliRun, FailureBudgetExceededExitsThreeWithSummary) {
  const auto dir = fresh_dir("budget");
  const auto transcript = dir / "partial.jsonl";
  auto rec = toy_run("nshot-score", dir / "live");
  rec.insert(rec.end(), {"--record", transcript.string(), "--limit", "10"});
  const auto live = cli(rec);
  ASSERT_EQ(live.code, 0) << live.err;
  const auto model = read_json(run_dir_of(live) / "manifest.json").at("model").get<std::string>();

  auto replay = std::vector<std::string>{
      "run", "nshot-score", "--config", (kData / "toy3.json").string(),
      "--data", (kData / "toy3.csv").string(), "--oracle", "replay",
      "--transcript", transcript.string(), "--model", model, "--out", (dir / "r").string()};
  const auto strict = cli(replay);
  EXPECT_EQ(strict.code, kExitOracle);
  const auto summary = nlohmann::json::parse(strict.err);
  EXPECT_EQ(summary.at("error"), "failure budget exceeded");
  EXPECT_EQ(summary.at("max_failures"), 0);
  EXPECT_GE(summary.at("failed").get<int>(), 1);
  EXPECT_EQ(summary.at("failures").at(0).at("kind"), "QueryError");

  // Rows whose factor values repeat one of the first ten share its prompt
  // and replay; every other row is missing from the transcript.
  std::set<std::string> recorded;
  std::size_t unanswerable = 0;
  std::size_t row = 0;
  for (const auto& [n, line] : read_jsonl_lines(kData / "toy3.csv")) {
    if (n == 1) continue;
    const auto values = line.substr(line.find(',') + 1, line.rfind(',') - line.find(',') - 1);
    if (row++ < 10) recorded.insert(values);
    else if (!recorded.count(values)) ++unanswerable;
  }
  ASSERT_GT(unanswerable, 0u);

  replay.insert(replay.end(), {"--max-failures", "40"});
  const auto tolerant = cli(replay);
  EXPECT_EQ(tolerant.code, 0) << tolerant.err;
  EXPECT_THAT(tolerant.out, HasSubstr("failed " + std::to_string(unanswerable) + ")"));
  EXPECT_EQ(records(run_dir_of(tolerant) / "failures.jsonl").size(), unanswerable);
  EXPECT_EQ(records(run_dir_of(tolerant) / "predictions.jsonl").size(), 40 - unanswerable);
}

// Raw Kaggle-layout stroke rows; every other row is positive.
std::filesystem::path write_stroke_csv(const std::filesystem::path& dir, std::size_t n) {
  const auto path = dir / "stroke.csv";
  std::ofstream out(path);
  out << "id,gender,age,hypertension,heart_disease,ever_married,work_type,Residence_type,"
         "avg_glucose_level,bmi,smoking_status,stroke\n";
  const char* work[] = {"Private", "Govt_job", "Self-employed", "children", "Never_worked"};
  const char* smoke[] = {"never smoked", "formerly smoked", "smokes", "Unknown"};
  Rng rng(11);
  for (std::size_t i = 0; i < n; ++i) {
    out << 1000 + i << "," << rng.uniform_index(2) << "," << 20 + rng.uniform_index(60) << ","
        << rng.uniform_index(2) << "," << rng.uniform_index(2) << ","
        << (rng.uniform_index(2) ? "Yes" : "No") << "," << work[rng.uniform_index(5)] << ","
        << (rng.uniform_index(2) ? "Urban" : "Rural") << "," << 60 + rng.uniform_index(180) << ".5,"
        << 18 + rng.uniform_index(20) << ".1," << smoke[rng.uniform_index(4)] << "," << i % 2
        << "\n";
  }
  return path;
}

TEST(CliRun, StrokeBalancedTabularUsesOneQueryPerFactor) {
  const auto dir = fresh_dir("stroke");
  const auto csv = write_stroke_csv(dir, 400);
  const auto r = cli({"run", "tabular-prism", "--config", (kConfigs / "stroke.json").string(),
                      "--data", csv.string(), "--synthetic-model",
                      (kData / "stroke_model.json").string(), "--balanced", "150", "--k", "10",
                      "--out", (dir / "runs").string(), "--concurrency", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(run_dir_of(r) / "manifest.json");
  EXPECT_EQ(m.at("instances"), 300);
  EXPECT_EQ(m.at("factor_count"), 10);
  EXPECT_EQ(m.at("queries_per_instance").at("queries"), 10.0);
  EXPECT_EQ(m.at("queries_per_instance").at("row_evaluations"), 200.0);
  int positives = 0;
  for (const auto& rec : records(run_dir_of(r) / "predictions.jsonl")) positives += rec.at("label").get<int>();
  EXPECT_EQ(positives, 150);
}

TEST(CliRun, ConfigProblemsExitTwo) {
  const auto dir = fresh_dir("config");
  auto args = toy_run("prism", dir);
  args[7] = (kData / "missing_model.json").string();
  EXPECT_EQ(cli(args).code, kExitConfig);
  auto loan = toy_run("tabular-prism", dir);
  loan[3] = (kConfigs / "loan.json").string();
  const auto r = cli(loan);
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_THAT(r.err, HasSubstr("IngestionError"));
  EXPECT_EQ(cli({"run", "no-such-method"}).code, kExitConfig);
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

void write_predictions(const std::filesystem::path& path, const std::string& method,
                       const std::vector<std::pair<double, int>>& data, bool with_labels = true) {
  std::string text;
  for (std::size_t i = 0; i < data.size(); ++i) {
    nlohmann::json rec = {{"id", "i" + std::to_string(i)}, {"method", method}, {"score", data[i].first}};
    rec["label"] = with_labels ? nlohmann::json(data[i].second) : nlohmann::json(nullptr);
    text += rec.dump() + "\n";
  }
  write_file_atomic(path, text);
}

std::vector<std::pair<double, int>> random_scores(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<std::pair<double, int>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng.uniform_index(2));
    const double s = std::round(std::clamp(0.5 + 0.3 * (y - 0.5) + 0.25 * rng.normal(), 0.0, 1.0) * 20) / 20;
    out.emplace_back(s, y);
  }
  return out;
}

TEST(CliMetrics, ReportsMatchBruteForceOracles) {
  const auto dir = fresh_dir("metrics");
  const auto a = random_scores(1, 200);
  const auto b = random_scores(2, 200);
  write_predictions(dir / "a.jsonl", "alpha", a);
  write_predictions(dir / "b.jsonl", "beta", b);
  const auto r = cli({"metrics", (dir / "a.jsonl").string(), (dir / "b.jsonl").string(), "--out",
                      (dir / "m").string(), "--bootstrap", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& [name, data] : {std::pair{"alpha", a}, std::pair{"beta", b}}) {
    std::vector<metrics::ScoredLabel> sl;
    for (const auto& [s, y] : data) sl.push_back({s, y});
    const auto report = read_json(dir / "m" / (std::string(name) + ".metrics.json"));
    EXPECT_NEAR(report.at("auroc").get<double>(), testing::brute_auroc(sl), 1e-12);
    EXPECT_NEAR(report.at("auprc").get<double>(), testing::brute_ap(sl), 1e-12);
    EXPECT_TRUE(std::filesystem::exists(dir / "m" / (std::string(name) + ".reliability.csv")));
  }
  const std::string comparison = read_text_file(dir / "m" / "comparison.csv");
  EXPECT_EQ(comparison, r.out);
  EXPECT_THAT(comparison, HasSubstr("\nalpha,200,"));
  EXPECT_THAT(comparison, HasSubstr("\nbeta,200,"));
}

TEST(CliMetrics, LabelsJoinAndOrphans) {
  const auto dir = fresh_dir("labels");
  const auto data = random_scores(3, 50);
  write_predictions(dir / "p.jsonl", "m", data, false);
  EXPECT_EQ(cli({"metrics", (dir / "p.jsonl").string(), "--out", (dir / "m").string()}).code,
            kExitConfig);

  std::string labels = "id,label\n";
  for (std::size_t i = 0; i < data.size(); ++i) labels += "i" + std::to_string(i) + "," + std::to_string(data[i].second) + "\n";
  write_file_atomic(dir / "labels.csv", labels);
  const auto ok = cli({"metrics", (dir / "p.jsonl").string(), "--labels", (dir / "labels.csv").string(),
                       "--out", (dir / "m").string(), "--bootstrap", "10"});
  EXPECT_EQ(ok.code, 0) << ok.err;

  std::string short_labels = "id,label\n";
  for (std::size_t i = 2; i < data.size(); ++i) short_labels += "i" + std::to_string(i) + "," + std::to_string(data[i].second) + "\n";
  write_file_atomic(dir / "short.csv", short_labels);
  const auto orphan = cli({"metrics", (dir / "p.jsonl").string(), "--labels", (dir / "short.csv").string(),
                           "--out", (dir / "m").string()});
  EXPECT_EQ(orphan.code, kExitConfig);
  EXPECT_THAT(orphan.err, HasSubstr("InputError"));
  EXPECT_THAT(orphan.err, HasSubstr("2 prediction id(s) have no label: i0 i1"));
}

TEST(CliMetrics, SingleClassIsMetricErrorExitFour) {
  const auto dir = fresh_dir("oneclass");
  write_predictions(dir / "p.jsonl", "m", {{0.2, 1}, {0.4, 1}, {0.9, 1}});
  const auto r = cli({"metrics", (dir / "p.jsonl").string(), "--out", (dir / "m").string(), "--bins", "2"});
  EXPECT_EQ(r.code, kExitMetric);
  EXPECT_THAT(r.err, HasSubstr("MetricError"));
}

AttributionResult stroke_case_one() {
  const auto& c = testing::stroke_cases()[0];
  std::vector<FactorSpec> specs;
  std::vector<ShapleyEstimate> estimates;
  Instance x;
  x.id = "case-1";
  x.label = 1;
  for (std::size_t j = 0; j < c.phis.size(); ++j) {
    specs.push_back({c.phis[j].first, FactorKind::kCategorical, "", ""});
    x.values.push_back(make_categorical("v" + std::to_string(j)));
    ShapleyEstimate e;
    e.factor = {j, c.phis[j].first};
    e.phi = c.phis[j].second;
    e.k_samples = 10;
    estimates.push_back(e);
  }
  TaskSpec task;
  task.id = "stroke";
  task.schema = FactorSchema(specs);
  return make_attribution(task, x, reconstruct(testing::kStrokeCaseBaseLogit, estimates), "prism");
}

TEST(CliExplain, RendersStoredStrokeCaseLedger) {
  const auto dir = fresh_dir("explain");
  const auto a = stroke_case_one();
  const nlohmann::json rec = {{"id", "case-1"}, {"method", "prism"}, {"score", a.probability},
                              {"attribution", a.to_json()}};
  write_file_atomic(dir / "predictions.jsonl", rec.dump() + "\n");

  const auto text = cli({"explain", "--run", dir.string(), "--id", "case-1"});
  ASSERT_EQ(text.code, 0) << text.err;
  EXPECT_EQ(text.out, a.ledger_text());
  EXPECT_THAT(text.out, HasSubstr("Sum of phi:      4.240"));
  EXPECT_THAT(text.out, HasSubstr("Total logit:     -0.355"));
  EXPECT_THAT(text.out, HasSubstr("Predicted prob:  0.412"));

  const auto json = cli({"explain", "--run", dir.string(), "--id", "case-1", "--json"});
  ASSERT_EQ(json.code, 0);
  EXPECT_EQ(AttributionResult::from_json(nlohmann::json::parse(json.out)), a);

  const auto missing = cli({"explain", "--run", dir.string(), "--id", "case-9"});
  EXPECT_EQ(missing.code, kExitConfig);
  EXPECT_THAT(missing.err, HasSubstr("LookupError"));
}

// Answers aspect proposals, aspect summaries and comparative queries. The
// proposed aspect count and the summaries vary with the query nonce.
class StoryOracle : public EvaluationOracle, public TextOracle {
 public:
  StoryOracle()
      : inner_("story-model", [](const PartialRow& row) {
          double z = -0.2;
          for (const auto& v : row) {
            if (v) z += static_cast<double>(hash_string(render_value(*v)) % 1000) / 1000.0 - 0.5;
          }
          return z;
        }) {}

  std::string model_id() const override { return "story-model"; }
  OracleResponse evaluate(const OracleQuery& q) override { return inner_.evaluate(q); }

  TextResponse complete(const TextQuery& q) override {
    static const std::vector<std::string> kNames = {"weather", "demand", "supply", "costs",
                                                    "policy",  "trade",  "pests",  "storage"};
    TextResponse r;
    if (q.prompt.find("Propose the minimal set") != std::string::npos) {
      nlohmann::json arr = nlohmann::json::array();
      for (std::size_t i = 0; i < 4 + q.nonce % 3; ++i) arr.push_back({{"name", kNames[i]}, {"description", "d"}});
      r.text = arr.dump();
      return r;
    }
    const auto b = q.prompt.find("Aspect: ") + 8;
    const std::string aspect = q.prompt.substr(b, q.prompt.find('\n', b) - b);
    r.text = nlohmann::json{{"summary", aspect + " outlook " + std::to_string(q.nonce % 4)}}.dump();
    return r;
  }

 private:
  DeterministicOracle inner_;
};

nlohmann::json extract_config(const std::filesystem::path& dir, bool fixed) {
  nlohmann::json j = {{"id", "apple"},
                      {"question", "How likely is the apple price to rise next season?"},
                      {"base_logit", {{"source", "probability"}, {"value", 0.5}}}};
  if (fixed) {
    j["aspects"] = {"weather", "demand", "supply", "costs", "policy", "trade", "pests"};
  }
  write_file_atomic(dir / "task.json", j.dump(2));
  write_file_atomic(dir / "context.txt", "Growers report a wet spring and strong export demand.\n");
  return j;
}

TEST(CliExtract, RecordedRepeatsReplayToTheSameSummary) {
  const auto dir = fresh_dir("extract");
  extract_config(dir, false);
  StoryOracle story;
  const auto transcript = dir / "story.jsonl";
  ExtractOptions o;
  o.context = dir / "context.txt";
  o.config = dir / "task.json";
  o.out_dir = dir / "live";
  o.repeats = 10;
  o.k = 6;
  const auto live = extract_command(o, [&](const data::TaskConfig&) {
    return std::make_unique<OracleBundle>(&story, &story, nlohmann::json{{"oracle", "story"}}, false,
                                          transcript);
  });

  const auto r = cli({"extract", "--context", o.context.string(), "--config", o.config.string(),
                      "--out", (dir / "replay").string(), "--repeats", "10", "--k", "6",
                      "--oracle", "replay", "--transcript", transcript.string(), "--model",
                      "story-model"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto replayed = read_json(dir / "replay" / "summary.json");
  EXPECT_EQ(replayed.at("per_repeat"), live.at("per_repeat"));
  EXPECT_EQ(replayed.at("mean_probability"), live.at("mean_probability"));

  double mean = 0.0;
  std::set<std::size_t> counts;
  for (int i = 0; i < 10; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "repeat-%02d", i);
    const auto a = AttributionResult::from_json(read_json(dir / "replay" / name / "attribution.json"));
    mean += a.probability / 10.0;
    counts.insert(a.factors.size());
    EXPECT_TRUE(std::filesystem::exists(dir / "replay" / name / "factors.json"));
  }
  EXPECT_NEAR(replayed.at("mean_probability").get<double>(), mean, 1e-12);
  EXPECT_EQ(counts, (std::set<std::size_t>{4, 5, 6}));
  EXPECT_TRUE(replayed.contains("spread"));
  EXPECT_GT(replayed.at("spread").at("probability_sd").get<double>(), 0.0);
}

TEST(CliExtract, FixedAspectsAndSingleRepeat) {
  const auto dir = fresh_dir("extract_fixed");
  extract_config(dir, true);
  StoryOracle story;
  ExtractOptions o;
  o.context = dir / "context.txt";
  o.config = dir / "task.json";
  o.out_dir = dir / "out";
  o.k = 4;
  auto factory = [&](const data::TaskConfig&) {
    return std::make_unique<OracleBundle>(&story, &story, nlohmann::json{{"oracle", "story"}});
  };
  o.repeats = 1;
  const auto single = extract_command(o, factory);
  EXPECT_FALSE(single.contains("spread"));
  EXPECT_EQ(single.at("per_repeat").at(0).at("aspect_count"), 7);
  o.repeats = 3;
  for (const auto& rep : extract_command(o, factory).at("per_repeat")) {
    EXPECT_EQ(rep.at("aspect_count"), 7);
  }
}

TEST(CliExtract, SyntheticOracleIsRejected) {
  const auto dir = fresh_dir("extract_synth");
  extract_config(dir, true);
  const auto r = cli({"extract", "--context", (dir / "context.txt").string(), "--config",
                      (dir / "task.json").string(), "--oracle", "synthetic", "--synthetic-model",
                      (kData / "toy3_model.json").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, kExitConfig);
}

TEST(CliErrors, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), 2);
  EXPECT_EQ(exit_code_for(InputError("x")), 2);
  EXPECT_EQ(exit_code_for(LookupError("x")), 2);
  EXPECT_EQ(exit_code_for(IngestionError("x")), 2);
  EXPECT_EQ(exit_code_for(TransportError("x", 3, 503)), 3);
  EXPECT_EQ(exit_code_for(QueryError("x", "raw", 3)), 3);
  EXPECT_EQ(exit_code_for(ExtractionError("x")), 3);
  EXPECT_EQ(exit_code_for(MetricError("x")), 4);
}

}  // namespace
}  // namespace prism::cli

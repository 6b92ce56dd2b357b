/*
 * Copyright 2026 The codecal Authors.
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

#include "codecal/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "codecal/convert.hpp"
#include "codecal/error.hpp"
#include "codecal/svg.hpp"
#include "codecal/synthgen.hpp"

namespace codecal {
namespace {

ScoredDataset Scored(std::size_t n, std::uint64_t seed) {
  SynthSpec spec = PlantedAccuracySpec(n, seed);
  spec.languages = {"python", "rust"};
  spec.blocks[2].confidence = ConfidenceDist::Uniform(0.3, 0.9);
  return ScoreDataset(Generate(spec).dataset, {}, false);
}

RunConfig Config() {
  RunConfig cfg;
  cfg.grouping.complexity_source = ComplexitySource::kDifficultyLabel;
  return cfg;
}

TEST(FitEvalTest, UncalibratedRowMatchesMetrics) {
  const ScoredDataset train = Scored(1500, 1), val = Scored(500, 2), test = Scored(500, 3);
  const FitEvalResult r = RunFitEval(train, val, test, Config());
  const std::vector<double> p = ScoresOf(test.samples);
  const std::vector<int> y = LabelsOf(test.samples);
  EXPECT_EQ(r.uncalibrated.method, "uncalibrated");
  EXPECT_EQ(r.uncalibrated.brier, Brier(p, y));
  EXPECT_EQ(r.uncalibrated.bss, Bss(p, y));
  EXPECT_EQ(r.uncalibrated.ece, Ece(p, y, BinGrid(20)));
  EXPECT_EQ(r.uncalibrated.accuracy, AccuracyAtHalf(p, y));
  ASSERT_EQ(r.methods.size(), 6u);
  for (const MethodOutcome& m : r.methods) EXPECT_TRUE(m.ok()) << m.name << ": " << m.error;

  const std::string csv = ComparisonCsv(r);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "method,bss,acc,ece,brier");
  std::getline(lines, line);
  EXPECT_EQ(line.substr(0, 13), "uncalibrated,");
}

TEST(FitEvalTest, FailingMethodDoesNotAbortOthers) {
  ScoredDataset train = Scored(300, 1);
  for (auto& s : train.samples) s.sample.label = 1;
  RunConfig cfg = Config();
  cfg.methods = {Method::kPlatt, Method::kHistogramBinning};
  const FitEvalResult r = RunFitEval(train, Scored(100, 2), Scored(100, 3), cfg);
  EXPECT_FALSE(r.methods[0].ok());
  EXPECT_TRUE(r.methods[1].ok());
  EXPECT_NE(ComparisonCsv(r).find("platt,failed"), std::string::npos);
}

TEST(FitEvalTest, WritesExpectedFiles) {
  RunConfig cfg = Config();
  cfg.methods = {Method::kPlatt, Method::kHistogramBinning};
  const FitEvalResult r = RunFitEval(Scored(600, 1), Scored(200, 2), Scored(200, 3), cfg);
  const auto dir = std::filesystem::temp_directory_path() / "codecal_fit_eval_test";
  std::filesystem::remove_all(dir);
  WriteFitEval(r, dir);
  for (const char* f : {"models/platt.json", "models/hb.json", "reports/platt.json",
                        "reports/hb.json", "reports/uncalibrated.json", "comparison.csv",
                        "groups.json", "reliability/hb.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::size_t models = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "models")) {
    (void)e;
    ++models;
  }
  EXPECT_EQ(models, 2u);
  std::filesystem::remove_all(dir);
}

TEST(AblationTest, PowersetRowsInLexicographicOrder) {
  RunConfig cfg = Config();
  cfg.methods = {Method::kPlatt, Method::kHistogramBinning, Method::kLinr};
  const auto rows = RunAblation(Scored(900, 1), Scored(300, 2), Scored(300, 3), cfg);
  ASSERT_EQ(rows.size(), 7u * 4u);
  const std::vector<std::string> expected = {
      "complexity", "complexity+language", "complexity+language+length", "complexity+length",
      "language", "language+length", "length"};
  for (std::size_t s = 0; s < 7; ++s) {
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(rows[s * 4 + k].groups, expected[s]);
    EXPECT_EQ(rows[s * 4].method, "uncalibrated");
    // Group-agnostic methods do not depend on the subset.
    EXPECT_EQ(rows[s * 4 + 1].bss, rows[1].bss);
    EXPECT_EQ(rows[s * 4 + 2].bss, rows[2].bss);
  }
  EXPECT_EQ(AblationCsv(rows).substr(0, 18), "method,groups,bss\n");
}

TEST(AblationTest, NeedsTwoCategories) {
  RunConfig cfg;
  cfg.grouping.length_metrics.clear();
  EXPECT_THROW(RunAblation(Scored(100, 1), Scored(50, 2), Scored(50, 3), cfg), UsageError);
}

TEST(RunConfigTest, JsonOverlayAndValidation) {
  const RunConfig cfg = RunConfigFromJson(nlohmann::json::parse(
      R"({"methods": "platt,iglb", "m_bins": 10, "complexity": "branches", "epsilon": 0.1,
          "length_metrics": ["loc"], "seed": 9})"));
  EXPECT_EQ(cfg.methods, (std::vector<Method>{Method::kPlatt, Method::kIglb}));
  EXPECT_EQ(cfg.m_bins, 10);
  EXPECT_EQ(cfg.grouping.complexity_source, ComplexitySource::kBranchHeuristic);
  EXPECT_EQ(cfg.grouping.length_metrics, (std::vector<LengthMetric>{LengthMetric::kLoc}));
  EXPECT_EQ(cfg.split.seed, 9u);
  EXPECT_THROW(RunConfigFromJson(nlohmann::json::parse(R"({"m_binz": 3})")), UsageError);
  EXPECT_THROW(RunConfigFromJson(nlohmann::json::parse(R"({"methods": "isotonic"})")), UsageError);
  RunConfig bad;
  bad.m_bins = 1;
  EXPECT_THROW(bad.Validate(), UsageError);
}

TEST(SplitScoredTest, KeepsScoresAndPurity) {
  SynthSpec spec = PlantedAccuracySpec(600, 3);
  spec.samples_per_problem = 4;
  const ScoredDataset d = ScoreDataset(Generate(spec).dataset, {}, false);
  const ScoredSplit s = SplitScored(d, {0.6, 0.2, 0.2, 5});
  EXPECT_EQ(s.train.samples.size() + s.val.samples.size() + s.test.samples.size(), 600u);
  EXPECT_EQ(s.train.samples.size() % 4, 0u);
  EXPECT_EQ(s.test.method, "avg_prob");
}

TEST(ApplyModelTest, GroupModelsNeedMatchingGrouping) {
  const ScoredDataset train = Scored(600, 1);
  RunConfig cfg = Config();
  cfg.methods = {Method::kLinr};
  const FitEvalResult r = RunFitEval(train, Scored(200, 2), Scored(200, 3), cfg);
  const CalibratorModel& model = *r.methods[0].model;
  EXPECT_THROW(ApplyModel(model, train, nullptr), UsageError);
  const ScoredDataset out = ApplyModel(model, train, &r.grouping);
  EXPECT_EQ(out.method, "avg_prob+linr");
  GroupingConfig other;
  const Grouping wrong = FitGrouping(other, DatasetOf(train.samples));
  EXPECT_THROW(ApplyModel(model, train, &wrong), DataError);
}

EvalReport ReportWith(std::vector<ReliabilityRow> rows) {
  EvalReport r;
  r.method = "m";
  r.m_bins = 20;
  r.reliability = std::move(rows);
  return r;
}

std::size_t Count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

TEST(SvgTest, OneOccupiedBinGivesOneBar) {
  const std::string svg = ReliabilitySvg(ReportWith({{5, 10, 0.22, 0.3}}));
  EXPECT_EQ(Count(svg, "class=\"bar\""), 1u);
  EXPECT_EQ(Count(svg, "class=\"identity\""), 1u);
}

TEST(SvgTest, CalibratedBarsTouchTheDiagonal) {
  std::vector<ReliabilityRow> rows;
  for (int b = 1; b <= 20; ++b) rows.push_back({b, 5, (b - 0.5) / 20, (b - 0.5) / 20});
  const std::string svg = ReliabilitySvg(ReportWith(rows));
  // Bar top y and centre x must lie on y = 440 - (x - 40).
  std::size_t pos = 0;
  int bars = 0;
  while ((pos = svg.find("class=\"bar\"", pos)) != std::string::npos) {
    const auto attr = [&](const std::string& name) {
      const std::size_t at = svg.find(" " + name + "=\"", pos) + name.size() + 3;
      return std::stod(svg.substr(at, svg.find('"', at) - at));
    };
    const double cx = attr("x") + attr("width") / 2;
    EXPECT_NEAR(attr("y"), 440.0 - (cx - 40.0), 1.0);
    ++bars;
    ++pos;
  }
  EXPECT_EQ(bars, 20);
}

TEST(SvgTest, DeterministicText) {
  EvalReport r = ReportWith({{3, 4, 0.12, 0.25}, {18, 9, 0.88, 0.7}});
  r.groups = {{"python", 10, 0.5, 0.4, 0.45, 0.01}, {"rust", 0, 0.0, 0.0, 0.0, std::nullopt}};
  EXPECT_EQ(ReliabilitySvg(r), ReliabilitySvg(r));
  const std::string scatter = GroupScatterSvg(r);
  EXPECT_EQ(scatter, GroupScatterSvg(r));
  EXPECT_EQ(Count(scatter, "class=\"group\""), 1u);
}

TEST(ConvertTest, MapsShardToValidRecords) {
  std::istringstream shard(
      R"({"task_id": 7, "language": "python", "logprobs": [-0.1, -0.2, -0.3], "passed": true, "difficulty": "easy", "code": "x = 1\n", "generation": "Sure\n```\nx = 1\n```\n", "tokens": ["Sure\n```\n", "x = 1\n", "```\n"]})"
      "\n"
      R"({"task_id": 7, "language": "python", "logprobs": [], "passed": false})"
      "\n"
      R"({"task_id": 8, "language": "rust", "logprobs": [-0.5], "passed": false})"
      "\n");
  const ConvertResult r = ConvertCalibri(shard, "shard", {});
  ASSERT_EQ(r.dataset.size(), 2u);
  EXPECT_EQ(r.skipped_missing_logprobs, 1u);
  const Sample& s = r.dataset.samples[0];
  EXPECT_EQ(s.problem_id, "7");
  EXPECT_EQ(s.sample_id, "7#0");
  EXPECT_EQ(s.label, 1);
  ASSERT_TRUE(s.code_span.has_value());
  EXPECT_EQ(s.code_span->begin, 1u);
  EXPECT_EQ(s.code_span->end, 2u);

  std::stringstream io;
  WriteRecords(io, r.dataset);
  EXPECT_EQ(ParseRecords(io, "round trip").size(), 2u);

  const nlohmann::json meta = r.Metadata("shard");
  EXPECT_EQ(meta.at("mapping").at("problem_id"), "task_id");
  EXPECT_EQ(meta.at("mapping").at("token_logprobs"), "logprobs");
  EXPECT_EQ(meta.at("mapping").at("label"), "passed");
  EXPECT_EQ(meta.at("mapping").at("code_text"), "code");
  EXPECT_EQ(meta.at("skipped_missing_logprobs"), 1);
}

TEST(ConvertTest, UnknownLayoutListsExpectedKeys) {
  std::istringstream shard(R"({"foo": 1, "bar": [0.1]})" "\n");
  try {
    ConvertCalibri(shard, "shard", {});
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("task_id"), std::string::npos) << msg;
    EXPECT_NE(msg.find("logprobs"), std::string::npos) << msg;
    EXPECT_NE(msg.find("passed"), std::string::npos) << msg;
  }
}

TEST(ConvertTest, DefaultLanguageAndJsonArray) {
  std::istringstream shard(R"([{"problem_id": "a", "token_logprobs": [-1.0], "label": 0}])");
  ConvertOptions opt;
  opt.default_language = "cpp";
  const ConvertResult r = ConvertCalibri(shard, "shard", opt);
  ASSERT_EQ(r.dataset.size(), 1u);
  EXPECT_EQ(r.dataset.samples[0].language, "cpp");
}

}  // namespace
}  // namespace codecal

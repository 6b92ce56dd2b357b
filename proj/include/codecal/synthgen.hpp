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

#ifndef CODECAL_SYNTHGEN_HPP_
#define CODECAL_SYNTHGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "codecal/data.hpp"
#include "codecal/groups.hpp"
#include "json.hpp"

namespace codecal {

struct ConfidenceDist {
  enum class Kind { kConstant, kUniform };
  Kind kind = Kind::kConstant;
  double c = 0.5;
  double lo = 0.0;
  double hi = 1.0;

  static ConfidenceDist Constant(double c) { return {Kind::kConstant, c, c, c}; }
  static ConfidenceDist Uniform(double lo, double hi) {
    return {Kind::kUniform, 0.0, lo, hi};
  }
};

struct LineRange {
  int lo = 5;
  int hi = 40;
};

// One mutually exclusive block of the generator.
struct SynthBlock {
  std::string name;
  double mass = 0.0;
  double accuracy = 0.5;
  ConfidenceDist confidence;
  std::optional<std::string> difficulty;
  std::optional<LineRange> loc_range;  // falls back to SynthSpec::loc_range
};

struct SynthSpec {
  std::vector<SynthBlock> blocks;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  // Drawn uniformly per problem, independently of the block.
  std::vector<std::string> languages = {"python"};
  std::size_t samples_per_problem = 1;
  LineRange loc_range;

  // Throws UsageError for infeasible masses or out-of-range parameters.
  void Validate() const;
};

struct SynthData {
  Dataset dataset;
  GroupSet blocks;  // one column per block, in spec order
};

// Each problem draws its block and language; each of its samples draws a
// score from the block's distribution and a Bernoulli(accuracy) label. Mass
// left over by the blocks goes to an unnamed background with score 0.5 and
// accuracy 0.5. The score is stored as a single token log-probability, so
// every confidence variant recovers it exactly.
SynthData Generate(const SynthSpec& spec);

SynthSpec SynthSpecFromJson(const nlohmann::json& j);
SynthSpec LoadSynthSpec(const std::filesystem::path& path);

// Three disjoint equal-mass blocks "acc_030", "acc_060", "acc_090" with
// constant score 0.5; each block's difficulty label is its name.
SynthSpec PlantedAccuracySpec(std::size_t n_samples, std::uint64_t seed);

}  // namespace codecal

#endif  // CODECAL_SYNTHGEN_HPP_

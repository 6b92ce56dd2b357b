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

#ifndef CODECAL_DATA_HPP_
#define CODECAL_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace codecal {

// Half-open token index range [begin, end).
struct CodeSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const CodeSpan&) const = default;
};

// One prompt/generation pair with its natural-log token likelihoods and
// binary correctness label.
struct Sample {
  std::string problem_id;
  std::string sample_id;
  std::string language;
  std::vector<double> token_logprobs;
  std::optional<CodeSpan> code_span;
  int label = 0;
  std::optional<std::string> difficulty;
  std::optional<std::string> code_text;

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::string provenance;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Throws DataError if `s` violates a Sample invariant.
void ValidateSample(const Sample& s);

nlohmann::json SampleToJson(const Sample& s);

// Parses one record. Unknown keys are ignored. `where` prefixes error
// messages (typically "line N").
Sample SampleFromJson(const nlohmann::json& j, std::string_view where);

// Reads one JSON object per line. Blank lines are skipped. Errors name the
// offending line; duplicate sample ids and invalid log-probabilities are
// rejected.
Dataset ParseRecords(std::istream& in, std::string provenance);
Dataset LoadRecords(const std::filesystem::path& path);

void WriteRecords(std::ostream& out, const Dataset& d);
void WriteRecords(const std::filesystem::path& path, const Dataset& d);

// Character range [begin, end) of one token inside the generation text.
struct CharRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Token range of the first complete fenced (```) code block, or nullopt when
// the text holds no complete fence or the block covers no token. Throws
// DataError if the offsets overlap or descend.
std::optional<CodeSpan> ExtractCodeSpan(std::string_view generation_text,
                                        std::span<const CharRange> token_offsets);

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;

  void Validate() const;
};

enum class SplitPart : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

// Stable 64-bit hash of (seed, problem_id): FNV-1a over the little-endian
// seed bytes followed by the id bytes, finished with the splitmix64 mixer.
std::uint64_t ProblemHash(std::uint64_t seed, std::string_view problem_id);

// Split part for each index of `problem_ids`. All entries with the same id get
// the same part. Throws DataError with fewer than three distinct ids.
std::vector<SplitPart> AssignSplits(std::span<const std::string> problem_ids,
                                    const SplitSpec& spec);

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

DatasetSplit SplitByProblem(const Dataset& d, const SplitSpec& spec);

}  // namespace codecal

#endif  // CODECAL_DATA_HPP_

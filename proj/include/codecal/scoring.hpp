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

#ifndef CODECAL_SCORING_HPP_
#define CODECAL_SCORING_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codecal/data.hpp"
#include "codecal/error.hpp"

namespace codecal {

enum class ConfidenceVariant { kAvgProb, kCodeProb, kTailProb };

struct ConfidenceMethod {
  ConfidenceVariant variant = ConfidenceVariant::kAvgProb;
  int tail_k = 40;  // only used by kTailProb
};

std::string_view VariantName(ConfidenceVariant v);
// "avg_prob", "code_prob" or "tail_prob"; anything else is a UsageError.
ConfidenceVariant ParseConfidenceVariant(std::string_view name);

// Raised by code_prob on a sample without an extracted code span.
class MissingCodeError : public DataError {
 public:
  using DataError::DataError;
};

struct ScoredSample {
  Sample sample;
  double p_hat = 0.0;
};

// exp(mean log-probability) over the tokens selected by the method: all of
// them, the code span, or the last min(tail_k, n).
double ConfidenceScore(const Sample& s, const ConfidenceMethod& m);
ScoredSample Score(const Sample& s, const ConfidenceMethod& m);

struct ScoredDataset {
  std::vector<ScoredSample> samples;
  std::size_t skipped = 0;
  std::string method;  // variant name, e.g. "avg_prob"
};

// Order-preserving. With skip_missing, samples that cannot be scored are
// dropped and counted; otherwise the first one (by position) throws.
ScoredDataset ScoreDataset(const Dataset& d, const ConfidenceMethod& m,
                           bool skip_missing);

// Scored records are core records plus "p_hat" and "method".
void WriteScored(std::ostream& out, const ScoredDataset& d);
void WriteScored(const std::filesystem::path& path, const ScoredDataset& d);
ScoredDataset ParseScored(std::istream& in);
ScoredDataset LoadScored(const std::filesystem::path& path);

std::vector<double> ScoresOf(std::span<const ScoredSample> s);
std::vector<int> LabelsOf(std::span<const ScoredSample> s);
Dataset DatasetOf(std::span<const ScoredSample> s);

}  // namespace codecal

#endif  // CODECAL_SCORING_HPP_

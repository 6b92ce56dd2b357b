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

#ifndef CODECAL_CONVERT_HPP_
#define CODECAL_CONVERT_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codecal/data.hpp"
#include "json.hpp"

namespace codecal {

// Accepted source keys for each target field, in priority order. The first
// record of a shard decides which key is used for the whole shard.
struct CalibriLayout {
  std::vector<std::string> problem_id = {"task_id", "problem_id", "question_id"};
  std::vector<std::string> sample_id = {"sample_id", "generation_id", "id"};
  std::vector<std::string> language = {"language", "lang"};
  std::vector<std::string> token_logprobs = {"token_logprobs", "logprobs"};
  std::vector<std::string> label = {"passed", "label", "correct", "is_correct"};
  std::vector<std::string> difficulty = {"difficulty", "level"};
  std::vector<std::string> code_text = {"code", "code_text", "solution"};
  std::vector<std::string> generation = {"generation", "response", "completion"};
  std::vector<std::string> tokens = {"tokens"};
  std::vector<std::string> token_offsets = {"token_offsets", "offsets"};
};

struct ConvertOptions {
  // Used when the shard carries no language key.
  std::optional<std::string> default_language;
  CalibriLayout layout;
};

struct ConvertResult {
  Dataset dataset;
  std::size_t skipped_missing_logprobs = 0;
  std::size_t missing_code_span = 0;
  // (source key, target field) for every mapped field, in schema order.
  std::vector<std::pair<std::string, std::string>> mapping;

  nlohmann::json Metadata(const std::string& source) const;
};

// Reads JSON lines, or one JSON array, of source records. Offline only.
ConvertResult ConvertCalibri(std::istream& in, const std::string& source,
                             const ConvertOptions& opt);
ConvertResult ConvertCalibri(const std::filesystem::path& path,
                             const ConvertOptions& opt);

}  // namespace codecal

#endif  // CODECAL_CONVERT_HPP_

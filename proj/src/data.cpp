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
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "codecal/error.hpp"

namespace codecal {

using nlohmann::json;

namespace {

std::string Quote(std::string_view s) {
  return "'" + std::string(s) + "'";
}

const json* Find(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string RequireString(const json& j, const char* key,
                          std::string_view where) {
  const json* v = Find(j, key);
  if (v == nullptr) {
    throw DataError(std::string(where) + ": missing required key " +
                    Quote(key));
  }
  if (!v->is_string()) {
    throw DataError(std::string(where) + ": " + Quote(key) +
                    " must be a string");
  }
  return v->get<std::string>();
}

std::optional<std::string> OptionalString(const json& j, const char* key,
                                          std::string_view where) {
  const json* v = Find(j, key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_string()) {
    throw DataError(std::string(where) + ": " + Quote(key) +
                    " must be a string");
  }
  return v->get<std::string>();
}

std::size_t AsIndex(const json& v, std::string_view where) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw DataError(std::string(where) +
                    ": code_span entries must be non-negative integers");
  }
  return v.get<std::size_t>();
}

}  // namespace

void ValidateSample(const Sample& s) {
  for (double lp : s.token_logprobs) {
    if (!std::isfinite(lp) || lp > 0.0) {
      throw DataError("sample " + Quote(s.sample_id) +
                      ": token log-probabilities must be finite and <= 0");
    }
  }
  if (s.code_span) {
    const CodeSpan& span = *s.code_span;
    if (!(span.begin < span.end && span.end <= s.token_logprobs.size())) {
      throw DataError("sample " + Quote(s.sample_id) + ": code_span [" +
                      std::to_string(span.begin) + ", " +
                      std::to_string(span.end) + ") invalid for " +
                      std::to_string(s.token_logprobs.size()) + " tokens");
    }
  }
  if (s.label != 0 && s.label != 1) {
    throw DataError("sample " + Quote(s.sample_id) + ": label must be 0 or 1");
  }
}

json SampleToJson(const Sample& s) {
  json j;
  j["problem_id"] = s.problem_id;
  j["sample_id"] = s.sample_id;
  j["language"] = s.language;
  j["token_logprobs"] = s.token_logprobs;
  j["label"] = s.label;
  if (s.code_span) j["code_span"] = {s.code_span->begin, s.code_span->end};
  if (s.difficulty) j["difficulty"] = *s.difficulty;
  if (s.code_text) j["code_text"] = *s.code_text;
  return j;
}

Sample SampleFromJson(const json& j, std::string_view where) {
  if (!j.is_object()) {
    throw DataError(std::string(where) + ": record must be a JSON object");
  }
  Sample s;
  s.problem_id = RequireString(j, "problem_id", where);
  s.sample_id = RequireString(j, "sample_id", where);
  s.language = RequireString(j, "language", where);

  const json* lps = Find(j, "token_logprobs");
  if (lps == nullptr || !lps->is_array()) {
    throw DataError(std::string(where) +
                    ": 'token_logprobs' must be an array of numbers");
  }
  s.token_logprobs.reserve(lps->size());
  for (const json& v : *lps) {
    if (!v.is_number()) {
      throw DataError(std::string(where) +
                      ": 'token_logprobs' must be an array of numbers");
    }
    s.token_logprobs.push_back(v.get<double>());
  }

  const json* label = Find(j, "label");
  if (label == nullptr || !label->is_number_integer() ||
      (label->get<std::int64_t>() != 0 && label->get<std::int64_t>() != 1)) {
    throw DataError(std::string(where) + ": 'label' must be 0 or 1");
  }
  s.label = label->get<int>();

  if (const json* span = Find(j, "code_span")) {
    if (!span->is_array() || span->size() != 2) {
      throw DataError(std::string(where) +
                      ": 'code_span' must be a pair [start, end]");
    }
    s.code_span = CodeSpan{AsIndex((*span)[0], where),
                           AsIndex((*span)[1], where)};
  }
  s.difficulty = OptionalString(j, "difficulty", where);
  s.code_text = OptionalString(j, "code_text", where);

  ValidateSample(s);
  return s;
}

Dataset ParseRecords(std::istream& in, std::string provenance) {
  Dataset d;
  d.provenance = std::move(provenance);
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    const std::string where = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    Sample s = SampleFromJson(j, where);
    if (!seen.insert(s.sample_id).second) {
      throw DataError(where + ": duplicate sample_id " + Quote(s.sample_id));
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

Dataset LoadRecords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return ParseRecords(in, path.string());
}

void WriteRecords(std::ostream& out, const Dataset& d) {
  for (const Sample& s : d.samples) out << SampleToJson(s).dump() << '\n';
}

void WriteRecords(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  WriteRecords(out, d);
}

std::optional<CodeSpan> ExtractCodeSpan(
    std::string_view text, std::span<const CharRange> token_offsets) {
  std::size_t prev_end = 0;
  for (std::size_t t = 0; t < token_offsets.size(); ++t) {
    const CharRange& r = token_offsets[t];
    if (r.begin > r.end || r.begin < prev_end || r.end > text.size()) {
      throw DataError("token offset " + std::to_string(t) +
                      " overlaps, descends, or exceeds the text");
    }
    prev_end = r.end;
  }

  // Line starts, then the first opening fence and the next closing fence.
  std::optional<std::size_t> code_begin;
  std::optional<std::size_t> code_end;
  std::size_t line_start = 0;
  while (line_start < text.size()) {
    const std::size_t nl = text.find('\n', line_start);
    const bool is_fence = text.substr(line_start, 3) == "```";
    if (is_fence) {
      if (!code_begin) {
        if (nl == std::string_view::npos) break;
        code_begin = nl + 1;
      } else {
        code_end = line_start;
        break;
      }
    }
    if (nl == std::string_view::npos) break;
    line_start = nl + 1;
  }
  if (!code_begin || !code_end) return std::nullopt;

  std::optional<std::size_t> first;
  std::size_t last = 0;
  for (std::size_t t = 0; t < token_offsets.size(); ++t) {
    const CharRange& r = token_offsets[t];
    const bool overlaps =
        r.begin == r.end ? (r.begin >= *code_begin && r.begin < *code_end)
                         : (r.begin < *code_end && r.end > *code_begin);
    if (overlaps) {
      if (!first) first = t;
      last = t;
    }
  }
  if (!first) return std::nullopt;
  return CodeSpan{*first, last + 1};
}

void SplitSpec::Validate() const {
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f > 0.0 && f < 1.0)) {
      throw UsageError("split fractions must lie in (0, 1)");
    }
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw UsageError("split fractions must sum to 1");
  }
}

std::uint64_t ProblemHash(std::uint64_t seed, std::string_view problem_id) {
  std::uint64_t h = 14695981039346656037ULL;
  const auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : problem_id) mix_byte(static_cast<unsigned char>(c));
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

std::vector<SplitPart> AssignSplits(std::span<const std::string> problem_ids,
                                    const SplitSpec& spec) {
  spec.Validate();
  std::vector<std::pair<std::uint64_t, std::string_view>> keyed;
  {
    std::unordered_set<std::string_view> unique(problem_ids.begin(),
                                                problem_ids.end());
    keyed.reserve(unique.size());
    for (std::string_view id : unique) {
      keyed.emplace_back(ProblemHash(spec.seed, id), id);
    }
  }
  const auto n = static_cast<std::int64_t>(keyed.size());
  if (n < 3) {
    throw DataError("need at least 3 distinct problem ids to split, got " +
                    std::to_string(n));
  }
  std::sort(keyed.begin(), keyed.end());

  const std::int64_t n_train =
      std::clamp<std::int64_t>(std::llround(spec.train_frac * n), 1, n - 2);
  const std::int64_t n_val = std::clamp<std::int64_t>(
      std::llround(spec.val_frac * n), 1, n - 1 - n_train);

  std::unordered_map<std::string_view, SplitPart> part;
  part.reserve(keyed.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const SplitPart p = i < n_train           ? SplitPart::kTrain
                        : i < n_train + n_val ? SplitPart::kVal
                                              : SplitPart::kTest;
    part.emplace(keyed[i].second, p);
  }
  std::vector<SplitPart> out;
  out.reserve(problem_ids.size());
  for (const std::string& id : problem_ids) out.push_back(part.at(id));
  return out;
}

DatasetSplit SplitByProblem(const Dataset& d, const SplitSpec& spec) {
  if (d.empty()) throw DataError("cannot split an empty dataset");
  std::vector<std::string> ids;
  ids.reserve(d.size());
  for (const Sample& s : d.samples) ids.push_back(s.problem_id);
  const std::vector<SplitPart> parts = AssignSplits(ids, spec);

  DatasetSplit out;
  out.train.provenance = d.provenance + " [train]";
  out.val.provenance = d.provenance + " [val]";
  out.test.provenance = d.provenance + " [test]";
  for (std::size_t i = 0; i < d.size(); ++i) {
    Dataset& target = parts[i] == SplitPart::kTrain ? out.train
                      : parts[i] == SplitPart::kVal ? out.val
                                                    : out.test;
    target.samples.push_back(d.samples[i]);
  }
  return out;
}

}  // namespace codecal

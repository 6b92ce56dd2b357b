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

#include "codecal/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <unordered_set>

#include "codecal/kernels.hpp"

namespace codecal {

using nlohmann::json;

std::string_view VariantName(ConfidenceVariant v) {
  switch (v) {
    case ConfidenceVariant::kAvgProb:
      return "avg_prob";
    case ConfidenceVariant::kCodeProb:
      return "code_prob";
    case ConfidenceVariant::kTailProb:
      return "tail_prob";
  }
  return "?";
}

ConfidenceVariant ParseConfidenceVariant(std::string_view name) {
  for (auto v : {ConfidenceVariant::kAvgProb, ConfidenceVariant::kCodeProb,
                 ConfidenceVariant::kTailProb}) {
    if (VariantName(v) == name) return v;
  }
  throw UsageError("unknown confidence method '" + std::string(name) +
                   "' (expected avg_prob, code_prob or tail_prob)");
}

double ConfidenceScore(const Sample& s, const ConfidenceMethod& m) {
  const std::size_t n = s.token_logprobs.size();
  if (n == 0) {
    throw DataError("sample '" + s.sample_id + "' has no tokens");
  }
  std::size_t begin = 0;
  std::size_t end = n;
  switch (m.variant) {
    case ConfidenceVariant::kAvgProb:
      break;
    case ConfidenceVariant::kCodeProb:
      if (!s.code_span || s.code_span->size() == 0) {
        throw MissingCodeError("sample '" + s.sample_id +
                               "' has no extracted code span");
      }
      begin = s.code_span->begin;
      end = s.code_span->end;
      break;
    case ConfidenceVariant::kTailProb:
      if (m.tail_k < 1) throw UsageError("tail_k must be >= 1");
      begin = n - std::min<std::size_t>(n, m.tail_k);
      break;
  }
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += s.token_logprobs[i];
  return std::exp(sum / static_cast<double>(end - begin));
}

ScoredSample Score(const Sample& s, const ConfidenceMethod& m) {
  return {s, ConfidenceScore(s, m)};
}

ScoredDataset ScoreDataset(const Dataset& d, const ConfidenceMethod& m,
                           bool skip_missing) {
  if (m.variant == ConfidenceVariant::kTailProb && m.tail_k < 1) {
    throw UsageError("tail_k must be >= 1");
  }
  const std::size_t n = d.size();
  std::vector<double> p(n, 0.0);
  std::vector<std::optional<std::string>> failure(n);
  std::vector<bool> missing_code(n, false);
  kernels::ParallelFor(n, [&](std::size_t i) {
    try {
      p[i] = ConfidenceScore(d.samples[i], m);
    } catch (const MissingCodeError& e) {
      failure[i] = e.what();
      missing_code[i] = true;
    } catch (const Error& e) {
      failure[i] = e.what();
    }
  });

  ScoredDataset out;
  out.method = std::string(VariantName(m.variant));
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (failure[i]) {
      if (skip_missing) {
        ++out.skipped;
        continue;
      }
      if (missing_code[i]) throw MissingCodeError(*failure[i]);
      throw DataError(*failure[i]);
    }
    out.samples.push_back({d.samples[i], p[i]});
  }
  return out;
}

void WriteScored(std::ostream& out, const ScoredDataset& d) {
  for (const ScoredSample& s : d.samples) {
    json j = SampleToJson(s.sample);
    j["p_hat"] = s.p_hat;
    j["method"] = d.method;
    out << j.dump() << '\n';
  }
}

void WriteScored(const std::filesystem::path& path, const ScoredDataset& d) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  WriteScored(out, d);
}

ScoredDataset ParseScored(std::istream& in) {
  ScoredDataset out;
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
    ScoredSample s{SampleFromJson(j, where), 0.0};
    auto p = j.find("p_hat");
    if (p == j.end() || !p->is_number()) {
      throw DataError(where + ": scored record needs numeric 'p_hat'");
    }
    s.p_hat = p->get<double>();
    if (!(s.p_hat >= 0.0 && s.p_hat <= 1.0)) {
      throw DataError(where + ": 'p_hat' outside [0, 1]");
    }
    if (auto m = j.find("method"); m != j.end() && m->is_string()) {
      if (out.method.empty()) out.method = m->get<std::string>();
    }
    if (!seen.insert(s.sample.sample_id).second) {
      throw DataError(where + ": duplicate sample_id '" + s.sample.sample_id +
                      "'");
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

ScoredDataset LoadScored(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return ParseScored(in);
}

std::vector<double> ScoresOf(std::span<const ScoredSample> s) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(x.p_hat);
  return out;
}

std::vector<int> LabelsOf(std::span<const ScoredSample> s) {
  std::vector<int> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(x.sample.label);
  return out;
}

Dataset DatasetOf(std::span<const ScoredSample> s) {
  Dataset d;
  d.samples.reserve(s.size());
  for (const auto& x : s) d.samples.push_back(x.sample);
  return d;
}

}  // namespace codecal

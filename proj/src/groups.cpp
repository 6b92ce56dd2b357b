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

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>
#include <utility>

#include "codecal/error.hpp"

namespace codecal {

using nlohmann::json;

GroupSet::GroupSet(std::vector<std::string> names, std::size_t num_rows,
                   std::vector<std::uint8_t> membership)
    : names_(std::move(names)),
      num_rows_(num_rows),
      membership_(std::move(membership)),
      counts_(names_.size(), 0) {
  if (membership_.size() != num_rows_ * names_.size()) {
    throw DataError("membership matrix size does not match rows x groups");
  }
  std::unordered_set<std::string> unique;
  for (const std::string& n : names_) {
    if (!unique.insert(n).second) {
      throw DataError("duplicate group name '" + n + "'");
    }
  }
  for (std::size_t r = 0; r < num_rows_; ++r) {
    for (std::size_t g = 0; g < names_.size(); ++g) {
      const std::uint8_t v = membership_[r * names_.size() + g];
      if (v > 1) throw DataError("membership entries must be 0 or 1");
      counts_[g] += v;
    }
  }
}

double GroupSet::Mass(std::size_t group) const {
  if (num_rows_ == 0) return 0.0;
  return static_cast<double>(counts_[group]) / static_cast<double>(num_rows_);
}

std::optional<std::size_t> GroupSet::IndexOf(std::string_view name) const {
  for (std::size_t g = 0; g < names_.size(); ++g) {
    if (names_[g] == name) return g;
  }
  return std::nullopt;
}

GroupSet GroupSet::Select(std::span<const std::size_t> columns) const {
  std::vector<std::string> names;
  for (std::size_t c : columns) names.push_back(names_.at(c));
  std::vector<std::uint8_t> m(num_rows_ * columns.size());
  for (std::size_t r = 0; r < num_rows_; ++r) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      m[r * columns.size() + j] = Contains(r, columns[j]) ? 1 : 0;
    }
  }
  return GroupSet(std::move(names), num_rows_, std::move(m));
}

namespace {

void CheckQuantiles(const std::vector<double>& q, const char* what) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] > 0.0 && q[i] < 1.0) || (i > 0 && q[i] <= q[i - 1])) {
      throw UsageError(std::string(what) +
                       " quantiles must be strictly increasing in (0, 1)");
    }
  }
}

std::vector<std::string> BandNames(std::string_view prefix, std::size_t bands) {
  std::vector<std::string> names;
  const std::string p(prefix);
  if (bands == 2) return {p + "low", p + "high"};
  if (bands == 3) return {p + "low", p + "mid", p + "high"};
  for (std::size_t b = 0; b < bands; ++b) {
    names.push_back(p + "q" + std::to_string(b));
  }
  return names;
}

// Builds a GroupSet from a per-row column index (nullopt = no column).
GroupSet OneHot(std::vector<std::string> names,
                const std::vector<std::optional<std::size_t>>& column) {
  const std::size_t k = names.size();
  std::vector<std::uint8_t> m(column.size() * k, 0);
  for (std::size_t r = 0; r < column.size(); ++r) {
    if (column[r]) m[r * k + *column[r]] = 1;
  }
  return GroupSet(std::move(names), column.size(), std::move(m));
}

std::optional<double> Feature(const Sample& s, std::string_view feature) {
  if (!s.code_text) return std::nullopt;
  if (feature == "chars") return static_cast<double>(CharCount(*s.code_text));
  if (feature == "loc") return static_cast<double>(LineCount(*s.code_text));
  return static_cast<double>(BranchCount(*s.code_text));
}

ThresholdGrouping FitThresholds(std::string feature, std::string_view prefix,
                                std::vector<double> quantiles,
                                const Dataset& fit_on, bool allow_unknown) {
  if (fit_on.empty()) throw DataError("cannot fit groups on an empty dataset");
  ThresholdGrouping t;
  t.feature = std::move(feature);
  t.quantiles = std::move(quantiles);
  std::vector<double> values;
  bool any_unknown = false;
  for (const Sample& s : fit_on.samples) {
    if (auto v = Feature(s, t.feature)) {
      values.push_back(*v);
    } else if (allow_unknown) {
      any_unknown = true;
    } else {
      throw DataError("sample '" + s.sample_id + "' has no code_text");
    }
  }
  if (values.empty()) {
    throw DataError("no sample in the fitting set has code_text");
  }
  for (double q : t.quantiles) t.cutpoints.push_back(EmpiricalQuantile(values, q));
  t.names = BandNames(prefix, t.cutpoints.size() + 1);
  if (any_unknown) t.unknown_name = std::string(prefix) + "unknown";
  return t;
}

GroupSet ApplyThresholds(const ThresholdGrouping& t, const Dataset& d) {
  std::vector<std::string> names = t.names;
  const bool has_unknown = !t.unknown_name.empty();
  if (has_unknown) names.push_back(t.unknown_name);
  std::vector<std::optional<std::size_t>> column(d.size());
  for (std::size_t r = 0; r < d.size(); ++r) {
    if (auto v = Feature(d.samples[r], t.feature)) {
      column[r] = BandOf(*v, t.cutpoints);
    } else if (has_unknown) {
      column[r] = t.names.size();
    } else if (t.feature == "branches") {
      throw DataError("sample '" + d.samples[r].sample_id +
                      "' has no code_text");
    }
  }
  return OneHot(std::move(names), column);
}

GroupSet ApplyVocabulary(const std::vector<std::string>& vocab,
                         const Dataset& d, bool difficulty) {
  std::vector<std::optional<std::size_t>> column(d.size());
  for (std::size_t r = 0; r < d.size(); ++r) {
    const Sample& s = d.samples[r];
    std::string_view key;
    if (difficulty) {
      if (!s.difficulty) {
        throw DataError("sample '" + s.sample_id + "' has no difficulty label");
      }
      key = *s.difficulty;
    } else {
      if (s.language.empty()) {
        throw DataError("sample '" + s.sample_id + "' has no language tag");
      }
      key = s.language;
    }
    auto it = std::lower_bound(vocab.begin(), vocab.end(), key);
    if (it != vocab.end() && *it == key) column[r] = it - vocab.begin();
  }
  return OneHot(vocab, column);
}

std::vector<std::string> Vocabulary(const Dataset& d, bool difficulty) {
  std::set<std::string> v;
  for (const Sample& s : d.samples) {
    if (difficulty) {
      if (!s.difficulty) {
        throw DataError("sample '" + s.sample_id + "' has no difficulty label");
      }
      v.insert(*s.difficulty);
    } else {
      if (s.language.empty()) {
        throw DataError("sample '" + s.sample_id + "' has no language tag");
      }
      v.insert(s.language);
    }
  }
  return {v.begin(), v.end()};
}

std::string_view ComplexityName(ComplexitySource c) {
  switch (c) {
    case ComplexitySource::kNone:
      return "none";
    case ComplexitySource::kDifficultyLabel:
      return "difficulty_label";
    case ComplexitySource::kBranchHeuristic:
      return "branch_heuristic";
  }
  return "none";
}

ComplexitySource ParseComplexity(std::string_view name) {
  for (auto c : {ComplexitySource::kNone, ComplexitySource::kDifficultyLabel,
                 ComplexitySource::kBranchHeuristic}) {
    if (ComplexityName(c) == name) return c;
  }
  throw DataError("unknown complexity source '" + std::string(name) + "'");
}

json ThresholdsToJson(const ThresholdGrouping& t) {
  return {{"feature", t.feature},     {"quantiles", t.quantiles},
          {"cutpoints", t.cutpoints}, {"names", t.names},
          {"unknown_name", t.unknown_name}};
}

ThresholdGrouping ThresholdsFromJson(const json& j) {
  ThresholdGrouping t;
  t.feature = j.at("feature").get<std::string>();
  t.quantiles = j.at("quantiles").get<std::vector<double>>();
  t.cutpoints = j.at("cutpoints").get<std::vector<double>>();
  t.names = j.at("names").get<std::vector<std::string>>();
  t.unknown_name = j.value("unknown_name", "");
  if (t.names.size() != t.cutpoints.size() + 1) {
    throw DataError("threshold grouping needs one more name than cutpoints");
  }
  return t;
}

}  // namespace

void GroupingConfig::Validate() const {
  CheckQuantiles(chars_quantiles, "chars");
  CheckQuantiles(loc_quantiles, "loc");
  CheckQuantiles(complexity_quantiles, "complexity");
}

double EmpiricalQuantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double h = n * q;
  const double k = std::round(h);
  if (std::abs(h - k) < 1e-9 && k >= 1 && k < n) {
    const auto i = static_cast<std::size_t>(k);
    return 0.5 * (values[i - 1] + values[i]);
  }
  const auto rank = static_cast<std::size_t>(
      std::clamp(std::ceil(h - 1e-9), 1.0, n));
  return values[rank - 1];
}

std::size_t CharCount(std::string_view text) {
  return static_cast<std::size_t>(
      std::count_if(text.begin(), text.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
      }));
}

std::size_t LineCount(std::string_view text) {
  if (text.empty()) return 0;
  std::size_t lines = static_cast<std::size_t>(
      std::count(text.begin(), text.end(), '\n'));
  if (text.back() != '\n') ++lines;
  return lines;
}

std::size_t BranchCount(std::string_view code) {
  static constexpr std::string_view kKeywords[] = {"if", "for", "while",
                                                   "case", "catch"};
  const auto is_ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < code.size()) {
    if (is_ident(code[i])) {
      std::size_t j = i;
      while (j < code.size() && is_ident(code[j])) ++j;
      const std::string_view word = code.substr(i, j - i);
      for (std::string_view k : kKeywords) count += word == k;
      i = j;
      continue;
    }
    const std::string_view two = code.substr(i, 2);
    if (two == "&&" || two == "||") {
      ++count;
      i += 2;
      continue;
    }
    count += code[i] == '?';
    ++i;
  }
  return count;
}

std::size_t BandOf(double value, std::span<const double> cutpoints) {
  return static_cast<std::size_t>(
      std::upper_bound(cutpoints.begin(), cutpoints.end(), value) -
      cutpoints.begin());
}

std::vector<std::string> Grouping::Names() const {
  std::vector<std::string> names;
  if (always_on) names.push_back("ALL");
  names.insert(names.end(), languages.begin(), languages.end());
  for (const ThresholdGrouping& t : length) {
    names.insert(names.end(), t.names.begin(), t.names.end());
    if (!t.unknown_name.empty()) names.push_back(t.unknown_name);
  }
  if (complexity_source == ComplexitySource::kDifficultyLabel) {
    names.insert(names.end(), difficulty_labels.begin(),
                 difficulty_labels.end());
  } else if (branches) {
    names.insert(names.end(), branches->names.begin(), branches->names.end());
  }
  return names;
}

GroupSet Grouping::Apply(const Dataset& d) const {
  std::vector<GroupSet> parts;
  parts.emplace_back(d.size());
  if (!languages.empty()) parts.push_back(ApplyVocabulary(languages, d, false));
  for (const ThresholdGrouping& t : length) parts.push_back(ApplyThresholds(t, d));
  if (complexity_source == ComplexitySource::kDifficultyLabel) {
    parts.push_back(ApplyVocabulary(difficulty_labels, d, true));
  } else if (complexity_source == ComplexitySource::kBranchHeuristic) {
    parts.push_back(ApplyThresholds(*branches, d));
  }
  return Assemble(parts, always_on);
}

Grouping FitGrouping(const GroupingConfig& cfg, const Dataset& fit_on) {
  cfg.Validate();
  if (fit_on.empty()) throw DataError("cannot fit groups on an empty dataset");
  Grouping g;
  g.always_on = cfg.always_on;
  if (cfg.use_language) g.languages = Vocabulary(fit_on, false);
  for (LengthMetric m : cfg.length_metrics) {
    if (m == LengthMetric::kChars) {
      g.length.push_back(
          FitThresholds("chars", "len_", cfg.chars_quantiles, fit_on, true));
    } else {
      g.length.push_back(
          FitThresholds("loc", "loc_", cfg.loc_quantiles, fit_on, true));
    }
  }
  g.complexity_source = cfg.complexity_source;
  if (cfg.complexity_source == ComplexitySource::kDifficultyLabel) {
    g.difficulty_labels = Vocabulary(fit_on, true);
  } else if (cfg.complexity_source == ComplexitySource::kBranchHeuristic) {
    g.branches = FitThresholds("branches", "cx_", cfg.complexity_quantiles,
                               fit_on, false);
  }
  return g;
}

json GroupingToJson(const Grouping& g) {
  json j;
  j["format"] = "codecal-grouping";
  j["version"] = 1;
  j["always_on"] = g.always_on;
  j["languages"] = g.languages;
  j["length"] = json::array();
  for (const auto& t : g.length) j["length"].push_back(ThresholdsToJson(t));
  j["complexity_source"] = ComplexityName(g.complexity_source);
  j["difficulty_labels"] = g.difficulty_labels;
  j["branches"] = g.branches ? ThresholdsToJson(*g.branches) : json(nullptr);
  j["names"] = g.Names();
  return j;
}

Grouping GroupingFromJson(const json& j) {
  try {
    if (j.at("format") != "codecal-grouping" || j.at("version") != 1) {
      throw DataError("not a version-1 codecal grouping document");
    }
    Grouping g;
    g.always_on = j.at("always_on").get<bool>();
    g.languages = j.at("languages").get<std::vector<std::string>>();
    for (const json& t : j.at("length")) g.length.push_back(ThresholdsFromJson(t));
    g.complexity_source =
        ParseComplexity(j.at("complexity_source").get<std::string>());
    g.difficulty_labels =
        j.at("difficulty_labels").get<std::vector<std::string>>();
    if (!j.at("branches").is_null()) g.branches = ThresholdsFromJson(j.at("branches"));
    if (g.complexity_source == ComplexitySource::kBranchHeuristic && !g.branches) {
      throw DataError("branch_heuristic grouping without cutpoints");
    }
    return g;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed grouping document: ") + e.what());
  }
}

GroupSet BuildLanguageGroups(const Dataset& d) {
  return ApplyVocabulary(Vocabulary(d, false), d, false);
}

GroupSet BuildLanguageGroups(const Dataset& d,
                             std::span<const std::string> languages) {
  std::vector<std::string> vocab(languages.begin(), languages.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  return ApplyVocabulary(vocab, d, false);
}

GroupSet BuildLengthGroups(const Dataset& d, const GroupingConfig& cfg,
                           const Dataset& fit_on) {
  GroupingConfig only_length = cfg;
  only_length.use_language = false;
  only_length.complexity_source = ComplexitySource::kNone;
  only_length.always_on = false;
  return FitGrouping(only_length, fit_on).Apply(d);
}

GroupSet BuildComplexityGroups(const Dataset& d, const GroupingConfig& cfg,
                               const Dataset& fit_on) {
  GroupingConfig only_complexity = cfg;
  only_complexity.use_language = false;
  only_complexity.length_metrics.clear();
  only_complexity.always_on = false;
  return FitGrouping(only_complexity, fit_on).Apply(d);
}

GroupSet Assemble(std::span<const GroupSet> parts, bool always_on) {
  if (parts.empty()) {
    throw DataError("assemble needs at least one part to fix the row count");
  }
  const std::size_t rows = parts.front().num_rows();
  std::vector<std::string> names;
  if (always_on) names.push_back("ALL");
  for (const GroupSet& p : parts) {
    if (p.num_rows() != rows) {
      throw DataError("group parts disagree on the number of rows");
    }
    names.insert(names.end(), p.names().begin(), p.names().end());
  }
  const std::size_t k = names.size();
  std::vector<std::uint8_t> m(rows * k, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t c = 0;
    if (always_on) m[r * k + c++] = 1;
    for (const GroupSet& p : parts) {
      for (std::size_t g = 0; g < p.num_groups(); ++g) {
        m[r * k + c++] = p.Contains(r, g) ? 1 : 0;
      }
    }
  }
  return GroupSet(std::move(names), rows, std::move(m));
}

}  // namespace codecal

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

#ifndef CODECAL_GROUPS_HPP_
#define CODECAL_GROUPS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codecal/data.hpp"
#include "json.hpp"

namespace codecal {

// Named binary group functions materialized over an ordered set of samples.
// Membership is stored row-major: rows are samples, columns are groups.
class GroupSet {
 public:
  GroupSet() = default;
  // An empty group set over `num_rows` samples.
  explicit GroupSet(std::size_t num_rows) : num_rows_(num_rows) {}
  GroupSet(std::vector<std::string> names, std::size_t num_rows,
           std::vector<std::uint8_t> membership);

  std::size_t num_groups() const { return names_.size(); }
  std::size_t num_rows() const { return num_rows_; }
  const std::vector<std::string>& names() const { return names_; }

  bool Contains(std::size_t row, std::size_t group) const {
    return membership_[row * names_.size() + group] != 0;
  }
  std::span<const std::uint8_t> Row(std::size_t row) const {
    return {membership_.data() + row * names_.size(), names_.size()};
  }
  std::size_t Count(std::size_t group) const { return counts_[group]; }
  // P(g): fraction of rows in the group; 0 for an empty set of rows.
  double Mass(std::size_t group) const;
  bool Degenerate(std::size_t group) const { return counts_[group] == 0; }
  std::optional<std::size_t> IndexOf(std::string_view name) const;

  // Copy restricted to the given columns, in the given order.
  GroupSet Select(std::span<const std::size_t> columns) const;

 private:
  std::vector<std::string> names_;
  std::size_t num_rows_ = 0;
  std::vector<std::uint8_t> membership_;
  std::vector<std::size_t> counts_;
};

enum class LengthMetric { kChars, kLoc };
enum class ComplexitySource { kNone, kDifficultyLabel, kBranchHeuristic };

struct GroupingConfig {
  bool use_language = true;
  std::vector<LengthMetric> length_metrics = {LengthMetric::kChars,
                                              LengthMetric::kLoc};
  std::vector<double> chars_quantiles = {0.5};
  std::vector<double> loc_quantiles = {0.5};
  ComplexitySource complexity_source = ComplexitySource::kNone;
  std::vector<double> complexity_quantiles = {1.0 / 3.0, 2.0 / 3.0};
  // Prepend the all-ones group "ALL".
  bool always_on = false;

  void Validate() const;
};

// Quantile of `values` (need not be sorted): the ceil(n*q)-th order
// statistic, averaging the two neighbours when n*q is an integer.
double EmpiricalQuantile(std::vector<double> values, double q);

// Number of Unicode code points in `text` (UTF-8).
std::size_t CharCount(std::string_view text);
// Number of lines; a trailing newline does not open a new line.
std::size_t LineCount(std::string_view text);
// Occurrences of the branch keywords if/for/while/case/catch (whole words)
// and the operators &&, ||, ?.
std::size_t BranchCount(std::string_view code);

// Band of a value against sorted cutpoints: 0 below the first, k when
// value >= cutpoints[k-1]. Values at a cutpoint go to the upper band.
std::size_t BandOf(double value, std::span<const double> cutpoints);

// Threshold grouping on one numeric feature, fitted on a training set.
struct ThresholdGrouping {
  std::string feature;  // "chars", "loc", "branches"
  std::vector<double> quantiles;
  std::vector<double> cutpoints;
  std::vector<std::string> names;  // one per band
  std::string unknown_name;        // empty when no unknown column
};

// A grouping fitted on training data that can be applied to any dataset
// with the same column layout.
struct Grouping {
  bool always_on = false;
  std::vector<std::string> languages;
  std::vector<ThresholdGrouping> length;
  ComplexitySource complexity_source = ComplexitySource::kNone;
  std::vector<std::string> difficulty_labels;
  std::optional<ThresholdGrouping> branches;

  // Column names in the order Apply() emits them.
  std::vector<std::string> Names() const;
  GroupSet Apply(const Dataset& d) const;
};

Grouping FitGrouping(const GroupingConfig& cfg, const Dataset& fit_on);

nlohmann::json GroupingToJson(const Grouping& g);
Grouping GroupingFromJson(const nlohmann::json& j);

// One group per distinct language, sorted by name.
GroupSet BuildLanguageGroups(const Dataset& d);
// Fixed vocabulary; samples with other languages belong to no column.
GroupSet BuildLanguageGroups(const Dataset& d,
                             std::span<const std::string> languages);
// Cutpoints come from `fit_on` only.
GroupSet BuildLengthGroups(const Dataset& d, const GroupingConfig& cfg,
                           const Dataset& fit_on);
GroupSet BuildComplexityGroups(const Dataset& d, const GroupingConfig& cfg,
                               const Dataset& fit_on);

// Column-concatenates the parts, optionally prepending "ALL".
GroupSet Assemble(std::span<const GroupSet> parts, bool always_on);

}  // namespace codecal

#endif  // CODECAL_GROUPS_HPP_

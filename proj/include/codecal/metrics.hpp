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

#ifndef CODECAL_METRICS_HPP_
#define CODECAL_METRICS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codecal/binning.hpp"
#include "codecal/groups.hpp"
#include "json.hpp"

namespace codecal {

// Every metric takes parallel spans of confidences in [0, 1] and labels in
// {0, 1} and throws DataError on empty input.

double Ece(std::span<const double> p, std::span<const int> y,
           const BinGrid& grid);
double Brier(std::span<const double> p, std::span<const int> y);
double BaseRate(std::span<const int> y);
// p_r * (1 - p_r).
double BrierRef(std::span<const int> y);

// (B_ref - B) / B_ref. When B_ref = 0 the result is 1 if B = 0 and -infinity
// otherwise; -infinity is the only non-finite value ever returned.
double Bss(std::span<const double> p, std::span<const int> y);
// Fraction of samples where (p >= 0.5) == (y == 1).
double AccuracyAtHalf(std::span<const double> p, std::span<const int> y);

// Group average squared calibration error over disjoint bins. Throws
// DataError when the group has no member among the samples.
double Gasce(std::span<const double> p, std::span<const int> y,
             const GroupSet& groups, std::size_t group, const BinGrid& grid);
double Gasce(std::span<const double> p, std::span<const int> y,
             const GroupSet& groups, std::string_view group,
             const BinGrid& grid);

struct GroupCheck {
  std::string name;
  double mass = 0.0;
  double gasce = 0.0;
  bool degenerate = false;
  bool pass = true;
};

// Pass iff P(g) * gASCE(g) < alpha. Degenerate groups pass vacuously.
std::vector<GroupCheck> MulticalibrationCheck(std::span<const double> p,
                                              std::span<const int> y,
                                              const GroupSet& groups,
                                              const BinGrid& grid,
                                              double alpha);

struct ReliabilityRow {
  int bin = 0;
  std::size_t count = 0;
  double conf = 0.0;
  double acc = 0.0;
};

// One row per occupied bin, in bin order.
std::vector<ReliabilityRow> ReliabilityTable(std::span<const double> p,
                                             std::span<const int> y,
                                             const BinGrid& grid);

struct GroupSummary {
  std::string name;
  std::size_t count = 0;
  double mass = 0.0;
  double mean_score = 0.0;
  double accuracy = 0.0;
  std::optional<double> gasce;  // nullopt for degenerate groups
};

struct EvalReport {
  std::string method;
  int m_bins = 0;
  std::size_t n = 0;
  double ece = 0.0;
  double brier = 0.0;
  double brier_ref = 0.0;
  double bss = 0.0;
  double accuracy = 0.0;
  double base_rate = 0.0;
  std::vector<GroupSummary> groups;
  std::vector<ReliabilityRow> reliability;
};

// Full report; `groups` may be null for a group-free evaluation.
EvalReport Evaluate(std::string method, std::span<const double> p,
                    std::span<const int> y, const GroupSet* groups,
                    const BinGrid& grid);

// BSS = -infinity is written as the string "-inf".
nlohmann::json ReportToJson(const EvalReport& r);
EvalReport ReportFromJson(const nlohmann::json& j);
EvalReport LoadReport(const std::filesystem::path& path);

// "bin,count,conf,acc" header, one line per occupied bin.
std::string ReliabilityCsv(const EvalReport& r);

// Fixed-precision text for a metric value, "-inf" for the BSS sentinel.
std::string FormatMetric(double v);

}  // namespace codecal

#endif  // CODECAL_METRICS_HPP_

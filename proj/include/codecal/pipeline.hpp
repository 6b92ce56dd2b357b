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

#ifndef CODECAL_PIPELINE_HPP_
#define CODECAL_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "codecal/calibrators.hpp"
#include "codecal/data.hpp"
#include "codecal/groups.hpp"
#include "codecal/metrics.hpp"
#include "codecal/scoring.hpp"
#include "json.hpp"

namespace codecal {

struct RunConfig {
  std::vector<Method> methods{AllMethods().begin(), AllMethods().end()};
  int m_bins = 20;
  ConfidenceMethod confidence;
  GroupingConfig grouping;
  SplitSpec split;
  double epsilon = 0.05;
  LsLoss ls_loss = LsLoss::kCrossEntropy;
  int max_iters = 1000;

  FitOptions Fit() const { return {m_bins, epsilon, ls_loss, max_iters}; }
  void Validate() const;
};

// Comma-separated method names, or "all".
std::vector<Method> ParseMethods(std::string_view list);
ComplexitySource ParseComplexitySource(std::string_view name);
LengthMetric ParseLengthMetric(std::string_view name);
LsLoss ParseLsLoss(std::string_view name);

// Overlays the keys present in `j` onto `base`. Unknown keys are a usage
// error so that typos do not silently fall back to defaults.
RunConfig RunConfigFromJson(const nlohmann::json& j, RunConfig base = {});
RunConfig LoadRunConfig(const std::filesystem::path& path, RunConfig base = {});

struct MethodOutcome {
  std::string name;
  std::optional<CalibratorModel> model;
  std::optional<EvalReport> report;
  std::string error;  // non-empty when the fit failed

  bool ok() const { return error.empty(); }
};

struct FitEvalResult {
  Grouping grouping;
  EvalReport uncalibrated;
  std::vector<MethodOutcome> methods;
};

// Fits the grouping and every requested calibrator on `train` (IGLB also
// reads `val`) and evaluates on `test`. A failing method is recorded and
// the others proceed.
FitEvalResult RunFitEval(const ScoredDataset& train, const ScoredDataset& val,
                         const ScoredDataset& test, const RunConfig& cfg);

// models/<m>.json, reports/<m>.json, reliability/<m>.csv, groups.json and
// comparison.csv with header method,bss,acc,ece,brier. The uncalibrated
// baseline is the first row.
void WriteFitEval(const FitEvalResult& r, const std::filesystem::path& out_dir);
std::string ComparisonCsv(const FitEvalResult& r);

struct AblationRow {
  std::string method;
  std::string groups;
  std::optional<double> bss;  // nullopt when the method failed
};

// Category names available under `cfg.grouping`: "complexity", "language",
// "length".
std::vector<std::string> GroupCategories(const GroupingConfig& cfg);

// Every non-empty subset of the configured categories, in lexicographic
// order of the '+'-joined subset name, with the uncalibrated baseline and
// each requested method per subset.
std::vector<AblationRow> RunAblation(const ScoredDataset& train,
                                     const ScoredDataset& val,
                                     const ScoredDataset& test,
                                     const RunConfig& cfg);
std::string AblationCsv(const std::vector<AblationRow>& rows);

struct ScoredSplit {
  ScoredDataset train;
  ScoredDataset val;
  ScoredDataset test;
};

// Problem-level split of scored records; see SplitByProblem.
ScoredSplit SplitScored(const ScoredDataset& d, const SplitSpec& spec);

// Calibrated copy of `d`: p_hat replaced, method suffixed with the model.
ScoredDataset ApplyModel(const CalibratorModel& model, const ScoredDataset& d,
                         const Grouping* grouping);

// Grouping applied to a scored dataset, checked against the names a model
// or report expects.
GroupSet GroupsFor(const Grouping& grouping, const ScoredDataset& d);

void WriteText(const std::filesystem::path& path, const std::string& text);
nlohmann::json ReadJson(const std::filesystem::path& path);

}  // namespace codecal

#endif  // CODECAL_PIPELINE_HPP_

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

#include "codecal/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "codecal/error.hpp"
#include "codecal/model_io.hpp"

namespace codecal {

namespace {

using nlohmann::json;

constexpr const char* kUncalibrated = "uncalibrated";

std::vector<std::string> SplitList(std::string_view list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    std::string item(list.substr(start, comma - start));
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(std::move(item));
    start = comma + 1;
  }
  return out;
}

template <typename T>
T Field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config: '") + key + "' has the wrong type");
  }
}

CalibrationSet MakeSet(const ScoredDataset& d, const Grouping& grouping) {
  return {ScoresOf(d.samples), LabelsOf(d.samples), GroupsFor(grouping, d)};
}

std::string Joined(const std::vector<std::string>& parts) {
  std::string s;
  for (const std::string& p : parts) s += (s.empty() ? "" : "+") + p;
  return s;
}

}  // namespace

void RunConfig::Validate() const {
  if (m_bins < 2) throw UsageError("the bin count M must be at least 2");
  if (methods.empty()) throw UsageError("no calibration methods selected");
  if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");
  if (max_iters < 0) throw UsageError("max_iters must be non-negative");
  if (confidence.tail_k < 1) throw UsageError("tail_k must be positive");
  grouping.Validate();
  split.Validate();
}

std::vector<Method> ParseMethods(std::string_view list) {
  if (list == "all") return {AllMethods().begin(), AllMethods().end()};
  std::vector<Method> out;
  for (const std::string& name : SplitList(list)) {
    const Method m = ParseMethod(name);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw UsageError("empty method list");
  return out;
}

ComplexitySource ParseComplexitySource(std::string_view name) {
  if (name == "none") return ComplexitySource::kNone;
  if (name == "difficulty" || name == "difficulty_label") {
    return ComplexitySource::kDifficultyLabel;
  }
  if (name == "branches" || name == "branch_heuristic") {
    return ComplexitySource::kBranchHeuristic;
  }
  throw UsageError("unknown complexity source '" + std::string(name) +
                   "' (expected none, difficulty or branches)");
}

LengthMetric ParseLengthMetric(std::string_view name) {
  if (name == "chars") return LengthMetric::kChars;
  if (name == "loc") return LengthMetric::kLoc;
  throw UsageError("unknown length metric '" + std::string(name) +
                   "' (expected chars or loc)");
}

LsLoss ParseLsLoss(std::string_view name) {
  if (name == "ce") return LsLoss::kCrossEntropy;
  if (name == "brier") return LsLoss::kBrier;
  throw UsageError("unknown ls_loss '" + std::string(name) + "' (expected ce or brier)");
}

RunConfig RunConfigFromJson(const json& j, RunConfig cfg) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const std::set<std::string> kKeys = {
      "methods",         "m_bins",           "confidence",       "tail_k",
      "language_groups", "length_metrics",   "chars_quantiles",  "loc_quantiles",
      "complexity",      "complexity_quantiles", "always_on",    "train_frac",
      "val_frac",        "test_frac",        "seed",             "epsilon",
      "ls_loss",         "max_iters"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kKeys.contains(it.key())) {
      throw UsageError("config: unknown key '" + it.key() + "'");
    }
  }
  if (j.contains("methods")) {
    const json& m = j.at("methods");
    cfg.methods = m.is_string() ? ParseMethods(m.get<std::string>())
                                : ParseMethods(Joined(Field<std::vector<std::string>>(j, "methods")));
  }
  if (j.contains("m_bins")) cfg.m_bins = Field<int>(j, "m_bins");
  if (j.contains("confidence")) {
    cfg.confidence.variant = ParseConfidenceVariant(Field<std::string>(j, "confidence"));
  }
  if (j.contains("tail_k")) cfg.confidence.tail_k = Field<int>(j, "tail_k");
  if (j.contains("language_groups")) cfg.grouping.use_language = Field<bool>(j, "language_groups");
  if (j.contains("length_metrics")) {
    cfg.grouping.length_metrics.clear();
    for (const auto& s : Field<std::vector<std::string>>(j, "length_metrics")) {
      cfg.grouping.length_metrics.push_back(ParseLengthMetric(s));
    }
  }
  if (j.contains("chars_quantiles")) {
    cfg.grouping.chars_quantiles = Field<std::vector<double>>(j, "chars_quantiles");
  }
  if (j.contains("loc_quantiles")) {
    cfg.grouping.loc_quantiles = Field<std::vector<double>>(j, "loc_quantiles");
  }
  if (j.contains("complexity")) {
    cfg.grouping.complexity_source = ParseComplexitySource(Field<std::string>(j, "complexity"));
  }
  if (j.contains("complexity_quantiles")) {
    cfg.grouping.complexity_quantiles = Field<std::vector<double>>(j, "complexity_quantiles");
  }
  if (j.contains("always_on")) cfg.grouping.always_on = Field<bool>(j, "always_on");
  if (j.contains("train_frac")) cfg.split.train_frac = Field<double>(j, "train_frac");
  if (j.contains("val_frac")) cfg.split.val_frac = Field<double>(j, "val_frac");
  if (j.contains("test_frac")) cfg.split.test_frac = Field<double>(j, "test_frac");
  if (j.contains("seed")) cfg.split.seed = Field<std::uint64_t>(j, "seed");
  if (j.contains("epsilon")) cfg.epsilon = Field<double>(j, "epsilon");
  if (j.contains("ls_loss")) cfg.ls_loss = ParseLsLoss(Field<std::string>(j, "ls_loss"));
  if (j.contains("max_iters")) cfg.max_iters = Field<int>(j, "max_iters");
  return cfg;
}

RunConfig LoadRunConfig(const std::filesystem::path& path, RunConfig base) {
  try {
    return RunConfigFromJson(ReadJson(path), std::move(base));
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

GroupSet GroupsFor(const Grouping& grouping, const ScoredDataset& d) {
  return grouping.Apply(DatasetOf(d.samples));
}

FitEvalResult RunFitEval(const ScoredDataset& train, const ScoredDataset& val,
                         const ScoredDataset& test, const RunConfig& cfg) {
  cfg.Validate();
  if (train.samples.empty()) throw DataError("training split is empty");
  if (test.samples.empty()) throw DataError("test split is empty");
  const BinGrid grid(cfg.m_bins);
  FitEvalResult r;
  r.grouping = FitGrouping(cfg.grouping, DatasetOf(train.samples));
  const CalibrationSet train_set = MakeSet(train, r.grouping);
  const CalibrationSet test_set = MakeSet(test, r.grouping);
  std::optional<CalibrationSet> val_set;
  if (!val.samples.empty()) val_set = MakeSet(val, r.grouping);

  r.uncalibrated = Evaluate(kUncalibrated, test_set.scores, test_set.labels,
                            &test_set.groups, grid);
  for (Method m : cfg.methods) {
    MethodOutcome out;
    out.name = std::string(MethodName(m));
    try {
      const CalibrationSet* v = val_set ? &*val_set : nullptr;
      if (m == Method::kIglb && v == nullptr) {
        throw DataError("validation split is empty");
      }
      CalibratorModel model = Fit(m, train_set, v, cfg.Fit());
      const std::vector<double> calibrated =
          ApplyAll(model, test_set.scores, test_set.groups);
      out.report = Evaluate(out.name, calibrated, test_set.labels, &test_set.groups, grid);
      out.model = std::move(model);
    } catch (const Error& e) {
      out.error = e.what();
    }
    r.methods.push_back(std::move(out));
  }
  return r;
}

std::string ComparisonCsv(const FitEvalResult& r) {
  std::string s = "method,bss,acc,ece,brier\n";
  auto row = [&](const EvalReport& e) {
    s += fmt::format("{},{},{},{},{}\n", e.method, FormatMetric(e.bss),
                     FormatMetric(e.accuracy), FormatMetric(e.ece), FormatMetric(e.brier));
  };
  row(r.uncalibrated);
  for (const MethodOutcome& m : r.methods) {
    if (m.ok()) {
      row(*m.report);
    } else {
      s += m.name + ",failed,failed,failed,failed\n";
    }
  }
  return s;
}

void WriteFitEval(const FitEvalResult& r, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"models", "reports", "reliability"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw IoError("cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }
  WriteText(out_dir / "groups.json", GroupingToJson(r.grouping).dump(2) + "\n");
  auto write_report = [&](const EvalReport& e) {
    WriteText(out_dir / "reports" / (e.method + ".json"), ReportToJson(e).dump(2) + "\n");
    WriteText(out_dir / "reliability" / (e.method + ".csv"), ReliabilityCsv(e));
  };
  write_report(r.uncalibrated);
  json failures = json::object();
  for (const MethodOutcome& m : r.methods) {
    if (!m.ok()) {
      failures[m.name] = m.error;
      continue;
    }
    SaveModel(out_dir / "models" / (m.name + ".json"), *m.model);
    write_report(*m.report);
  }
  WriteText(out_dir / "comparison.csv", ComparisonCsv(r));
  if (!failures.empty()) WriteText(out_dir / "failures.json", failures.dump(2) + "\n");
}

std::vector<std::string> GroupCategories(const GroupingConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.complexity_source != ComplexitySource::kNone) out.push_back("complexity");
  if (cfg.use_language) out.push_back("language");
  if (!cfg.length_metrics.empty()) out.push_back("length");
  return out;
}

std::vector<AblationRow> RunAblation(const ScoredDataset& train,
                                     const ScoredDataset& val,
                                     const ScoredDataset& test,
                                     const RunConfig& cfg) {
  const std::vector<std::string> categories = GroupCategories(cfg.grouping);
  if (categories.size() < 2) {
    throw UsageError("ablation needs at least two group categories");
  }
  std::vector<std::pair<std::string, RunConfig>> subsets;
  for (unsigned mask = 1; mask < (1u << categories.size()); ++mask) {
    std::vector<std::string> names;
    RunConfig sub = cfg;
    sub.grouping.complexity_source = ComplexitySource::kNone;
    sub.grouping.use_language = false;
    sub.grouping.length_metrics.clear();
    for (std::size_t c = 0; c < categories.size(); ++c) {
      if (!(mask & (1u << c))) continue;
      names.push_back(categories[c]);
      if (categories[c] == "complexity") {
        sub.grouping.complexity_source = cfg.grouping.complexity_source;
      } else if (categories[c] == "language") {
        sub.grouping.use_language = true;
      } else {
        sub.grouping.length_metrics = cfg.grouping.length_metrics;
      }
    }
    subsets.emplace_back(Joined(names), std::move(sub));
  }
  std::sort(subsets.begin(), subsets.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<AblationRow> rows;
  for (const auto& [name, sub] : subsets) {
    const FitEvalResult r = RunFitEval(train, val, test, sub);
    rows.push_back({kUncalibrated, name, r.uncalibrated.bss});
    for (const MethodOutcome& m : r.methods) {
      rows.push_back({m.name, name,
                      m.ok() ? std::optional<double>(m.report->bss) : std::nullopt});
    }
  }
  return rows;
}

std::string AblationCsv(const std::vector<AblationRow>& rows) {
  std::string s = "method,groups,bss\n";
  for (const AblationRow& r : rows) {
    s += fmt::format("{},{},{}\n", r.method, r.groups,
                     r.bss ? FormatMetric(*r.bss) : std::string("failed"));
  }
  return s;
}

ScoredSplit SplitScored(const ScoredDataset& d, const SplitSpec& spec) {
  if (d.samples.empty()) throw DataError("cannot split an empty dataset");
  std::vector<std::string> ids;
  ids.reserve(d.samples.size());
  for (const ScoredSample& s : d.samples) ids.push_back(s.sample.problem_id);
  const std::vector<SplitPart> parts = AssignSplits(ids, spec);
  ScoredSplit out;
  for (ScoredDataset* part : {&out.train, &out.val, &out.test}) part->method = d.method;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    ScoredDataset& target = parts[i] == SplitPart::kTrain ? out.train
                            : parts[i] == SplitPart::kVal ? out.val
                                                          : out.test;
    target.samples.push_back(d.samples[i]);
  }
  return out;
}

ScoredDataset ApplyModel(const CalibratorModel& model, const ScoredDataset& d,
                         const Grouping* grouping) {
  const std::vector<std::string> names = ModelGroupNames(model);
  GroupSet groups(d.samples.size());
  if (UsesGroups(MethodOf(model))) {
    if (grouping == nullptr) {
      throw UsageError("this model needs the grouping file written at fit time");
    }
    groups = GroupsFor(*grouping, d);
    if (groups.names() != names) {
      throw DataError("grouping does not match the groups the model was fitted on");
    }
  }
  const std::vector<double> calibrated = ApplyAll(model, ScoresOf(d.samples), groups);
  ScoredDataset out = d;
  out.method = d.method + "+" + std::string(MethodName(MethodOf(model)));
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i].p_hat = calibrated[i];
  return out;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json ReadJson(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace codecal

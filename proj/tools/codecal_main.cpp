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

// Command-line front end: synth, score, split, fit, apply, evaluate,
// fit-eval, ablate, report and convert-calibri.
//
// Exit status: 0 success, 2 usage error, 3 I/O error, 4 data error.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "codecal/convert.hpp"
#include "codecal/error.hpp"
#include "codecal/model_io.hpp"
#include "codecal/pipeline.hpp"
#include "codecal/svg.hpp"
#include "codecal/synthgen.hpp"

namespace fs = std::filesystem;

namespace {

using codecal::RunConfig;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitData = 4;

// Flags shared by the commands that fit or evaluate. Values given on the
// command line override the optional JSON config file.
struct ConfigFlags {
  std::string config;
  std::string methods;
  int m_bins = 20;
  std::string confidence;
  int tail_k = 40;
  bool no_language = false;
  std::string length_metrics;
  std::vector<double> chars_quantiles;
  std::vector<double> loc_quantiles;
  std::string complexity;
  std::vector<double> complexity_quantiles;
  bool always_on = false;
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;
  double epsilon = 0.05;
  std::string ls_loss;
  int max_iters = 1000;

  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> setters;

  template <typename T>
  void Add(CLI::App* app, const std::string& name, T& value,
           const std::string& help, std::function<void(RunConfig&)> set) {
    setters.emplace_back(app->add_option(name, value, help), std::move(set));
  }
  void AddFlag(CLI::App* app, const std::string& name, bool& value,
               const std::string& help, std::function<void(RunConfig&)> set) {
    setters.emplace_back(app->add_flag(name, value, help), std::move(set));
  }

  RunConfig Resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : codecal::LoadRunConfig(config);
    for (const auto& [opt, set] : setters) {
      if (opt->count() > 0) set(cfg);
    }
    cfg.Validate();
    return cfg;
  }
};

void AddConfigFile(CLI::App* app, ConfigFlags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override it")
      ;
}

void AddGridFlags(CLI::App* app, ConfigFlags& f) {
  f.Add(app, "--m-bins", f.m_bins, "number of bins M (default 20)",
        [&f](RunConfig& c) { c.m_bins = f.m_bins; });
}

void AddGroupingFlags(CLI::App* app, ConfigFlags& f) {
  f.AddFlag(app, "--no-language-groups", f.no_language, "disable language groups",
            [&f](RunConfig& c) { c.grouping.use_language = !f.no_language; });
  f.Add(app, "--length-metrics", f.length_metrics,
        "comma list of chars,loc; empty string disables length groups",
        [&f](RunConfig& c) {
          c.grouping.length_metrics.clear();
          std::string rest = f.length_metrics;
          while (!rest.empty()) {
            const std::size_t comma = rest.find(',');
            const std::string item = rest.substr(0, comma);
            if (!item.empty()) {
              c.grouping.length_metrics.push_back(codecal::ParseLengthMetric(item));
            }
            rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
          }
        });
  f.Add(app, "--chars-quantiles", f.chars_quantiles, "character-length cut quantiles",
        [&f](RunConfig& c) { c.grouping.chars_quantiles = f.chars_quantiles; });
  f.Add(app, "--loc-quantiles", f.loc_quantiles, "line-count cut quantiles",
        [&f](RunConfig& c) { c.grouping.loc_quantiles = f.loc_quantiles; });
  f.Add(app, "--complexity", f.complexity, "none, difficulty or branches",
        [&f](RunConfig& c) {
          c.grouping.complexity_source = codecal::ParseComplexitySource(f.complexity);
        });
  f.Add(app, "--complexity-quantiles", f.complexity_quantiles,
        "branch-count cut quantiles",
        [&f](RunConfig& c) { c.grouping.complexity_quantiles = f.complexity_quantiles; });
  f.AddFlag(app, "--always-on", f.always_on, "add the all-samples group ALL",
            [&f](RunConfig& c) { c.grouping.always_on = f.always_on; });
}

void AddFitFlags(CLI::App* app, ConfigFlags& f) {
  f.Add(app, "--epsilon", f.epsilon, "IGLB minimum region mass (default 0.05)",
        [&f](RunConfig& c) { c.epsilon = f.epsilon; });
  f.Add(app, "--ls-loss", f.ls_loss, "IGLB patch loss: ce or brier",
        [&f](RunConfig& c) { c.ls_loss = codecal::ParseLsLoss(f.ls_loss); });
  f.Add(app, "--max-iters", f.max_iters, "iteration cap for IGHB and IGLB",
        [&f](RunConfig& c) { c.max_iters = f.max_iters; });
}

void AddMethodsFlag(CLI::App* app, ConfigFlags& f) {
  f.Add(app, "--methods", f.methods, "comma list of platt,hb,linr,logr,ighb,iglb or all",
        [&f](RunConfig& c) { c.methods = codecal::ParseMethods(f.methods); });
}

void AddSplitFlags(CLI::App* app, ConfigFlags& f) {
  f.Add(app, "--train-frac", f.train_frac, "train fraction of problems",
        [&f](RunConfig& c) { c.split.train_frac = f.train_frac; });
  f.Add(app, "--val-frac", f.val_frac, "validation fraction of problems",
        [&f](RunConfig& c) { c.split.val_frac = f.val_frac; });
  f.Add(app, "--test-frac", f.test_frac, "test fraction of problems",
        [&f](RunConfig& c) { c.split.test_frac = f.test_frac; });
  f.Add(app, "--seed", f.seed, "split seed",
        [&f](RunConfig& c) { c.split.seed = f.seed; });
}

void AddConfidenceFlags(CLI::App* app, ConfigFlags& f) {
  f.Add(app, "--confidence", f.confidence, "avg_prob, code_prob or tail_prob",
        [&f](RunConfig& c) {
          c.confidence.variant = codecal::ParseConfidenceVariant(f.confidence);
        });
  f.Add(app, "--tail-k", f.tail_k, "token count for tail_prob (default 40)",
        [&f](RunConfig& c) { c.confidence.tail_k = f.tail_k; });
}

void CheckDistinct(const fs::path& in, const fs::path& out) {
  std::error_code ec;
  if (fs::exists(out) && fs::equivalent(in, out, ec)) {
    throw codecal::UsageError("input and output paths must differ");
  }
  if (fs::absolute(in).lexically_normal() == fs::absolute(out).lexically_normal()) {
    throw codecal::UsageError("input and output paths must differ");
  }
}

void EnsureParent(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw codecal::IoError("cannot create " + p.parent_path().string());
  }
}

void EnsureDir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw codecal::IoError("cannot create " + p.string());
}

std::optional<codecal::Grouping> MaybeGrouping(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return codecal::GroupingFromJson(codecal::ReadJson(path));
}

int Run(int argc, char** argv) {
  CLI::App app{"Group-aware confidence calibration for code generation"};
  app.require_subcommand(1);

  // synth
  std::string synth_spec, synth_out;
  std::size_t synth_planted = 0;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic record file");
  auto* spec_opt = synth->add_option("--spec", synth_spec, "generator spec (JSON)")
                       ;
  synth->add_option("--planted", synth_planted,
                    "n samples in three blocks of accuracy 0.3/0.6/0.9, score 0.5")
      ->excludes(spec_opt);
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("-o,--out", synth_out, "output records")->required();

  // score
  ConfigFlags score_flags;
  std::string score_in, score_out;
  bool skip_missing = false;
  auto* score = app.add_subcommand("score", "compute confidence scores");
  score->add_option("-i,--in", score_in, "input records")->required();
  score->add_option("-o,--out", score_out, "output scored records")->required();
  score->add_flag("--skip-missing", skip_missing, "skip records without a code span");
  AddConfigFile(score, score_flags);
  AddConfidenceFlags(score, score_flags);

  // split
  ConfigFlags split_flags;
  std::string split_in, split_dir;
  auto* split = app.add_subcommand("split", "problem-level train/val/test split");
  split->add_option("-i,--in", split_in, "scored records")->required();
  split->add_option("--out-dir", split_dir, "writes train/val/test.jsonl")->required();
  AddConfigFile(split, split_flags);
  AddSplitFlags(split, split_flags);

  // fit
  ConfigFlags fit_flags;
  std::string fit_train, fit_val, fit_method, fit_out, fit_groups_out;
  auto* fit = app.add_subcommand("fit", "fit one calibrator");
  fit->add_option("--train", fit_train, "scored train records")->required();
  fit->add_option("--val", fit_val, "scored validation records (IGLB)");
  fit->add_option("--method", fit_method, "platt, hb, linr, logr, ighb or iglb")->required();
  fit->add_option("-o,--out", fit_out, "model JSON")->required();
  fit->add_option("--groups-out", fit_groups_out, "grouping JSON (default <out dir>/groups.json)");
  AddConfigFile(fit, fit_flags);
  AddGridFlags(fit, fit_flags);
  AddGroupingFlags(fit, fit_flags);
  AddFitFlags(fit, fit_flags);

  // apply
  std::string apply_model, apply_in, apply_groups, apply_out;
  auto* apply = app.add_subcommand("apply", "apply a fitted calibrator");
  apply->add_option("--model", apply_model, "model JSON")->required();
  apply->add_option("-i,--in", apply_in, "scored records")->required();
  apply->add_option("--groups", apply_groups, "grouping JSON from fit");
  apply->add_option("-o,--out", apply_out, "calibrated scored records")->required();

  // evaluate
  ConfigFlags eval_flags;
  std::string eval_in, eval_groups, eval_out, eval_csv, eval_name;
  auto* evaluate = app.add_subcommand("evaluate", "metrics report for scored records");
  evaluate->add_option("-i,--in", eval_in, "scored records")->required();
  evaluate->add_option("--groups", eval_groups, "grouping JSON");
  evaluate->add_option("-o,--out", eval_out, "report JSON")->required();
  evaluate->add_option("--csv", eval_csv, "reliability CSV");
  evaluate->add_option("--name", eval_name, "method label (default: record method)");
  AddConfigFile(evaluate, eval_flags);
  AddGridFlags(evaluate, eval_flags);

  // fit-eval and ablate
  ConfigFlags fe_flags;
  std::string fe_train, fe_val, fe_test, fe_dir;
  auto* fit_eval = app.add_subcommand("fit-eval", "fit all methods and compare on test");
  fit_eval->add_option("--train", fe_train, "scored train records")->required();
  fit_eval->add_option("--val", fe_val, "scored validation records");
  fit_eval->add_option("--test", fe_test, "scored test records")->required();
  fit_eval->add_option("--out-dir", fe_dir, "output directory")->required();
  AddConfigFile(fit_eval, fe_flags);
  AddMethodsFlag(fit_eval, fe_flags);
  AddGridFlags(fit_eval, fe_flags);
  AddGroupingFlags(fit_eval, fe_flags);
  AddFitFlags(fit_eval, fe_flags);

  ConfigFlags ab_flags;
  std::string ab_train, ab_val, ab_test, ab_out;
  auto* ablate = app.add_subcommand("ablate", "BSS for every subset of group categories");
  ablate->add_option("--train", ab_train, "scored train records")->required();
  ablate->add_option("--val", ab_val, "scored validation records");
  ablate->add_option("--test", ab_test, "scored test records")->required();
  ablate->add_option("-o,--out", ab_out, "ablation CSV")->required();
  AddConfigFile(ablate, ab_flags);
  AddMethodsFlag(ablate, ab_flags);
  AddGridFlags(ablate, ab_flags);
  AddGroupingFlags(ablate, ab_flags);
  AddFitFlags(ablate, ab_flags);

  // report
  std::vector<std::string> report_in;
  std::string report_dir;
  auto* report = app.add_subcommand("report", "render report JSON as SVG");
  report->add_option("-i,--in", report_in, "report JSON files")->required();
  report->add_option("--out-dir", report_dir, "output directory")->required();

  // convert-calibri
  std::string conv_in, conv_out, conv_meta, conv_lang;
  auto* convert = app.add_subcommand(
      "convert-calibri", "map a downloaded CALIBRI shard to the record schema (offline)");
  convert->add_option("-i,--in", conv_in, "source shard (JSON lines or array)")
      ->required();
  convert->add_option("-o,--out", conv_out, "output records")->required();
  convert->add_option("--meta", conv_meta, "field-mapping metadata (default <out>.meta.json)");
  convert->add_option("--language", conv_lang, "language for shards without a language key");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto load_scored = [](const std::string& path) {
    return path.empty() ? codecal::ScoredDataset{} : codecal::LoadScored(path);
  };

  if (synth->parsed()) {
    codecal::SynthSpec spec;
    if (!synth_spec.empty()) {
      spec = codecal::LoadSynthSpec(synth_spec);
      if (synth_seed_opt->count() > 0) spec.seed = synth_seed;
    } else if (synth_planted > 0) {
      spec = codecal::PlantedAccuracySpec(synth_planted, synth_seed);
    } else {
      throw codecal::UsageError("synth needs --spec or --planted");
    }
    EnsureParent(synth_out);
    codecal::WriteRecords(fs::path(synth_out), codecal::Generate(spec).dataset);
  } else if (score->parsed()) {
    CheckDistinct(score_in, score_out);
    const RunConfig cfg = score_flags.Resolve();
    const codecal::ScoredDataset d =
        codecal::ScoreDataset(codecal::LoadRecords(score_in), cfg.confidence, skip_missing);
    EnsureParent(score_out);
    codecal::WriteScored(fs::path(score_out), d);
    std::cout << fmt::format("scored {} records, skipped {} without a code span\n",
                             d.samples.size(), d.skipped);
  } else if (split->parsed()) {
    const RunConfig cfg = split_flags.Resolve();
    const codecal::ScoredSplit s = codecal::SplitScored(codecal::LoadScored(split_in), cfg.split);
    EnsureDir(split_dir);
    codecal::WriteScored(fs::path(split_dir) / "train.jsonl", s.train);
    codecal::WriteScored(fs::path(split_dir) / "val.jsonl", s.val);
    codecal::WriteScored(fs::path(split_dir) / "test.jsonl", s.test);
    std::cout << fmt::format("train {} / val {} / test {} records\n", s.train.samples.size(),
                             s.val.samples.size(), s.test.samples.size());
  } else if (fit->parsed()) {
    const RunConfig cfg = fit_flags.Resolve();
    const codecal::Method method = codecal::ParseMethod(fit_method);
    const codecal::ScoredDataset train = codecal::LoadScored(fit_train);
    const codecal::ScoredDataset val = load_scored(fit_val);
    const codecal::Grouping grouping =
        codecal::FitGrouping(cfg.grouping, codecal::DatasetOf(train.samples));
    const codecal::CalibrationSet train_set{codecal::ScoresOf(train.samples),
                                            codecal::LabelsOf(train.samples),
                                            codecal::GroupsFor(grouping, train)};
    std::optional<codecal::CalibrationSet> val_set;
    if (!val.samples.empty()) {
      val_set = codecal::CalibrationSet{codecal::ScoresOf(val.samples),
                                        codecal::LabelsOf(val.samples),
                                        codecal::GroupsFor(grouping, val)};
    }
    if (method == codecal::Method::kIglb && !val_set) {
      throw codecal::UsageError("iglb needs --val");
    }
    const codecal::CalibratorModel model =
        codecal::Fit(method, train_set, val_set ? &*val_set : nullptr, cfg.Fit());
    EnsureParent(fit_out);
    codecal::SaveModel(fit_out, model);
    const fs::path groups_out = fit_groups_out.empty()
                                    ? fs::path(fit_out).parent_path() / "groups.json"
                                    : fs::path(fit_groups_out);
    codecal::WriteText(groups_out, codecal::GroupingToJson(grouping).dump(2) + "\n");
  } else if (apply->parsed()) {
    CheckDistinct(apply_in, apply_out);
    const codecal::CalibratorModel model = codecal::LoadModel(apply_model);
    const std::optional<codecal::Grouping> grouping = MaybeGrouping(apply_groups);
    const codecal::ScoredDataset out = codecal::ApplyModel(
        model, codecal::LoadScored(apply_in), grouping ? &*grouping : nullptr);
    EnsureParent(apply_out);
    codecal::WriteScored(fs::path(apply_out), out);
  } else if (evaluate->parsed()) {
    const RunConfig cfg = eval_flags.Resolve();
    const codecal::ScoredDataset d = codecal::LoadScored(eval_in);
    const std::optional<codecal::Grouping> grouping = MaybeGrouping(eval_groups);
    std::optional<codecal::GroupSet> groups;
    if (grouping) groups = codecal::GroupsFor(*grouping, d);
    const codecal::EvalReport r = codecal::Evaluate(
        eval_name.empty() ? d.method : eval_name, codecal::ScoresOf(d.samples),
        codecal::LabelsOf(d.samples), groups ? &*groups : nullptr, codecal::BinGrid(cfg.m_bins));
    EnsureParent(eval_out);
    codecal::WriteText(eval_out, codecal::ReportToJson(r).dump(2) + "\n");
    if (!eval_csv.empty()) codecal::WriteText(eval_csv, codecal::ReliabilityCsv(r));
    std::cout << fmt::format("bss {} acc {} ece {} brier {}\n", codecal::FormatMetric(r.bss),
                             codecal::FormatMetric(r.accuracy), codecal::FormatMetric(r.ece),
                             codecal::FormatMetric(r.brier));
  } else if (fit_eval->parsed()) {
    const RunConfig cfg = fe_flags.Resolve();
    const codecal::FitEvalResult r = codecal::RunFitEval(
        codecal::LoadScored(fe_train), load_scored(fe_val), codecal::LoadScored(fe_test), cfg);
    EnsureDir(fe_dir);
    codecal::WriteFitEval(r, fe_dir);
    std::cout << codecal::ComparisonCsv(r);
    for (const codecal::MethodOutcome& m : r.methods) {
      if (!m.ok()) std::cerr << fmt::format("{} failed: {}\n", m.name, m.error);
    }
  } else if (ablate->parsed()) {
    const RunConfig cfg = ab_flags.Resolve();
    const auto rows = codecal::RunAblation(codecal::LoadScored(ab_train), load_scored(ab_val),
                                           codecal::LoadScored(ab_test), cfg);
    EnsureParent(ab_out);
    codecal::WriteText(ab_out, codecal::AblationCsv(rows));
  } else if (report->parsed()) {
    EnsureDir(report_dir);
    for (const std::string& path : report_in) {
      const codecal::EvalReport r = codecal::LoadReport(path);
      const std::string stem = fs::path(path).stem().string();
      codecal::WriteText(fs::path(report_dir) / (stem + "_reliability.svg"),
                         codecal::ReliabilitySvg(r));
      codecal::WriteText(fs::path(report_dir) / (stem + "_groups.svg"),
                         codecal::GroupScatterSvg(r));
    }
  } else if (convert->parsed()) {
    CheckDistinct(conv_in, conv_out);
    codecal::ConvertOptions opt;
    if (!conv_lang.empty()) opt.default_language = conv_lang;
    const codecal::ConvertResult r = codecal::ConvertCalibri(fs::path(conv_in), opt);
    EnsureParent(conv_out);
    codecal::WriteRecords(fs::path(conv_out), r.dataset);
    const std::string meta = conv_meta.empty() ? conv_out + ".meta.json" : conv_meta;
    codecal::WriteText(meta, r.Metadata(conv_in).dump(2) + "\n");
    std::cout << fmt::format("converted {} records, skipped {} without log-probabilities\n",
                             r.dataset.size(), r.skipped_missing_logprobs);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const codecal::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const codecal::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const codecal::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

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

#ifndef CODECAL_CALIBRATORS_HPP_
#define CODECAL_CALIBRATORS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "codecal/binning.hpp"
#include "codecal/groups.hpp"

namespace codecal {

enum class Method { kPlatt, kHistogramBinning, kLinr, kLogr, kIghb, kIglb };

// "platt", "hb", "linr", "logr", "ighb", "iglb".
std::string_view MethodName(Method m);
Method ParseMethod(std::string_view name);
bool UsesGroups(Method m);
std::span<const Method> AllMethods();

// sigma(a * log p + b).
struct PlattModel {
  double a = 1.0;
  double b = 0.0;
  int iterations = 0;
  bool converged = true;
};

// Round to the nearest grid point i/M, then add delta[i - 1]. Grid points
// never seen in training keep delta = 0.
struct HistogramBinningModel {
  int m_bins = 20;
  std::vector<double> delta;
};

enum class GcurVariant { kLinear, kLogistic };

// Linear: p + sum_g lambda_g g(x).
// Logistic: sigma(intercept + score_coef * logit(p) + sum_g coef_g g(x)).
// group_coefs has one entry per fitted group; dropped groups hold 0.
struct GcurModel {
  GcurVariant variant = GcurVariant::kLinear;
  std::vector<std::string> group_names;
  std::vector<double> group_coefs;
  double intercept = 0.0;
  double score_coef = 1.0;
  // Groups with no training member; excluded from the fit.
  std::vector<std::string> dropped_groups;
  // Columns linearly dependent on earlier ones; the damped solve picks the
  // small-norm solution.
  std::vector<std::string> dependent_groups;
  int iterations = 0;
  bool converged = true;
};

enum class PatchKind { kIghb, kIglb };
enum class LsLoss { kCrossEntropy, kBrier };

// Shift every member of (group, disjoint bin) by delta.
struct HistogramPatch {
  std::size_t group = 0;
  int bin = 0;
  double delta = 0.0;
};

// Map every member of (group, one-sided bin) through
// sigma(alpha + beta * logit(p)).
struct LinearPatch {
  std::size_t group = 0;
  int bin = 0;
  Side side = Side::kAtMost;
  double alpha = 0.0;
  double beta = 1.0;
};

struct SkippedRegion {
  int iteration = 0;
  std::size_t group = 0;
  int bin = 0;
  Side side = Side::kAtMost;
};

// Ordered patch list of IGHB or IGLB. Replaying the patches, with a round to
// the grid after each one, reproduces the training-time transform exactly.
struct IterativePatchModel {
  PatchKind kind = PatchKind::kIghb;
  int m_bins = 20;
  std::vector<std::string> group_names;
  std::vector<HistogramPatch> histogram_patches;  // IGHB
  std::vector<LinearPatch> linear_patches;        // IGLB
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<std::string> dropped_groups;
  // IGHB only: the stopping bound.
  double alpha = 0.05;
  // IGLB only.
  double epsilon = 0.05;
  LsLoss ls_loss = LsLoss::kCrossEntropy;
  // Validation Brier score of the initial rounded scores, then after every
  // accepted patch.
  std::vector<double> val_brier;
  std::vector<SkippedRegion> skipped;
};

using CalibratorModel =
    std::variant<PlattModel, HistogramBinningModel, GcurModel, IterativePatchModel>;

// Raw scores, labels and group memberships of one split.
struct CalibrationSet {
  std::vector<double> scores;
  std::vector<int> labels;
  GroupSet groups;

  std::size_t size() const { return scores.size(); }
};

struct FitOptions {
  int m_bins = 20;
  double epsilon = 0.05;
  LsLoss ls_loss = LsLoss::kCrossEntropy;
  int max_iters = 1000;
};

// Throws DataError when the training labels are all equal.
PlattModel FitPlatt(std::span<const double> p, std::span<const int> y);
HistogramBinningModel FitHistogramBinning(std::span<const double> p,
                                          std::span<const int> y,
                                          const BinGrid& grid);
GcurModel FitGcurLinear(const CalibrationSet& train);
GcurModel FitGcurLogistic(const CalibrationSet& train);
// `alpha` is the stopping bound on max_g P(g) gASCE(g); 1/M when unset.
IterativePatchModel FitIghb(const CalibrationSet& train, const BinGrid& grid,
                            int max_iters = 1000,
                            std::optional<double> alpha = std::nullopt);
IterativePatchModel FitIglb(const CalibrationSet& train,
                            const CalibrationSet& val, const BinGrid& grid,
                            double epsilon = 0.05,
                            LsLoss ls_loss = LsLoss::kCrossEntropy,
                            int max_iters = 1000);

// `val` is only read by IGLB and must then be non-null and non-empty.
CalibratorModel Fit(Method method, const CalibrationSet& train,
                    const CalibrationSet* val, const FitOptions& opt);

Method MethodOf(const CalibratorModel& model);

// Pure replay of a fitted transform. Group-aware models require one
// membership entry per fitted group; Platt and HB ignore memberships.
double Apply(const CalibratorModel& model, double p,
             std::span<const std::uint8_t> memberships);

// Apply() over a batch, parallel over samples.
std::vector<double> ApplyAll(const CalibratorModel& model,
                             std::span<const double> p, const GroupSet& groups);

namespace reference {
std::vector<double> ApplyAll(const CalibratorModel& model,
                             std::span<const double> p, const GroupSet& groups);
}  // namespace reference

// Single update steps, shared by fitting and replay.
double ApplyHistogramPatch(double p, const HistogramPatch& patch,
                           const BinGrid& grid);
double ApplyLinearPatch(double p, const LinearPatch& patch,
                        const BinGrid& grid);

}  // namespace codecal

#endif  // CODECAL_CALIBRATORS_HPP_

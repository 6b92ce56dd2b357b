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

#include "codecal/calibrators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "codecal/error.hpp"
#include "codecal/kernels.hpp"
#include "codecal/logistic.hpp"
#include "codecal/metrics.hpp"

namespace codecal {

namespace {

constexpr std::array<Method, 6> kAllMethods = {
    Method::kPlatt, Method::kHistogramBinning, Method::kLinr,
    Method::kLogr,  Method::kIghb,             Method::kIglb};

constexpr double kGcurDamping = 1e-10;

void CheckBothClasses(std::span<const int> y, const char* what) {
  const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
  const bool has_neg = std::find(y.begin(), y.end(), 0) != y.end();
  if (!has_pos || !has_neg) {
    throw DataError(std::string(what) +
                    ": training labels are all one class; the fit is degenerate");
  }
}

void CheckTrain(const CalibrationSet& s) {
  if (s.size() == 0) throw DataError("empty training set");
  if (s.labels.size() != s.size() || s.groups.num_rows() != s.size()) {
    throw DataError("scores, labels and group rows differ in length");
  }
  for (double p : s.scores) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("training score outside [0, 1]");
  }
}

std::vector<std::size_t> LiveGroups(const GroupSet& g,
                                    std::vector<std::string>* dropped) {
  std::vector<std::size_t> live;
  for (std::size_t c = 0; c < g.num_groups(); ++c) {
    if (g.Degenerate(c)) {
      if (dropped != nullptr) dropped->push_back(g.names()[c]);
    } else {
      live.push_back(c);
    }
  }
  return live;
}

double Clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::string_view MethodName(Method m) {
  switch (m) {
    case Method::kPlatt:
      return "platt";
    case Method::kHistogramBinning:
      return "hb";
    case Method::kLinr:
      return "linr";
    case Method::kLogr:
      return "logr";
    case Method::kIghb:
      return "ighb";
    case Method::kIglb:
      return "iglb";
  }
  return "?";
}

Method ParseMethod(std::string_view name) {
  for (Method m : kAllMethods) {
    if (MethodName(m) == name) return m;
  }
  throw UsageError("unknown calibration method '" + std::string(name) +
                   "' (expected platt, hb, linr, logr, ighb or iglb)");
}

bool UsesGroups(Method m) {
  return m != Method::kPlatt && m != Method::kHistogramBinning;
}

std::span<const Method> AllMethods() { return kAllMethods; }

PlattModel FitPlatt(std::span<const double> p, std::span<const int> y) {
  if (p.empty() || p.size() != y.size()) {
    throw DataError("Platt scaling needs a non-empty, aligned training set");
  }
  CheckBothClasses(y, "Platt scaling");
  std::vector<double> x;
  x.reserve(2 * p.size());
  for (double v : p) {
    x.push_back(std::log(std::max(v, kLogitClamp)));
    x.push_back(1.0);
  }
  const NewtonFit fit = FitLogistic({x, 2, y});
  return {fit.weights[0], fit.weights[1], fit.iterations, fit.converged};
}

HistogramBinningModel FitHistogramBinning(std::span<const double> p,
                                          std::span<const int> y,
                                          const BinGrid& grid) {
  if (p.empty() || p.size() != y.size()) {
    throw DataError("histogram binning needs a non-empty, aligned training set");
  }
  std::vector<double> residual(grid.size(), 0.0);
  std::vector<std::size_t> count(grid.size(), 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int idx = grid.GridIndex(p[i]);
    residual[idx - 1] += y[i] - grid.Point(idx);
    ++count[idx - 1];
  }
  HistogramBinningModel model{grid.size(), std::vector<double>(grid.size(), 0.0)};
  for (int b = 0; b < grid.size(); ++b) {
    if (count[b] > 0) model.delta[b] = residual[b] / static_cast<double>(count[b]);
  }
  return model;
}

GcurModel FitGcurLinear(const CalibrationSet& train) {
  CheckTrain(train);
  GcurModel model;
  model.variant = GcurVariant::kLinear;
  model.group_names = train.groups.names();
  model.group_coefs.assign(train.groups.num_groups(), 0.0);
  const std::vector<std::size_t> live = LiveGroups(train.groups, &model.dropped_groups);
  if (live.empty()) return model;

  const auto n = static_cast<Eigen::Index>(train.size());
  const auto k = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, k);
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r[i] = train.labels[i] - train.scores[i];
    for (Eigen::Index j = 0; j < k; ++j) {
      x(i, j) = train.groups.Contains(i, live[j]) ? 1.0 : 0.0;
    }
  }
  Eigen::MatrixXd gram = x.transpose() * x / static_cast<double>(n);
  const Eigen::VectorXd rhs = x.transpose() * r / static_cast<double>(n);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
  qr.setThreshold(1e-9);
  const Eigen::Index rank = qr.rank();
  std::vector<std::string> dependent;
  for (Eigen::Index j = rank; j < k; ++j) {
    dependent.push_back(model.group_names[live[qr.colsPermutation().indices()[j]]]);
  }
  std::sort(dependent.begin(), dependent.end());

  gram.diagonal().array() += kGcurDamping;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::VectorXd lambda = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !lambda.allFinite()) {
    std::string names;
    for (const std::string& d : dependent) names += (names.empty() ? "" : ", ") + d;
    throw DataError("group regression is singular after damping; dependent "
                    "columns: " + (names.empty() ? std::string("none detected") : names));
  }
  for (Eigen::Index j = 0; j < k; ++j) model.group_coefs[live[j]] = lambda[j];
  model.dependent_groups = std::move(dependent);
  return model;
}

GcurModel FitGcurLogistic(const CalibrationSet& train) {
  CheckTrain(train);
  CheckBothClasses(train.labels, "logistic group regression");
  GcurModel model;
  model.variant = GcurVariant::kLogistic;
  model.group_names = train.groups.names();
  model.group_coefs.assign(train.groups.num_groups(), 0.0);
  const std::vector<std::size_t> live = LiveGroups(train.groups, &model.dropped_groups);

  const std::size_t dim = 2 + live.size();
  std::vector<double> x;
  x.reserve(train.size() * dim);
  for (std::size_t i = 0; i < train.size(); ++i) {
    x.push_back(1.0);
    x.push_back(ClampedLogit(train.scores[i]));
    for (std::size_t g : live) x.push_back(train.groups.Contains(i, g) ? 1.0 : 0.0);
  }
  const NewtonFit fit = FitLogistic({x, dim, train.labels});
  model.intercept = fit.weights[0];
  model.score_coef = fit.weights[1];
  for (std::size_t j = 0; j < live.size(); ++j) {
    model.group_coefs[live[j]] = fit.weights[2 + j];
  }
  model.iterations = fit.iterations;
  model.converged = fit.converged;
  return model;
}

double ApplyHistogramPatch(double p, const HistogramPatch& patch,
                           const BinGrid& grid) {
  return grid.RoundToGrid(std::clamp(p + patch.delta, grid.Point(1), 1.0));
}

double ApplyLinearPatch(double p, const LinearPatch& patch,
                        const BinGrid& grid) {
  return grid.RoundToGrid(Sigmoid(patch.alpha + patch.beta * ClampedLogit(p)));
}

IterativePatchModel FitIghb(const CalibrationSet& train, const BinGrid& grid,
                            int max_iters, std::optional<double> alpha_override) {
  CheckTrain(train);
  IterativePatchModel model;
  model.kind = PatchKind::kIghb;
  model.m_bins = grid.size();
  model.group_names = train.groups.names();
  const std::vector<std::size_t> live = LiveGroups(train.groups, &model.dropped_groups);

  const std::size_t n = train.size();
  const std::size_t m_bins = grid.size();
  const double alpha = alpha_override.value_or(1.0 / grid.size());
  if (!(alpha > 0.0)) throw UsageError("IGHB alpha must be positive");
  model.alpha = alpha;
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = grid.RoundToGrid(train.scores[i]);

  for (int t = 0;; ++t) {
    const kernels::CellStats cells =
        kernels::ComputeCellStats(scores, train.labels, train.groups, grid);
    double worst_group = 0.0;
    double best = -1.0;
    HistogramPatch patch;
    for (std::size_t g : live) {
      double weighted = 0.0;
      for (std::size_t b = 0; b < m_bins; ++b) {
        const std::size_t c = cells.count[g * m_bins + b];
        if (c == 0) continue;
        const double delta = cells.residual_sum[g * m_bins + b] / static_cast<double>(c);
        const double contribution = static_cast<double>(c) / static_cast<double>(n) * delta * delta;
        weighted += contribution;
        if (contribution > best) {
          best = contribution;
          patch = {g, static_cast<int>(b) + 1, delta};
        }
      }
      worst_group = std::max(worst_group, weighted);
    }
    if (worst_group <= alpha) {
      model.converged = true;
      model.stop_reason = "multicalibration bound met";
      break;
    }
    if (t >= max_iters) {
      model.stop_reason = "iteration limit reached";
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (train.groups.Contains(i, patch.group) &&
          grid.AssignBin(scores[i]) == patch.bin) {
        scores[i] = ApplyHistogramPatch(scores[i], patch, grid);
      }
    }
    model.histogram_patches.push_back(patch);
    model.iterations = t + 1;
  }
  return model;
}

namespace {

struct Candidate {
  std::size_t group;
  int bin;
  Side side;
  std::size_t count;
  double mass;
  double score;
};

bool InRegion(double p, const GroupSet& groups, std::size_t row,
              const BinGrid& grid, std::size_t group, int bin, Side side) {
  return groups.Contains(row, group) && InOneSidedBin(p, grid, bin, side);
}

}  // namespace

IterativePatchModel FitIglb(const CalibrationSet& train,
                            const CalibrationSet& val, const BinGrid& grid,
                            double epsilon, LsLoss ls_loss, int max_iters) {
  CheckTrain(train);
  if (val.size() == 0) throw DataError("IGLB needs a non-empty validation set");
  if (val.labels.size() != val.size() || val.groups.num_rows() != val.size()) {
    throw DataError("validation scores, labels and group rows differ in length");
  }
  if (val.groups.names() != train.groups.names()) {
    throw DataError("validation groups differ from training groups");
  }
  if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");

  IterativePatchModel model;
  model.kind = PatchKind::kIglb;
  model.m_bins = grid.size();
  model.group_names = train.groups.names();
  model.epsilon = epsilon;
  model.ls_loss = ls_loss;
  const std::vector<std::size_t> live = LiveGroups(train.groups, &model.dropped_groups);

  const std::size_t n = train.size();
  const std::size_t m_bins = grid.size();
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = grid.RoundToGrid(train.scores[i]);
  std::vector<double> val_scores(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    val_scores[i] = grid.RoundToGrid(val.scores[i]);
  }
  double val_brier = Brier(val_scores, val.labels);
  model.val_brier.push_back(val_brier);

  for (int t = 0;; ++t) {
    if (t >= max_iters) {
      model.stop_reason = "iteration limit reached";
      break;
    }
    const kernels::CellStats cells =
        kernels::ComputeOneSidedStats(scores, train.labels, train.groups, grid);
    std::vector<Candidate> candidates;
    for (std::size_t g : live) {
      for (std::size_t m = 1; m <= m_bins; ++m) {
        for (int s = 0; s < 2; ++s) {
          const std::size_t cell = (g * m_bins + (m - 1)) * 2 + s;
          const std::size_t c = cells.count[cell];
          const double mass = static_cast<double>(c) / static_cast<double>(n);
          const double delta = c == 0 ? 0.0 : cells.residual_sum[cell] / static_cast<double>(c);
          candidates.push_back({g, static_cast<int>(m),
                                s == 0 ? Side::kAtMost : Side::kAtLeast, c,
                                mass, mass * delta * delta});
        }
      }
    }
    // Candidates are generated in (group, bin, side) order; the stable sort
    // keeps that order among equal scores.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.score > b.score;
                     });

    const Candidate* chosen = nullptr;
    std::vector<double> region_x;
    std::vector<int> region_y;
    for (const Candidate& c : candidates) {
      if (c.mass < epsilon) {
        model.stop_reason = "selected region mass below epsilon";
        break;
      }
      region_x.clear();
      region_y.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (!InRegion(scores[i], train.groups, i, grid, c.group, c.bin, c.side)) continue;
        region_x.push_back(1.0);
        region_x.push_back(ClampedLogit(scores[i]));
        region_y.push_back(train.labels[i]);
      }
      const bool single_class =
          std::all_of(region_y.begin(), region_y.end(),
                      [&](int v) { return v == region_y.front(); });
      if (single_class) {
        model.skipped.push_back({t, c.group, c.bin, c.side});
        continue;
      }
      chosen = &c;
      break;
    }
    if (chosen == nullptr) {
      if (model.stop_reason.empty()) model.stop_reason = "no eligible region";
      model.converged = true;
      break;
    }

    const Design design{region_x, 2, region_y};
    const NewtonFit fit = ls_loss == LsLoss::kCrossEntropy
                              ? FitLogistic(design)
                              : FitSigmoidLeastSquares(design);
    const LinearPatch patch{chosen->group, chosen->bin, chosen->side,
                            fit.weights[0], fit.weights[1]};

    std::vector<double> val_candidate = val_scores;
    for (std::size_t i = 0; i < val.size(); ++i) {
      if (InRegion(val_scores[i], val.groups, i, grid, patch.group, patch.bin, patch.side)) {
        val_candidate[i] = ApplyLinearPatch(val_scores[i], patch, grid);
      }
    }
    const double candidate_brier = Brier(val_candidate, val.labels);
    if (candidate_brier >= val_brier) {
      model.stop_reason = "validation Brier score did not improve";
      model.converged = true;
      break;
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (InRegion(scores[i], train.groups, i, grid, patch.group, patch.bin, patch.side)) {
        scores[i] = ApplyLinearPatch(scores[i], patch, grid);
      }
    }
    val_scores = std::move(val_candidate);
    val_brier = candidate_brier;
    model.val_brier.push_back(val_brier);
    model.linear_patches.push_back(patch);
    model.iterations = t + 1;
  }
  return model;
}

CalibratorModel Fit(Method method, const CalibrationSet& train,
                    const CalibrationSet* val, const FitOptions& opt) {
  const BinGrid grid(opt.m_bins);
  switch (method) {
    case Method::kPlatt:
      return FitPlatt(train.scores, train.labels);
    case Method::kHistogramBinning:
      return FitHistogramBinning(train.scores, train.labels, grid);
    case Method::kLinr:
      return FitGcurLinear(train);
    case Method::kLogr:
      return FitGcurLogistic(train);
    case Method::kIghb:
      return FitIghb(train, grid, opt.max_iters);
    case Method::kIglb:
      if (val == nullptr) throw DataError("IGLB needs a validation set");
      return FitIglb(train, *val, grid, opt.epsilon, opt.ls_loss, opt.max_iters);
  }
  throw UsageError("unknown method");
}

Method MethodOf(const CalibratorModel& model) {
  struct Visitor {
    Method operator()(const PlattModel&) const { return Method::kPlatt; }
    Method operator()(const HistogramBinningModel&) const {
      return Method::kHistogramBinning;
    }
    Method operator()(const GcurModel& m) const {
      return m.variant == GcurVariant::kLinear ? Method::kLinr : Method::kLogr;
    }
    Method operator()(const IterativePatchModel& m) const {
      return m.kind == PatchKind::kIghb ? Method::kIghb : Method::kIglb;
    }
  };
  return std::visit(Visitor{}, model);
}

namespace {

std::size_t Arity(const CalibratorModel& model) {
  if (const auto* g = std::get_if<GcurModel>(&model)) return g->group_names.size();
  if (const auto* it = std::get_if<IterativePatchModel>(&model)) {
    return it->group_names.size();
  }
  return 0;
}

void CheckApplyInput(const CalibratorModel& model, double p,
                     std::size_t membership_size) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DataError("confidence " + std::to_string(p) + " outside [0, 1]");
  }
  if (UsesGroups(MethodOf(model)) && membership_size != Arity(model)) {
    throw DataError("model expects " + std::to_string(Arity(model)) +
                    " group memberships, got " + std::to_string(membership_size));
  }
}

double ApplyUnchecked(const CalibratorModel& model, double p,
                      std::span<const std::uint8_t> row) {
  if (const auto* m = std::get_if<PlattModel>(&model)) {
    return Sigmoid(m->a * std::log(std::max(p, kLogitClamp)) + m->b);
  }
  if (const auto* m = std::get_if<HistogramBinningModel>(&model)) {
    const BinGrid grid(m->m_bins);
    const int idx = grid.GridIndex(p);
    return Clamp01(grid.Point(idx) + m->delta[idx - 1]);
  }
  if (const auto* m = std::get_if<GcurModel>(&model)) {
    if (m->variant == GcurVariant::kLinear) {
      double out = p;
      for (std::size_t g = 0; g < row.size(); ++g) {
        if (row[g]) out += m->group_coefs[g];
      }
      return Clamp01(out);
    }
    double z = m->intercept + m->score_coef * ClampedLogit(p);
    for (std::size_t g = 0; g < row.size(); ++g) {
      if (row[g]) z += m->group_coefs[g];
    }
    return Sigmoid(z);
  }
  const auto& m = std::get<IterativePatchModel>(model);
  const BinGrid grid(m.m_bins);
  double out = grid.RoundToGrid(p);
  if (m.kind == PatchKind::kIghb) {
    for (const HistogramPatch& patch : m.histogram_patches) {
      if (row[patch.group] && grid.AssignBin(out) == patch.bin) {
        out = ApplyHistogramPatch(out, patch, grid);
      }
    }
  } else {
    for (const LinearPatch& patch : m.linear_patches) {
      if (row[patch.group] && InOneSidedBin(out, grid, patch.bin, patch.side)) {
        out = ApplyLinearPatch(out, patch, grid);
      }
    }
  }
  return out;
}

void CheckBatch(const CalibratorModel& model, std::span<const double> p,
                const GroupSet& groups) {
  if (UsesGroups(MethodOf(model)) && groups.num_rows() != p.size()) {
    throw DataError("group membership rows do not match the scores");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    CheckApplyInput(model, p[i],
                    UsesGroups(MethodOf(model)) ? groups.num_groups() : 0);
  }
}

std::span<const std::uint8_t> RowOrEmpty(const GroupSet& groups, std::size_t i) {
  if (i >= groups.num_rows()) return {};
  return groups.Row(i);
}

}  // namespace

double Apply(const CalibratorModel& model, double p,
             std::span<const std::uint8_t> memberships) {
  CheckApplyInput(model, p, memberships.size());
  return ApplyUnchecked(model, p, memberships);
}

std::vector<double> ApplyAll(const CalibratorModel& model,
                             std::span<const double> p, const GroupSet& groups) {
  CheckBatch(model, p, groups);
  std::vector<double> out(p.size());
  kernels::ParallelFor(p.size(), [&](std::size_t i) {
    out[i] = ApplyUnchecked(model, p[i], RowOrEmpty(groups, i));
  });
  return out;
}

namespace reference {

std::vector<double> ApplyAll(const CalibratorModel& model,
                             std::span<const double> p, const GroupSet& groups) {
  CheckBatch(model, p, groups);
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = ApplyUnchecked(model, p[i], RowOrEmpty(groups, i));
  }
  return out;
}

}  // namespace reference
}  // namespace codecal

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

#include "codecal/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "codecal/error.hpp"
#include "codecal/kernels.hpp"

namespace codecal {

using nlohmann::json;

namespace {

void CheckInput(std::span<const double> p, std::span<const int> y) {
  if (p.empty()) throw DataError("metric of an empty sample");
  if (p.size() != y.size()) {
    throw DataError("scores and labels differ in length");
  }
}

double DivideOrZero(double num, std::size_t den) {
  return den == 0 ? 0.0 : num / static_cast<double>(den);
}

}  // namespace

double Ece(std::span<const double> p, std::span<const int> y,
           const BinGrid& grid) {
  CheckInput(p, y);
  const kernels::BinStats s = kernels::ComputeBinStats(p, y, grid);
  double ece = 0.0;
  for (std::size_t b = 0; b < s.count.size(); ++b) {
    if (s.count[b] == 0) continue;
    const double acc = s.label_sum[b] / static_cast<double>(s.count[b]);
    const double conf = s.score_sum[b] / static_cast<double>(s.count[b]);
    ece += static_cast<double>(s.count[b]) / static_cast<double>(p.size()) *
           std::abs(acc - conf);
  }
  return ece;
}

double Brier(std::span<const double> p, std::span<const int> y) {
  CheckInput(p, y);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - y[i];
    sum += d * d;
  }
  return sum / static_cast<double>(p.size());
}

double BaseRate(std::span<const int> y) {
  if (y.empty()) throw DataError("base rate of an empty sample");
  double sum = 0.0;
  for (int v : y) sum += v;
  return sum / static_cast<double>(y.size());
}

double BrierRef(std::span<const int> y) {
  const double pr = BaseRate(y);
  return pr * (1.0 - pr);
}

double Bss(std::span<const double> p, std::span<const int> y) {
  const double b = Brier(p, y);
  const double ref = BrierRef(y);
  if (ref == 0.0) {
    return b == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  }
  return (ref - b) / ref;
}

double AccuracyAtHalf(std::span<const double> p, std::span<const int> y) {
  CheckInput(p, y);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    hits += (p[i] >= 0.5) == (y[i] == 1);
  }
  return static_cast<double>(hits) / static_cast<double>(p.size());
}

namespace {

// P(g) * gASCE(g) and gASCE(g) from one group's slice of cell statistics.
double GasceFromCells(const kernels::CellStats& s, std::size_t group) {
  std::size_t group_count = 0;
  for (int b = 0; b < s.m_bins; ++b) group_count += s.count[group * s.m_bins + b];
  if (group_count == 0) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (int b = 0; b < s.m_bins; ++b) {
    const std::size_t c = s.count[group * s.m_bins + b];
    if (c == 0) continue;
    const double delta = s.residual_sum[group * s.m_bins + b] / static_cast<double>(c);
    total += static_cast<double>(c) / static_cast<double>(group_count) * delta * delta;
  }
  return total;
}

}  // namespace

double Gasce(std::span<const double> p, std::span<const int> y,
             const GroupSet& groups, std::size_t group, const BinGrid& grid) {
  CheckInput(p, y);
  if (group >= groups.num_groups()) throw DataError("group index out of range");
  if (groups.Degenerate(group)) {
    throw DataError("group '" + groups.names()[group] + "' is empty");
  }
  const std::size_t col[] = {group};
  return GasceFromCells(
      kernels::ComputeCellStats(p, y, groups.Select(col), grid), 0);
}

double Gasce(std::span<const double> p, std::span<const int> y,
             const GroupSet& groups, std::string_view group,
             const BinGrid& grid) {
  auto idx = groups.IndexOf(group);
  if (!idx) throw DataError("unknown group '" + std::string(group) + "'");
  return Gasce(p, y, groups, *idx, grid);
}

std::vector<GroupCheck> MulticalibrationCheck(std::span<const double> p,
                                              std::span<const int> y,
                                              const GroupSet& groups,
                                              const BinGrid& grid,
                                              double alpha) {
  CheckInput(p, y);
  if (!(alpha > 0.0)) throw UsageError("alpha must be positive");
  const kernels::CellStats cells = kernels::ComputeCellStats(p, y, groups, grid);
  std::vector<GroupCheck> out;
  for (std::size_t g = 0; g < groups.num_groups(); ++g) {
    GroupCheck c;
    c.name = groups.names()[g];
    c.mass = groups.Mass(g);
    c.degenerate = groups.Degenerate(g);
    if (!c.degenerate) {
      c.gasce = GasceFromCells(cells, g);
      c.pass = c.mass * c.gasce < alpha;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<ReliabilityRow> ReliabilityTable(std::span<const double> p,
                                             std::span<const int> y,
                                             const BinGrid& grid) {
  CheckInput(p, y);
  const kernels::BinStats s = kernels::ComputeBinStats(p, y, grid);
  std::vector<ReliabilityRow> rows;
  for (std::size_t b = 0; b < s.count.size(); ++b) {
    if (s.count[b] == 0) continue;
    rows.push_back({static_cast<int>(b) + 1, s.count[b],
                    s.score_sum[b] / static_cast<double>(s.count[b]),
                    s.label_sum[b] / static_cast<double>(s.count[b])});
  }
  return rows;
}

EvalReport Evaluate(std::string method, std::span<const double> p,
                    std::span<const int> y, const GroupSet* groups,
                    const BinGrid& grid) {
  CheckInput(p, y);
  EvalReport r;
  r.method = std::move(method);
  r.m_bins = grid.size();
  r.n = p.size();
  r.ece = Ece(p, y, grid);
  r.brier = Brier(p, y);
  r.base_rate = BaseRate(y);
  r.brier_ref = r.base_rate * (1.0 - r.base_rate);
  r.bss = Bss(p, y);
  r.accuracy = AccuracyAtHalf(p, y);
  r.reliability = ReliabilityTable(p, y, grid);
  if (groups != nullptr) {
    const kernels::CellStats cells =
        kernels::ComputeCellStats(p, y, *groups, grid);
    for (std::size_t g = 0; g < groups->num_groups(); ++g) {
      GroupSummary s;
      s.name = groups->names()[g];
      s.count = groups->Count(g);
      s.mass = groups->Mass(g);
      double score_sum = 0.0;
      double label_sum = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!groups->Contains(i, g)) continue;
        score_sum += p[i];
        label_sum += y[i];
      }
      s.mean_score = DivideOrZero(score_sum, s.count);
      s.accuracy = DivideOrZero(label_sum, s.count);
      if (s.count > 0) s.gasce = GasceFromCells(cells, g);
      r.groups.push_back(s);
    }
  }
  return r;
}

namespace {

json MetricJson(double v) {
  if (std::isinf(v) && v < 0) return "-inf";
  return v;
}

double MetricFromJson(const json& j) {
  if (j.is_string() && j.get<std::string>() == "-inf") {
    return -std::numeric_limits<double>::infinity();
  }
  return j.get<double>();
}

}  // namespace

json ReportToJson(const EvalReport& r) {
  json j;
  j["format"] = "codecal-report";
  j["version"] = 1;
  j["method"] = r.method;
  j["m_bins"] = r.m_bins;
  j["n"] = r.n;
  j["ece"] = r.ece;
  j["brier"] = r.brier;
  j["brier_ref"] = r.brier_ref;
  j["bss"] = MetricJson(r.bss);
  j["accuracy"] = r.accuracy;
  j["base_rate"] = r.base_rate;
  j["groups"] = json::array();
  for (const GroupSummary& g : r.groups) {
    j["groups"].push_back({{"name", g.name},
                           {"count", g.count},
                           {"mass", g.mass},
                           {"mean_score", g.mean_score},
                           {"accuracy", g.accuracy},
                           {"gasce", g.gasce ? json(*g.gasce) : json(nullptr)}});
  }
  j["reliability"] = json::array();
  for (const ReliabilityRow& row : r.reliability) {
    j["reliability"].push_back({{"bin", row.bin},
                                {"count", row.count},
                                {"conf", row.conf},
                                {"acc", row.acc}});
  }
  return j;
}

EvalReport ReportFromJson(const json& j) {
  try {
    if (j.at("format") != "codecal-report" || j.at("version") != 1) {
      throw DataError("not a version-1 codecal report");
    }
    EvalReport r;
    r.method = j.at("method").get<std::string>();
    r.m_bins = j.at("m_bins").get<int>();
    r.n = j.at("n").get<std::size_t>();
    r.ece = j.at("ece").get<double>();
    r.brier = j.at("brier").get<double>();
    r.brier_ref = j.at("brier_ref").get<double>();
    r.bss = MetricFromJson(j.at("bss"));
    r.accuracy = j.at("accuracy").get<double>();
    r.base_rate = j.at("base_rate").get<double>();
    for (const json& g : j.at("groups")) {
      GroupSummary s;
      s.name = g.at("name").get<std::string>();
      s.count = g.at("count").get<std::size_t>();
      s.mass = g.at("mass").get<double>();
      s.mean_score = g.at("mean_score").get<double>();
      s.accuracy = g.at("accuracy").get<double>();
      if (!g.at("gasce").is_null()) s.gasce = g.at("gasce").get<double>();
      r.groups.push_back(s);
    }
    for (const json& row : j.at("reliability")) {
      r.reliability.push_back({row.at("bin").get<int>(),
                               row.at("count").get<std::size_t>(),
                               row.at("conf").get<double>(),
                               row.at("acc").get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

EvalReport LoadReport(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
  return ReportFromJson(j);
}

std::string FormatMetric(double v) {
  if (std::isinf(v) && v < 0) return "-inf";
  return fmt::format("{:.6f}", v);
}

std::string ReliabilityCsv(const EvalReport& r) {
  std::string out = "bin,count,conf,acc\n";
  for (const ReliabilityRow& row : r.reliability) {
    out += fmt::format("{},{},{},{}\n", row.bin, row.count,
                       FormatMetric(row.conf), FormatMetric(row.acc));
  }
  return out;
}

}  // namespace codecal

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

#include "codecal/model_io.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "codecal/error.hpp"

namespace codecal {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "codecal-model";

std::string SideName(Side s) { return s == Side::kAtMost ? "le" : "ge"; }

Side ParseSide(const std::string& s) {
  if (s == "le") return Side::kAtMost;
  if (s == "ge") return Side::kAtLeast;
  throw DataError("model: unknown bin side '" + s + "'");
}

std::string LsLossName(LsLoss l) {
  return l == LsLoss::kCrossEntropy ? "ce" : "brier";
}

LsLoss ParseLsLoss(const std::string& s) {
  if (s == "ce") return LsLoss::kCrossEntropy;
  if (s == "brier") return LsLoss::kBrier;
  throw DataError("model: unknown ls_loss '" + s + "'");
}

template <typename T>
T Get(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw DataError(std::string("model: missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("model: field '") + key + "' has the wrong type");
  }
}

void CheckGroupIndex(std::size_t g, std::size_t num_groups) {
  if (g >= num_groups) throw DataError("model: patch group index out of range");
}

void CheckBin(int bin, int m_bins) {
  if (bin < 1 || bin > m_bins) throw DataError("model: patch bin out of range");
}

void CheckFinite(double v) {
  if (!std::isfinite(v)) throw DataError("model: non-finite coefficient");
}

}  // namespace

nlohmann::json ModelToJson(const CalibratorModel& model) {
  json j;
  j["format"] = kFormat;
  j["version"] = kModelFormatVersion;
  j["method"] = std::string(MethodName(MethodOf(model)));
  if (const auto* m = std::get_if<PlattModel>(&model)) {
    j["params"] = {{"a", m->a}, {"b", m->b}};
    j["meta"] = {{"iterations", m->iterations}, {"converged", m->converged}};
  } else if (const auto* m = std::get_if<HistogramBinningModel>(&model)) {
    j["m_bins"] = m->m_bins;
    j["params"] = {{"delta", m->delta}};
  } else if (const auto* m = std::get_if<GcurModel>(&model)) {
    j["groups"] = m->group_names;
    j["params"] = {{"group_coefs", m->group_coefs}};
    if (m->variant == GcurVariant::kLogistic) {
      j["params"]["intercept"] = m->intercept;
      j["params"]["score_coef"] = m->score_coef;
      j["meta"]["form"] = "sigma(intercept + score_coef * logit(p) + sum_g coef_g * g)";
    } else {
      j["meta"]["form"] = "p + sum_g coef_g * g";
    }
    j["meta"]["dropped_groups"] = m->dropped_groups;
    j["meta"]["dependent_groups"] = m->dependent_groups;
    j["meta"]["iterations"] = m->iterations;
    j["meta"]["converged"] = m->converged;
  } else {
    const auto& it = std::get<IterativePatchModel>(model);
    j["m_bins"] = it.m_bins;
    j["groups"] = it.group_names;
    json patches = json::array();
    if (it.kind == PatchKind::kIghb) {
      for (const HistogramPatch& p : it.histogram_patches) {
        patches.push_back({{"group", p.group}, {"bin", p.bin}, {"delta", p.delta}});
      }
    } else {
      for (const LinearPatch& p : it.linear_patches) {
        patches.push_back({{"group", p.group},
                           {"bin", p.bin},
                           {"side", SideName(p.side)},
                           {"alpha", p.alpha},
                           {"beta", p.beta}});
      }
    }
    j["patches"] = std::move(patches);
    json meta = {{"iterations", it.iterations},
                 {"converged", it.converged},
                 {"stop_reason", it.stop_reason},
                 {"dropped_groups", it.dropped_groups}};
    if (it.kind == PatchKind::kIghb) meta["alpha"] = it.alpha;
    if (it.kind == PatchKind::kIglb) {
      meta["epsilon"] = it.epsilon;
      meta["ls_loss"] = LsLossName(it.ls_loss);
      meta["val_brier"] = it.val_brier;
      json skipped = json::array();
      for (const SkippedRegion& s : it.skipped) {
        skipped.push_back({{"iteration", s.iteration},
                           {"group", s.group},
                           {"bin", s.bin},
                           {"side", SideName(s.side)}});
      }
      meta["skipped"] = std::move(skipped);
    }
    j["meta"] = std::move(meta);
  }
  return j;
}

CalibratorModel ModelFromJson(const nlohmann::json& j) {
  if (!j.is_object() || Get<std::string>(j, "format") != kFormat) {
    throw DataError("model: not a codecal model document");
  }
  const int version = Get<int>(j, "version");
  if (version != kModelFormatVersion) {
    throw DataError("model: unsupported format version " + std::to_string(version));
  }
  Method method;
  try {
    method = ParseMethod(Get<std::string>(j, "method"));
  } catch (const UsageError& e) {
    throw DataError(std::string("model: ") + e.what());
  }
  const json& params = j.contains("params") ? j.at("params") : json::object();
  const json& meta = j.contains("meta") ? j.at("meta") : json::object();

  switch (method) {
    case Method::kPlatt: {
      PlattModel m;
      m.a = Get<double>(params, "a");
      m.b = Get<double>(params, "b");
      CheckFinite(m.a);
      CheckFinite(m.b);
      m.iterations = meta.value("iterations", 0);
      m.converged = meta.value("converged", true);
      return m;
    }
    case Method::kHistogramBinning: {
      HistogramBinningModel m;
      m.m_bins = Get<int>(j, "m_bins");
      BinGrid grid(m.m_bins);
      m.delta = Get<std::vector<double>>(params, "delta");
      if (m.delta.size() != static_cast<std::size_t>(m.m_bins)) {
        throw DataError("model: delta length differs from m_bins");
      }
      for (double d : m.delta) CheckFinite(d);
      return m;
    }
    case Method::kLinr:
    case Method::kLogr: {
      GcurModel m;
      m.variant = method == Method::kLinr ? GcurVariant::kLinear : GcurVariant::kLogistic;
      m.group_names = Get<std::vector<std::string>>(j, "groups");
      m.group_coefs = Get<std::vector<double>>(params, "group_coefs");
      if (m.group_coefs.size() != m.group_names.size()) {
        throw DataError("model: one coefficient per group expected");
      }
      for (double c : m.group_coefs) CheckFinite(c);
      if (m.variant == GcurVariant::kLogistic) {
        m.intercept = Get<double>(params, "intercept");
        m.score_coef = Get<double>(params, "score_coef");
        CheckFinite(m.intercept);
        CheckFinite(m.score_coef);
      }
      m.dropped_groups = meta.value("dropped_groups", std::vector<std::string>{});
      m.dependent_groups = meta.value("dependent_groups", std::vector<std::string>{});
      m.iterations = meta.value("iterations", 0);
      m.converged = meta.value("converged", true);
      return m;
    }
    case Method::kIghb:
    case Method::kIglb: {
      IterativePatchModel m;
      m.kind = method == Method::kIghb ? PatchKind::kIghb : PatchKind::kIglb;
      m.m_bins = Get<int>(j, "m_bins");
      BinGrid grid(m.m_bins);
      m.group_names = Get<std::vector<std::string>>(j, "groups");
      const json patches = Get<json>(j, "patches");
      if (!patches.is_array()) throw DataError("model: patches must be an array");
      for (const json& p : patches) {
        const auto g = Get<std::size_t>(p, "group");
        const int bin = Get<int>(p, "bin");
        CheckGroupIndex(g, m.group_names.size());
        CheckBin(bin, m.m_bins);
        if (m.kind == PatchKind::kIghb) {
          const double delta = Get<double>(p, "delta");
          CheckFinite(delta);
          m.histogram_patches.push_back({g, bin, delta});
        } else {
          const LinearPatch lp{g, bin, ParseSide(Get<std::string>(p, "side")),
                               Get<double>(p, "alpha"), Get<double>(p, "beta")};
          CheckFinite(lp.alpha);
          CheckFinite(lp.beta);
          m.linear_patches.push_back(lp);
        }
      }
      m.iterations = meta.value("iterations", 0);
      m.converged = meta.value("converged", false);
      m.stop_reason = meta.value("stop_reason", std::string());
      m.dropped_groups = meta.value("dropped_groups", std::vector<std::string>{});
      if (m.kind == PatchKind::kIghb) m.alpha = meta.value("alpha", 1.0 / m.m_bins);
      if (m.kind == PatchKind::kIglb) {
        m.epsilon = meta.value("epsilon", 0.05);
        m.ls_loss = ParseLsLoss(meta.value("ls_loss", std::string("ce")));
        m.val_brier = meta.value("val_brier", std::vector<double>{});
        if (meta.contains("skipped")) {
          for (const json& s : meta.at("skipped")) {
            m.skipped.push_back({Get<int>(s, "iteration"), Get<std::size_t>(s, "group"),
                                 Get<int>(s, "bin"),
                                 ParseSide(Get<std::string>(s, "side"))});
          }
        }
      }
      return m;
    }
  }
  throw DataError("model: unknown method");
}

void SaveModel(const std::filesystem::path& path, const CalibratorModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file " + path.string());
  out << ModelToJson(model).dump(2) << "\n";
  if (!out) throw IoError("failed writing model file " + path.string());
}

CalibratorModel LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("model file " + path.string() + ": " + e.what());
  }
  return ModelFromJson(j);
}

std::vector<std::string> ModelGroupNames(const CalibratorModel& model) {
  if (const auto* g = std::get_if<GcurModel>(&model)) return g->group_names;
  if (const auto* it = std::get_if<IterativePatchModel>(&model)) {
    return it->group_names;
  }
  return {};
}

}  // namespace codecal

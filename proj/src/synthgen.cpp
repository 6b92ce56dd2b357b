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

#include "codecal/synthgen.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <fmt/format.h>

#include "codecal/error.hpp"

namespace codecal {

namespace {

constexpr double kMassTolerance = 1e-9;

// Portable conversions; the standard distributions are implementation-defined.
double Uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t UniformIndex(std::mt19937_64& rng, std::size_t n) {
  const auto i = static_cast<std::size_t>(Uniform01(rng) * static_cast<double>(n));
  return std::min(i, n - 1);
}

void ValidateRange(const LineRange& r, const std::string& where) {
  if (r.lo < 1 || r.hi < r.lo) {
    throw UsageError(where + ": loc_range needs 1 <= lo <= hi");
  }
}

std::string MakeCode(std::mt19937_64& rng, const LineRange& r) {
  const int lines = r.lo + static_cast<int>(UniformIndex(rng, r.hi - r.lo + 1));
  std::string code;
  for (int l = 0; l < lines; ++l) {
    code += Uniform01(rng) < 0.2 ? "if x:\n" : "x += 1\n";
  }
  return code;
}

LineRange RangeFromJson(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw UsageError("synth spec: loc_range must be [lo, hi]");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

void SynthSpec::Validate() const {
  if (n_samples == 0) throw UsageError("synth spec: n_samples must be positive");
  if (samples_per_problem == 0) {
    throw UsageError("synth spec: samples_per_problem must be positive");
  }
  if (languages.empty()) throw UsageError("synth spec: languages must not be empty");
  ValidateRange(loc_range, "synth spec");
  double total = 0.0;
  std::set<std::string> names;
  for (const SynthBlock& b : blocks) {
    const std::string where = "synth block '" + b.name + "'";
    if (b.name.empty()) throw UsageError("synth spec: block name must not be empty");
    if (!names.insert(b.name).second) throw UsageError(where + ": duplicate name");
    if (!(b.mass > 0.0 && b.mass <= 1.0)) throw UsageError(where + ": mass must be in (0, 1]");
    if (!(b.accuracy >= 0.0 && b.accuracy <= 1.0)) {
      throw UsageError(where + ": accuracy must be in [0, 1]");
    }
    const ConfidenceDist& d = b.confidence;
    if (d.kind == ConfidenceDist::Kind::kConstant) {
      if (!(d.c > 0.0 && d.c <= 1.0)) throw UsageError(where + ": constant score must be in (0, 1]");
    } else if (!(d.lo > 0.0 && d.lo <= d.hi && d.hi <= 1.0)) {
      throw UsageError(where + ": uniform score range needs 0 < lo <= hi <= 1");
    }
    if (b.loc_range) ValidateRange(*b.loc_range, where);
    total += b.mass;
  }
  if (total > 1.0 + kMassTolerance) {
    throw UsageError(fmt::format("synth spec: block masses sum to {} > 1", total));
  }
}

SynthData Generate(const SynthSpec& spec) {
  spec.Validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t num_blocks = spec.blocks.size();
  std::vector<double> cumulative;
  double total = 0.0;
  for (const SynthBlock& b : spec.blocks) cumulative.push_back(total += b.mass);
  const bool background = total < 1.0 - kMassTolerance;
  const SynthBlock kBackground{"", 1.0 - total, 0.5, ConfidenceDist::Constant(0.5),
                               std::nullopt, std::nullopt};

  SynthData out;
  out.dataset.provenance = fmt::format("synthgen(seed={})", spec.seed);
  out.dataset.samples.reserve(spec.n_samples);
  std::vector<std::uint8_t> membership(spec.n_samples * num_blocks, 0);

  std::size_t block = 0;
  std::string language;
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const std::size_t problem = i / spec.samples_per_problem;
    if (i % spec.samples_per_problem == 0) {
      const double u = Uniform01(rng);
      block = num_blocks;
      for (std::size_t b = 0; b < num_blocks; ++b) {
        if (u < cumulative[b]) {
          block = b;
          break;
        }
      }
      if (block == num_blocks && !background && num_blocks > 0) block = num_blocks - 1;
      language = spec.languages[UniformIndex(rng, spec.languages.size())];
    }
    const SynthBlock& b = block < num_blocks ? spec.blocks[block] : kBackground;
    const ConfidenceDist& d = b.confidence;
    const double raw = d.kind == ConfidenceDist::Kind::kConstant
                           ? d.c
                           : d.lo + (d.hi - d.lo) * Uniform01(rng);
    const int label = Uniform01(rng) < b.accuracy ? 1 : 0;

    Sample s;
    s.problem_id = fmt::format("synth-{:06d}", problem);
    s.sample_id = fmt::format("synth-{:06d}-{}", problem, i % spec.samples_per_problem);
    s.language = language;
    s.token_logprobs = {std::log(raw)};
    s.code_span = CodeSpan{0, 1};
    s.label = label;
    s.difficulty = b.difficulty;
    s.code_text = MakeCode(rng, b.loc_range.value_or(spec.loc_range));
    out.dataset.samples.push_back(std::move(s));
    if (block < num_blocks) membership[i * num_blocks + block] = 1;
  }
  std::vector<std::string> names;
  for (const SynthBlock& b : spec.blocks) names.push_back(b.name);
  out.blocks = GroupSet(std::move(names), spec.n_samples, std::move(membership));
  return out;
}

SynthSpec SynthSpecFromJson(const nlohmann::json& j) {
  try {
    SynthSpec spec;
    spec.n_samples = j.at("n_samples").get<std::size_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.languages = j.value("languages", spec.languages);
    spec.samples_per_problem = j.value("samples_per_problem", std::size_t{1});
    if (j.contains("loc_range")) spec.loc_range = RangeFromJson(j.at("loc_range"));
    for (const nlohmann::json& g : j.at("groups")) {
      SynthBlock b;
      b.name = g.at("name").get<std::string>();
      b.mass = g.at("mass").get<double>();
      b.accuracy = g.at("accuracy").get<double>();
      const nlohmann::json& c = g.at("confidence");
      if (c.contains("constant")) {
        b.confidence = ConfidenceDist::Constant(c.at("constant").get<double>());
      } else if (c.contains("uniform")) {
        const auto r = c.at("uniform").get<std::vector<double>>();
        if (r.size() != 2) throw UsageError("synth spec: uniform needs [lo, hi]");
        b.confidence = ConfidenceDist::Uniform(r[0], r[1]);
      } else {
        throw UsageError("synth spec: confidence must be {\"constant\": c} or "
                         "{\"uniform\": [lo, hi]}");
      }
      if (g.contains("difficulty")) b.difficulty = g.at("difficulty").get<std::string>();
      if (g.contains("loc_range")) b.loc_range = RangeFromJson(g.at("loc_range"));
      spec.blocks.push_back(std::move(b));
    }
    spec.Validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("synth spec: ") + e.what());
  }
}

SynthSpec LoadSynthSpec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synth spec " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("synth spec " + path.string() + ": " + e.what());
  }
  return SynthSpecFromJson(j);
}

SynthSpec PlantedAccuracySpec(std::size_t n_samples, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_samples = n_samples;
  spec.seed = seed;
  for (double acc : {0.3, 0.6, 0.9}) {
    SynthBlock b;
    b.name = fmt::format("acc_{:03d}", static_cast<int>(std::lround(acc * 100)));
    b.mass = 1.0 / 3.0;
    b.accuracy = acc;
    b.confidence = ConfidenceDist::Constant(0.5);
    b.difficulty = b.name;
    spec.blocks.push_back(std::move(b));
  }
  return spec;
}

}  // namespace codecal

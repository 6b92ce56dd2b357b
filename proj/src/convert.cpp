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

#include "codecal/convert.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "codecal/error.hpp"

namespace codecal {

namespace {

using nlohmann::json;

struct Resolved {
  std::optional<std::string> problem_id, sample_id, language, token_logprobs,
      label, difficulty, code_text, generation, tokens, token_offsets;
};

std::optional<std::string> Pick(const json& j, const std::vector<std::string>& keys) {
  for (const std::string& k : keys) {
    if (j.contains(k)) return k;
  }
  return std::nullopt;
}

std::string JoinKeys(const std::vector<std::string>& keys) {
  std::string s;
  for (const std::string& k : keys) s += (s.empty() ? "" : "|") + k;
  return s;
}

Resolved Resolve(const json& first, const ConvertOptions& opt) {
  const CalibriLayout& l = opt.layout;
  Resolved r{Pick(first, l.problem_id), Pick(first, l.sample_id),
             Pick(first, l.language),   Pick(first, l.token_logprobs),
             Pick(first, l.label),      Pick(first, l.difficulty),
             Pick(first, l.code_text),  Pick(first, l.generation),
             Pick(first, l.tokens),     Pick(first, l.token_offsets)};
  std::vector<std::string> missing;
  if (!r.problem_id) missing.push_back(JoinKeys(l.problem_id));
  if (!r.token_logprobs) missing.push_back(JoinKeys(l.token_logprobs));
  if (!r.label) missing.push_back(JoinKeys(l.label));
  if (!r.language && !opt.default_language) missing.push_back(JoinKeys(l.language));
  if (!missing.empty()) {
    std::string keys;
    for (auto it = first.begin(); it != first.end(); ++it) {
      keys += (keys.empty() ? "" : ", ") + it.key();
    }
    std::string need;
    for (const std::string& m : missing) need += (need.empty() ? "" : "; ") + m;
    throw DataError("unrecognized source layout; expected keys: " + need +
                    " (found: " + keys + ")");
  }
  return r;
}

std::string AsId(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw DataError(where + ": id must be a string or integer");
}

std::optional<std::vector<double>> Logprobs(const json& v, const std::string& where) {
  if (v.is_null() || (v.is_array() && v.empty())) return std::nullopt;
  if (!v.is_array()) throw DataError(where + ": log-probabilities must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& e : v) {
    if (e.is_number()) {
      out.push_back(e.get<double>());
    } else if (e.is_object() && e.contains("logprob") && e.at("logprob").is_number()) {
      out.push_back(e.at("logprob").get<double>());
    } else {
      throw DataError(where + ": log-probability entries must be numbers");
    }
  }
  return out;
}

int AsLabel(const json& v, const std::string& where) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) {
    return v.get<int>();
  }
  throw DataError(where + ": label must be a boolean or 0/1");
}

std::optional<std::vector<CharRange>> Offsets(const json& rec, const Resolved& r,
                                              const std::string& where) {
  if (r.token_offsets && rec.contains(*r.token_offsets)) {
    std::vector<CharRange> out;
    for (const json& o : rec.at(*r.token_offsets)) {
      if (!o.is_array() || o.size() != 2) {
        throw DataError(where + ": token offsets must be [begin, end] pairs");
      }
      out.push_back({o[0].get<std::size_t>(), o[1].get<std::size_t>()});
    }
    return out;
  }
  if (r.tokens && rec.contains(*r.tokens)) {
    std::vector<CharRange> out;
    std::size_t pos = 0;
    for (const json& t : rec.at(*r.tokens)) {
      const std::size_t len = t.get<std::string>().size();
      out.push_back({pos, pos + len});
      pos += len;
    }
    return out;
  }
  return std::nullopt;
}

}  // namespace

nlohmann::json ConvertResult::Metadata(const std::string& source) const {
  json m = json::object();
  for (const auto& [from, to] : mapping) m[to] = from;
  return {{"source", source},
          {"mapping", m},
          {"records", dataset.size()},
          {"skipped_missing_logprobs", skipped_missing_logprobs},
          {"missing_code_span", missing_code_span}};
}

ConvertResult ConvertCalibri(std::istream& in, const std::string& source,
                             const ConvertOptions& opt) {
  // JSON array or JSON lines.
  std::vector<json> records;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t first_char = text.find_first_not_of(" \t\r\n");
  if (first_char != std::string::npos && text[first_char] == '[') {
    try {
      for (json& j : json::parse(text)) records.push_back(std::move(j));
    } catch (const json::parse_error& e) {
      throw DataError(source + ": " + e.what());
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        records.push_back(json::parse(line));
      } catch (const json::parse_error& e) {
        throw DataError(source + " line " + std::to_string(n) + ": " + e.what());
      }
    }
  }

  ConvertResult out;
  out.dataset.provenance = source;
  if (records.empty()) return out;
  const Resolved r = Resolve(records.front(), opt);
  const std::pair<const std::optional<std::string>*, const char*> fields[] = {
      {&r.problem_id, "problem_id"},   {&r.sample_id, "sample_id"},
      {&r.language, "language"},       {&r.token_logprobs, "token_logprobs"},
      {&r.label, "label"},             {&r.difficulty, "difficulty"},
      {&r.code_text, "code_text"},     {&r.generation, "code_span (fence text)"},
      {&r.tokens, "code_span (tokens)"}, {&r.token_offsets, "code_span (offsets)"}};
  for (const auto& [key, target] : fields) {
    if (*key) out.mapping.emplace_back(**key, target);
  }
  if (!r.language) out.mapping.emplace_back("(default)", "language");

  std::map<std::string, std::size_t> per_problem;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& rec = records[i];
    const std::string where = source + " record " + std::to_string(i + 1);
    if (!rec.is_object()) throw DataError(where + ": not an object");
    if (!rec.contains(*r.token_logprobs)) {
      ++out.skipped_missing_logprobs;
      continue;
    }
    const auto lps = Logprobs(rec.at(*r.token_logprobs), where);
    if (!lps) {
      ++out.skipped_missing_logprobs;
      continue;
    }
    Sample s;
    if (!rec.contains(*r.problem_id)) throw DataError(where + ": missing " + *r.problem_id);
    s.problem_id = AsId(rec.at(*r.problem_id), where);
    const std::size_t k = per_problem[s.problem_id]++;
    s.sample_id = r.sample_id && rec.contains(*r.sample_id)
                      ? AsId(rec.at(*r.sample_id), where)
                      : s.problem_id + "#" + std::to_string(k);
    s.language = r.language && rec.contains(*r.language)
                     ? rec.at(*r.language).get<std::string>()
                     : opt.default_language.value_or("");
    if (s.language.empty()) throw DataError(where + ": missing language");
    s.token_logprobs = *lps;
    if (!rec.contains(*r.label)) throw DataError(where + ": missing " + *r.label);
    s.label = AsLabel(rec.at(*r.label), where);
    if (r.difficulty && rec.contains(*r.difficulty) && !rec.at(*r.difficulty).is_null()) {
      const json& d = rec.at(*r.difficulty);
      s.difficulty = d.is_string() ? d.get<std::string>() : d.dump();
    }
    if (r.code_text && rec.contains(*r.code_text) && rec.at(*r.code_text).is_string()) {
      s.code_text = rec.at(*r.code_text).get<std::string>();
    }
    if (rec.contains("code_span")) {
      const json& span = rec.at("code_span");
      s.code_span = CodeSpan{span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
    } else if (r.generation && rec.contains(*r.generation)) {
      const auto offsets = Offsets(rec, r, where);
      if (offsets) {
        if (offsets->size() != s.token_logprobs.size()) {
          throw DataError(where + ": token offsets and log-probabilities differ in length");
        }
        s.code_span = ExtractCodeSpan(rec.at(*r.generation).get<std::string>(), *offsets);
      }
    }
    if (!s.code_span) ++out.missing_code_span;
    try {
      ValidateSample(s);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    out.dataset.samples.push_back(std::move(s));
  }
  return out;
}

ConvertResult ConvertCalibri(const std::filesystem::path& path,
                             const ConvertOptions& opt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open source file " + path.string());
  return ConvertCalibri(in, path.string(), opt);
}

}  // namespace codecal

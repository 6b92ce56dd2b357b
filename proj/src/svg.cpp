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

#include "codecal/svg.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace codecal {

namespace {

constexpr double kSize = 400.0;
constexpr double kMargin = 40.0;

double X(double v) { return kMargin + v * kSize; }
double Y(double v) { return kMargin + (1.0 - v) * kSize; }

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Header(const std::string& title, const std::string& x_label,
                   const std::string& y_label) {
  const double full = kSize + 2 * kMargin;
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" "
      "height=\"{0:.0f}\" viewBox=\"0 0 {0:.0f} {0:.0f}\">\n",
      full);
  s += fmt::format("<title>{}</title>\n", Escape(title));
  s += fmt::format(
      "<rect class=\"frame\" x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" "
      "height=\"{:.3f}\" fill=\"none\" stroke=\"black\"/>\n",
      kMargin, kMargin, kSize, kSize);
  s += fmt::format(
      "<line class=\"identity\" x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" "
      "y2=\"{:.3f}\" stroke=\"gray\" stroke-width=\"1\" stroke-dasharray=\"4 4\"/>\n",
      X(0), Y(0), X(1), Y(1));
  s += fmt::format(
      "<text x=\"{:.3f}\" y=\"{:.3f}\" text-anchor=\"middle\">{}</text>\n",
      X(0.5), full - 8.0, Escape(x_label));
  s += fmt::format(
      "<text x=\"12\" y=\"{:.3f}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 12 {:.3f})\">{}</text>\n",
      Y(0.5), Y(0.5), Escape(y_label));
  return s;
}

}  // namespace

std::string ReliabilitySvg(const EvalReport& report) {
  std::string s = Header(report.method + " reliability", "confidence", "accuracy");
  std::size_t max_count = 0;
  for (const ReliabilityRow& r : report.reliability) max_count = std::max(max_count, r.count);
  const double width = kSize / std::max(report.m_bins, 1);
  for (const ReliabilityRow& r : report.reliability) {
    const double opacity =
        0.15 + 0.85 * static_cast<double>(r.count) / static_cast<double>(max_count);
    s += fmt::format(
        "<rect class=\"bar\" data-bin=\"{}\" data-count=\"{}\" x=\"{:.3f}\" "
        "y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" fill=\"steelblue\" "
        "fill-opacity=\"{:.3f}\"/>\n",
        r.bin, r.count, X(r.conf) - width / 2, Y(r.acc), width, r.acc * kSize,
        opacity);
  }
  s += "</svg>\n";
  return s;
}

std::string GroupScatterSvg(const EvalReport& report) {
  std::string s = Header(report.method + " groups", "mean score", "accuracy");
  for (const GroupSummary& g : report.groups) {
    if (g.count == 0) continue;
    s += fmt::format(
        "<circle class=\"group\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"4\" "
        "fill=\"darkorange\"><title>{} (n={})</title></circle>\n",
        X(g.mean_score), Y(g.accuracy), Escape(g.name), g.count);
  }
  s += "</svg>\n";
  return s;
}

}  // namespace codecal

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

#include "codecal/binning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "codecal/error.hpp"

namespace codecal {
namespace {

void CheckUnitInterval(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DataError("confidence " + std::to_string(p) + " outside [0, 1]");
  }
}

}  // namespace

BinGrid::BinGrid(int m_bins) : m_bins_(m_bins) {
  if (m_bins < 2) {
    throw UsageError("bin grid needs M >= 2, got " + std::to_string(m_bins));
  }
}

int BinGrid::AssignBin(double p) const {
  CheckUnitInterval(p);
  if (p >= 1.0) return m_bins_;
  // p * M can land on the wrong side of an edge; compare against the edges
  // exactly as Point() produces them.
  int m = static_cast<int>(std::floor(p * m_bins_));
  m = std::clamp(m, 0, m_bins_ - 1);
  while (m > 0 && p < Point(m)) --m;
  while (m + 1 < m_bins_ && p >= Point(m + 1)) ++m;
  return m + 1;
}

int BinGrid::GridIndex(double p) const {
  CheckUnitInterval(p);
  const auto midpoint = [this](int k) {
    return static_cast<double>(2 * k + 1) / (2.0 * m_bins_);
  };
  int i = static_cast<int>(std::floor(p * m_bins_ + 0.5));
  i = std::clamp(i, 0, m_bins_);
  while (i > 0 && p < midpoint(i - 1)) --i;
  while (i < m_bins_ && p >= midpoint(i)) ++i;
  // The grid has no zero point.
  return std::max(i, 1);
}

bool InOneSidedBin(double p, const BinGrid& grid, int m, Side side) {
  const double edge = grid.Point(m);
  return side == Side::kAtMost ? p <= edge : p >= edge;
}

std::vector<std::size_t> OneSidedBins(std::span<const double> scores,
                                      const BinGrid& grid, int m, Side side) {
  if (m < 1 || m > grid.size()) {
    throw UsageError("bin index " + std::to_string(m) + " outside 1.." +
                     std::to_string(grid.size()));
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (InOneSidedBin(scores[i], grid, m, side)) out.push_back(i);
  }
  return out;
}

}  // namespace codecal

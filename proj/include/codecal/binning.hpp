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

#ifndef CODECAL_BINNING_HPP_
#define CODECAL_BINNING_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace codecal {

// Equal-width partition of [0, 1] into M bins, with grid points {i/M}, i=1..M.
// Bin indices are 1-based throughout the public API.
class BinGrid {
 public:
  explicit BinGrid(int m_bins);

  int size() const { return m_bins_; }

  // i/M, for 0 <= i <= M.
  double Point(int i) const { return static_cast<double>(i) / m_bins_; }

  // Bin m satisfies (m-1)/M <= p < m/M; the last bin is closed at 1.
  int AssignBin(double p) const;

  // Index i in 1..M of the grid point nearest to p; ties go up.
  int GridIndex(double p) const;
  double RoundToGrid(double p) const { return Point(GridIndex(p)); }

 private:
  int m_bins_;
};

enum class Side { kAtMost, kAtLeast };

// p <= m/M for kAtMost, p >= m/M for kAtLeast.
bool InOneSidedBin(double p, const BinGrid& grid, int m, Side side);

std::vector<std::size_t> OneSidedBins(std::span<const double> scores,
                                      const BinGrid& grid, int m, Side side);

}  // namespace codecal

#endif  // CODECAL_BINNING_HPP_

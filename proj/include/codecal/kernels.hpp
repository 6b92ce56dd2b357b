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

#ifndef CODECAL_KERNELS_HPP_
#define CODECAL_KERNELS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "codecal/binning.hpp"
#include "codecal/groups.hpp"

// Data-parallel accumulation kernels shared by the metrics and the iterative
// calibrators. The OpenMP versions reduce over fixed-size sample blocks in
// block order, so results do not depend on the thread count. The serial
// versions in `reference` accumulate in sample order and exist for testing
// and benchmarking.
namespace codecal::kernels {

inline constexpr std::size_t kBlockSize = 4096;

// Disjoint-bin statistics; index b holds bin b+1.
struct BinStats {
  std::vector<std::size_t> count;
  std::vector<double> score_sum;
  std::vector<double> label_sum;

  explicit BinStats(int m_bins = 0)
      : count(m_bins, 0), score_sum(m_bins, 0.0), label_sum(m_bins, 0.0) {}
  bool operator==(const BinStats&) const = default;
};

// Count and summed residual (y - p) per cell. For disjoint bins a cell is
// (group, bin) at group * M + (bin - 1). For one-sided bins it is
// (group, m, side) at (group * M + (m - 1)) * 2 + side, side 0 for <= and 1
// for >=.
struct CellStats {
  std::size_t num_groups = 0;
  int m_bins = 0;
  std::vector<std::size_t> count;
  std::vector<double> residual_sum;

  bool operator==(const CellStats&) const = default;
};

BinStats ComputeBinStats(std::span<const double> scores,
                         std::span<const int> labels, const BinGrid& grid);
CellStats ComputeCellStats(std::span<const double> scores,
                           std::span<const int> labels, const GroupSet& groups,
                           const BinGrid& grid);
CellStats ComputeOneSidedStats(std::span<const double> scores,
                               std::span<const int> labels,
                               const GroupSet& groups, const BinGrid& grid);

namespace reference {

BinStats ComputeBinStats(std::span<const double> scores,
                         std::span<const int> labels, const BinGrid& grid);
CellStats ComputeCellStats(std::span<const double> scores,
                           std::span<const int> labels, const GroupSet& groups,
                           const BinGrid& grid);
CellStats ComputeOneSidedStats(std::span<const double> scores,
                               std::span<const int> labels,
                               const GroupSet& groups, const BinGrid& grid);

}  // namespace reference

// Runs fn(i) for i in [0, n) across OpenMP threads. fn must only write to
// per-index state.
template <typename Fn>
void ParallelFor(std::size_t n, Fn&& fn) {
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

}  // namespace codecal::kernels

#endif  // CODECAL_KERNELS_HPP_

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

#include "codecal/kernels.hpp"

#include <algorithm>
#include <string>

#include "codecal/error.hpp"

namespace codecal::kernels {
namespace {

void CheckSizes(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("scores and labels differ in length");
  }
  // Checked up front: nothing may throw inside the parallel region.
  for (double p : scores) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DataError("confidence " + std::to_string(p) + " outside [0, 1]");
    }
  }
}

void CheckRows(std::span<const double> scores, const GroupSet& groups) {
  if (groups.num_rows() != scores.size()) {
    throw DataError("group membership has " +
                    std::to_string(groups.num_rows()) + " rows for " +
                    std::to_string(scores.size()) + " scores");
  }
}

CellStats EmptyCells(const GroupSet& groups, const BinGrid& grid,
                     std::size_t cells_per_group) {
  CellStats s;
  s.num_groups = groups.num_groups();
  s.m_bins = grid.size();
  s.count.assign(s.num_groups * cells_per_group, 0);
  s.residual_sum.assign(s.num_groups * cells_per_group, 0.0);
  return s;
}

void AccumulateBins(std::span<const double> scores, std::span<const int> labels,
                    const BinGrid& grid, std::size_t begin, std::size_t end,
                    BinStats& out) {
  for (std::size_t i = begin; i < end; ++i) {
    const int b = grid.AssignBin(scores[i]) - 1;
    ++out.count[b];
    out.score_sum[b] += scores[i];
    out.label_sum[b] += labels[i];
  }
}

void AccumulateCells(std::span<const double> scores,
                     std::span<const int> labels, const GroupSet& groups,
                     const BinGrid& grid, std::size_t begin, std::size_t end,
                     CellStats& out) {
  const std::size_t m_bins = grid.size();
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t b = grid.AssignBin(scores[i]) - 1;
    const double r = labels[i] - scores[i];
    for (std::size_t g = 0; g < groups.num_groups(); ++g) {
      if (!groups.Contains(i, g)) continue;
      ++out.count[g * m_bins + b];
      out.residual_sum[g * m_bins + b] += r;
    }
  }
}

void AccumulateOneSided(std::span<const double> scores,
                        std::span<const int> labels, const GroupSet& groups,
                        const BinGrid& grid, std::size_t begin,
                        std::size_t end, CellStats& out) {
  const std::size_t m_bins = grid.size();
  for (std::size_t i = begin; i < end; ++i) {
    const double p = scores[i];
    const double r = labels[i] - p;
    for (std::size_t g = 0; g < groups.num_groups(); ++g) {
      if (!groups.Contains(i, g)) continue;
      for (std::size_t m = 1; m <= m_bins; ++m) {
        const std::size_t base = (g * m_bins + (m - 1)) * 2;
        if (InOneSidedBin(p, grid, static_cast<int>(m), Side::kAtMost)) {
          ++out.count[base];
          out.residual_sum[base] += r;
        }
        if (InOneSidedBin(p, grid, static_cast<int>(m), Side::kAtLeast)) {
          ++out.count[base + 1];
          out.residual_sum[base + 1] += r;
        }
      }
    }
  }
}

template <typename Stats>
void Merge(const Stats& from, Stats& into);

template <>
void Merge(const BinStats& from, BinStats& into) {
  for (std::size_t b = 0; b < into.count.size(); ++b) {
    into.count[b] += from.count[b];
    into.score_sum[b] += from.score_sum[b];
    into.label_sum[b] += from.label_sum[b];
  }
}

template <>
void Merge(const CellStats& from, CellStats& into) {
  for (std::size_t c = 0; c < into.count.size(); ++c) {
    into.count[c] += from.count[c];
    into.residual_sum[c] += from.residual_sum[c];
  }
}

// Accumulates each fixed-size block in parallel, then merges in block order.
template <typename Stats, typename Accumulate>
Stats BlockReduce(std::size_t n, const Stats& zero, Accumulate&& accumulate) {
  const std::size_t num_blocks = (n + kBlockSize - 1) / kBlockSize;
  if (num_blocks <= 1) {
    Stats out = zero;
    accumulate(0, n, out);
    return out;
  }
  std::vector<Stats> partial(num_blocks, zero);
  ParallelFor(num_blocks, [&](std::size_t blk) {
    const std::size_t begin = blk * kBlockSize;
    accumulate(begin, std::min(n, begin + kBlockSize), partial[blk]);
  });
  Stats out = zero;
  for (const Stats& p : partial) Merge(p, out);
  return out;
}

}  // namespace

BinStats ComputeBinStats(std::span<const double> scores,
                         std::span<const int> labels, const BinGrid& grid) {
  CheckSizes(scores, labels);
  return BlockReduce(scores.size(), BinStats(grid.size()),
                     [&](std::size_t b, std::size_t e, BinStats& out) {
                       AccumulateBins(scores, labels, grid, b, e, out);
                     });
}

CellStats ComputeCellStats(std::span<const double> scores,
                           std::span<const int> labels, const GroupSet& groups,
                           const BinGrid& grid) {
  CheckSizes(scores, labels);
  CheckRows(scores, groups);
  return BlockReduce(scores.size(), EmptyCells(groups, grid, grid.size()),
                     [&](std::size_t b, std::size_t e, CellStats& out) {
                       AccumulateCells(scores, labels, groups, grid, b, e, out);
                     });
}

CellStats ComputeOneSidedStats(std::span<const double> scores,
                               std::span<const int> labels,
                               const GroupSet& groups, const BinGrid& grid) {
  CheckSizes(scores, labels);
  CheckRows(scores, groups);
  return BlockReduce(
      scores.size(), EmptyCells(groups, grid, 2 * grid.size()),
      [&](std::size_t b, std::size_t e, CellStats& out) {
        AccumulateOneSided(scores, labels, groups, grid, b, e, out);
      });
}

namespace reference {

BinStats ComputeBinStats(std::span<const double> scores,
                         std::span<const int> labels, const BinGrid& grid) {
  CheckSizes(scores, labels);
  BinStats out(grid.size());
  AccumulateBins(scores, labels, grid, 0, scores.size(), out);
  return out;
}

CellStats ComputeCellStats(std::span<const double> scores,
                           std::span<const int> labels, const GroupSet& groups,
                           const BinGrid& grid) {
  CheckSizes(scores, labels);
  CheckRows(scores, groups);
  CellStats out = EmptyCells(groups, grid, grid.size());
  AccumulateCells(scores, labels, groups, grid, 0, scores.size(), out);
  return out;
}

CellStats ComputeOneSidedStats(std::span<const double> scores,
                               std::span<const int> labels,
                               const GroupSet& groups, const BinGrid& grid) {
  CheckSizes(scores, labels);
  CheckRows(scores, groups);
  CellStats out = EmptyCells(groups, grid, 2 * grid.size());
  AccumulateOneSided(scores, labels, groups, grid, 0, scores.size(), out);
  return out;
}

}  // namespace reference
}  // namespace codecal::kernels

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

#include <random>

#include <gtest/gtest.h>
#include <omp.h>

#include "codecal/error.hpp"

namespace codecal::kernels {
namespace {

struct Data {
  std::vector<double> scores;
  std::vector<int> labels;
  GroupSet groups;
};

Data Random(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Data d;
  std::vector<std::uint8_t> m;
  std::vector<std::string> names;
  for (std::size_t g = 0; g < k; ++g) names.push_back("g" + std::to_string(g));
  for (std::size_t i = 0; i < n; ++i) {
    d.scores.push_back(i % 5 == 0 ? static_cast<double>(rng() % 21) / 20 : u(rng));
    d.labels.push_back(u(rng) < 0.5 ? 1 : 0);
    for (std::size_t g = 0; g < k; ++g) m.push_back(u(rng) < 0.3 ? 1 : 0);
  }
  d.groups = GroupSet(names, n, m);
  return d;
}

void ExpectClose(const std::vector<double>& a, const std::vector<double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9) << i;
}

// The blocked reduction gives bit-identical sums for any thread count and
// agrees with the plain serial loop up to summation order.
TEST(KernelsTest, ParallelMatchesSerialAcrossThreadCounts) {
  const BinGrid grid(20);
  for (std::size_t n : {0ul, 1ul, 4095ul, 4096ul, 4097ul, 30000ul}) {
    const Data d = Random(n, 4, n + 1);
    omp_set_num_threads(1);
    const BinStats bins = ComputeBinStats(d.scores, d.labels, grid);
    const CellStats cells = ComputeCellStats(d.scores, d.labels, d.groups, grid);
    const CellStats sides = ComputeOneSidedStats(d.scores, d.labels, d.groups, grid);
    for (int threads : {2, 3, 8}) {
      omp_set_num_threads(threads);
      EXPECT_EQ(ComputeBinStats(d.scores, d.labels, grid), bins) << n << " " << threads;
      EXPECT_EQ(ComputeCellStats(d.scores, d.labels, d.groups, grid), cells);
      EXPECT_EQ(ComputeOneSidedStats(d.scores, d.labels, d.groups, grid), sides);
    }
    const BinStats ref_bins = reference::ComputeBinStats(d.scores, d.labels, grid);
    const CellStats ref_cells = reference::ComputeCellStats(d.scores, d.labels, d.groups, grid);
    const CellStats ref_sides =
        reference::ComputeOneSidedStats(d.scores, d.labels, d.groups, grid);
    EXPECT_EQ(bins.count, ref_bins.count);
    ExpectClose(bins.score_sum, ref_bins.score_sum);
    ExpectClose(bins.label_sum, ref_bins.label_sum);
    EXPECT_EQ(cells.count, ref_cells.count);
    ExpectClose(cells.residual_sum, ref_cells.residual_sum);
    EXPECT_EQ(sides.count, ref_sides.count);
    ExpectClose(sides.residual_sum, ref_sides.residual_sum);
  }
  omp_set_num_threads(omp_get_num_procs());
}

TEST(KernelsTest, CountsPartition) {
  const Data d = Random(1000, 2, 3);
  const BinStats bins = ComputeBinStats(d.scores, d.labels, BinGrid(10));
  std::size_t total = 0;
  for (std::size_t c : bins.count) total += c;
  EXPECT_EQ(total, 1000u);
}

TEST(KernelsTest, OutOfRangeScoreThrowsBeforeParallelWork) {
  Data d = Random(10000, 2, 4);
  d.scores[7777] = 1.5;
  EXPECT_THROW(ComputeBinStats(d.scores, d.labels, BinGrid(20)), DataError);
  EXPECT_THROW(ComputeCellStats(d.scores, d.labels, d.groups, BinGrid(20)), DataError);
}

TEST(KernelsTest, SizeMismatchThrows) {
  const Data d = Random(10, 1, 5);
  const std::vector<int> short_labels(9, 0);
  EXPECT_THROW(ComputeBinStats(d.scores, short_labels, BinGrid(20)), DataError);
}

}  // namespace
}  // namespace codecal::kernels

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "evfusion/error.hpp"
#include "evfusion/metrics.hpp"
#include "support/oracles.hpp"

using namespace evfusion;

namespace {

Mask random_mask(std::size_t n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution on(density);
  Mask m(n);
  for (auto& v : m) v = on(rng) ? 1 : 0;
  if (std::find(m.begin(), m.end(), 1) == m.end()) m[rng() % n] = 1;
  return m;
}

}  // namespace

TEST(Dice, Examples) {
  const Mask a{1, 1, 0, 0};
  const Mask b{0, 0, 1, 1};
  EXPECT_EQ(dice_score(a, a), 1.0);
  EXPECT_EQ(dice_score(a, b), 0.0);
  const Mask empty(4, 0);
  EXPECT_EQ(dice_score(empty, empty), 1.0);
  const Mask p{1, 1, 1, 1, 0, 0, 0};
  const Mask g{1, 1, 1, 0, 1, 1, 1};
  EXPECT_NEAR(dice_score(p, g), 0.6, 1e-12);
  EXPECT_THROW(dice_score(a, Mask{1}), InvalidArgument);
}

TEST(Dice, Symmetric) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_mask(64, 0.3, rng);
    const auto b = random_mask(64, 0.3, rng);
    EXPECT_EQ(dice_score(a, b), dice_score(b, a));
  }
}

TEST(Hausdorff, SingleVoxelsThreeApart) {
  const GridGeometry grid{{5, 1, 1}, {1.0, 1.0, 1.0}};
  const Mask a{1, 0, 0, 0, 0};
  const Mask b{0, 0, 0, 1, 0};
  EXPECT_EQ(hausdorff(a, b, grid), 3.0);
  EXPECT_EQ(hausdorff(a, a, grid), 0.0);
}

TEST(Hausdorff, EmptyMaskThrows) {
  const GridGeometry grid{{2, 1, 1}, {1.0, 1.0, 1.0}};
  const Mask a{1, 0};
  const Mask none{0, 0};
  EXPECT_THROW(hausdorff(a, none, grid), EmptyMask);
  EXPECT_THROW(hausdorff(none, a, grid), EmptyMask);
  EXPECT_THROW(hausdorff(a, Mask{1, 0, 0}, grid), InvalidArgument);
}

TEST(HausdorffProperty, MatchesPairwiseOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> spacing(0.3, 2.5);
  for (int t = 0; t < 60; ++t) {
    const GridGeometry grid{{8, 8, 8}, {spacing(rng), spacing(rng), spacing(rng)}};
    const double density = t % 3 == 0 ? 0.02 : (t % 3 == 1 ? 0.2 : 0.6);
    const auto a = random_mask(grid.voxels(), density, rng);
    const auto b = random_mask(grid.voxels(), 0.25, rng);
    const double want = oracle::hausdorff(a, b, grid);
    ASSERT_NEAR(hausdorff(a, b, grid), want, 1e-12);
    ASSERT_EQ(hausdorff(a, b, grid), hausdorff(b, a, grid));
    ASSERT_EQ(hausdorff(a, a, grid), 0.0);
  }
}

TEST(HausdorffProperty, PercentileNeverExceedsExact) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const GridGeometry grid{{8, 8, 8}, {1.0, 1.0, 2.0}};
    const auto a = random_mask(grid.voxels(), 0.1, rng);
    const auto b = random_mask(grid.voxels(), 0.1, rng);
    EXPECT_LE(hausdorff(a, b, grid, HausdorffMode::percentile95), hausdorff(a, b, grid) + 1e-12);
  }
}

TEST(Ece, Examples) {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const std::vector<std::uint8_t> right{1, 1, 1}, wrong{0, 0, 0};
  EXPECT_EQ(ece(ones, right), 0.0);
  EXPECT_EQ(ece(ones, wrong), 1.0);
  const std::vector<double> conf{0.95, 0.95, 0.55, 0.55};
  const std::vector<std::uint8_t> correct{1, 1, 1, 0};
  EXPECT_NEAR(ece(conf, correct, 10), 0.05, 1e-12);
  EXPECT_THROW(ece(conf, correct, 0), InvalidArgument);
}

TEST(Ece, FromScoreMatrix) {
  Matrix s(4, 2, std::vector<double>{0.95, 0.05, 0.05, 0.95, 0.55, 0.45, 0.45, 0.55});
  const std::vector<int> labels{0, 1, 0, 0};
  EXPECT_NEAR(ece(s, labels), 0.05, 1e-12);
}

TEST(EceProperty, BoundedAndPermutationInvariant) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> conf(50);
    std::vector<std::uint8_t> correct(50);
    for (std::size_t i = 0; i < 50; ++i) {
      conf[i] = unit(rng);
      correct[i] = unit(rng) < 0.5;
    }
    const double e = ece(conf, correct, 1 + t % 15);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
    std::vector<std::size_t> order(50);
    for (std::size_t i = 0; i < 50; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> c2;
    std::vector<std::uint8_t> k2;
    for (auto i : order) {
      c2.push_back(conf[i]);
      k2.push_back(correct[i]);
    }
    EXPECT_NEAR(ece(c2, k2, 1 + t % 15), e, 1e-12);
  }
}

TEST(Hausdorff, FullGridMask) {
  const GridGeometry grid{{4, 3, 2}, {1.0, 2.0, 1.0}};
  const Mask full(grid.voxels(), 1);
  Mask corner(grid.voxels(), 0);
  corner[0] = 1;
  const double want = oracle::hausdorff(full, corner, grid);
  EXPECT_NEAR(hausdorff(full, corner, grid), want, 1e-12);
  EXPECT_GT(hausdorff(full, corner, grid, HausdorffMode::percentile95), 0.0);
  EXPECT_EQ(hausdorff(full, full, grid, HausdorffMode::percentile95), 0.0);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evfusion/error.hpp"
#include "evfusion/mmef.hpp"

using namespace evfusion;

namespace {

const dst::Frame kAB({"a", "b"});

double raw_for(double beta) { return std::log(beta / (1.0 - beta)); }

ReliabilityMatrix random_reliability(const dst::Frame& frame, std::size_t sources, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 2.0);
  ReliabilityMatrix r(frame, sources);
  for (double& b : r.beta_raw) b = normal(rng);
  return r;
}

std::vector<dst::ContourFunction> random_contours(const dst::Frame& frame, std::size_t sources,
                                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  std::vector<dst::ContourFunction> out;
  for (std::size_t h = 0; h < sources; ++h) {
    std::vector<double> v(frame.size());
    for (double& x : v) x = unit(rng);
    out.emplace_back(frame, v);
  }
  return out;
}

// Direct product of discounted contours, normalized.
std::vector<double> direct_fusion(const std::vector<dst::ContourFunction>& pl, const ReliabilityMatrix& r) {
  std::vector<double> f(r.classes(), 1.0);
  for (std::size_t h = 0; h < pl.size(); ++h) {
    for (std::size_t k = 0; k < f.size(); ++k) f[k] *= 1.0 - r.beta(h, k) + r.beta(h, k) * pl[h][k];
  }
  double total = 0.0;
  for (double v : f) total += v;
  for (double& v : f) v /= total;
  return f;
}

}  // namespace

TEST(Reliability, DefaultsToHalf) {
  const ReliabilityMatrix r(dst::Frame::indexed(3), 2);
  for (std::size_t h = 0; h < 2; ++h) {
    for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(r.beta(h, k), 0.5);
  }
}

TEST(Fusion, WorkedExample) {
  ReliabilityMatrix r(kAB, 2);
  std::fill(r.beta_raw.begin(), r.beta_raw.end(), 1000.0);
  const std::vector<dst::ContourFunction> pl{{kAB, {0.8, 0.3}}, {kAB, {0.4, 0.9}}};
  const auto s = fuse_voxel(pl, r);
  EXPECT_NEAR(s.values[0], 0.32 / 0.59, 1e-12);
  EXPECT_NEAR(s.values[1], 0.27 / 0.59, 1e-12);
  EXPECT_NEAR(s.values[0], 0.5424, 1e-4);
  EXPECT_NEAR(s.values[1], 0.4576, 1e-4);
  EXPECT_EQ(predicted_label(s), 0u);
}

TEST(Fusion, ZeroReliabilityGivesUniformScores) {
  std::mt19937_64 rng(1);
  const auto frame = dst::Frame::indexed(4);
  ReliabilityMatrix r(frame, 3);
  std::fill(r.beta_raw.begin(), r.beta_raw.end(), -1000.0);
  const auto s = fuse_voxel(random_contours(frame, 3, rng), r);
  for (double v : s.values) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(Fusion, SingleSourceDiscounting) {
  ReliabilityMatrix r(kAB, 1);
  r.beta_raw = {raw_for(0.5), raw_for(1.0 - 1e-15)};
  const std::vector<dst::ContourFunction> pl{{kAB, {0.8, 0.3}}};
  const auto s = fuse_voxel(pl, r);
  EXPECT_NEAR(s.values[0], 0.9 / 1.2, 1e-12);
  EXPECT_NEAR(s.values[1], 0.3 / 1.2, 1e-12);
}

TEST(FusionProperty, MatchesDirectProduct) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 300; ++t) {
    const auto frame = dst::Frame::indexed(1 + t % 6);
    const std::size_t sources = 1 + t % 8;
    const auto r = random_reliability(frame, sources, rng);
    const auto pl = random_contours(frame, sources, rng);
    const auto got = fuse_voxel(pl, r);
    const auto want = direct_fusion(pl, r);
    double total = 0.0;
    for (std::size_t k = 0; k < frame.size(); ++k) {
      ASSERT_NEAR(got.values[k], want[k], 1e-12);
      total += got.values[k];
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(FusionProperty, LogSpaceAgreesWithDirectProduct) {
  std::mt19937_64 rng(3);
  const auto frame = dst::Frame::indexed(6);
  for (int t = 0; t < 50; ++t) {
    const std::size_t sources = 8;
    ASSERT_GT(frame.size() * sources, kLogSpaceThreshold);
    const auto r = random_reliability(frame, sources, rng);
    const auto pl = random_contours(frame, sources, rng);
    const auto got = fuse_voxel(pl, r);
    const auto want = direct_fusion(pl, r);
    for (std::size_t k = 0; k < frame.size(); ++k) ASSERT_NEAR(got.values[k], want[k], 1e-12);
  }
}

TEST(FusionProperty, SourceOrderDoesNotMatter) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto frame = dst::Frame::indexed(2 + t % 4);
    const auto r = random_reliability(frame, 3, rng);
    const auto pl = random_contours(frame, 3, rng);
    ReliabilityMatrix swapped(frame, 3);
    const std::size_t k = frame.size();
    const std::vector<std::size_t> order{2, 0, 1};
    std::vector<dst::ContourFunction> pl2;
    for (std::size_t h = 0; h < 3; ++h) {
      pl2.push_back(pl[order[h]]);
      for (std::size_t c = 0; c < k; ++c) swapped.beta_raw[h * k + c] = r.beta_raw[order[h] * k + c];
    }
    const auto a = fuse_voxel(pl, r);
    const auto b = fuse_voxel(pl2, swapped);
    for (std::size_t c = 0; c < k; ++c) ASSERT_NEAR(a.values[c], b.values[c], 1e-14);
  }
}

TEST(FusionProperty, VacuousSourceIsNeutral) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto frame = dst::Frame::indexed(2 + t % 4);
    const auto r = random_reliability(frame, 2, rng);
    auto pl = random_contours(frame, 2, rng);
    auto r3 = random_reliability(frame, 3, rng);
    std::copy(r.beta_raw.begin(), r.beta_raw.end(), r3.beta_raw.begin());
    const auto before = fuse_voxel(pl, r);
    pl.push_back(dst::ContourFunction::ones(frame));
    const auto after = fuse_voxel(pl, r3);
    for (std::size_t k = 0; k < frame.size(); ++k) ASSERT_NEAR(before.values[k], after.values[k], 1e-14);
  }
}

TEST(Fusion, DegenerateProductThrows) {
  ReliabilityMatrix r(kAB, 2);
  std::fill(r.beta_raw.begin(), r.beta_raw.end(), 1000.0);
  const std::vector<dst::ContourFunction> pl{{kAB, {0.0, 1.0}}, {kAB, {1.0, 0.0}}};
  EXPECT_THROW(fuse_voxel(pl, r), DegenerateFusion);

  const auto frame = dst::Frame::indexed(6);
  ReliabilityMatrix big(frame, 8);
  std::fill(big.beta_raw.begin(), big.beta_raw.end(), 1000.0);
  std::vector<dst::ContourFunction> tiny(8, dst::ContourFunction(frame, std::vector<double>(6, 1e-5)));
  EXPECT_THROW(fuse_voxel(tiny, big), DegenerateFusion);
}

TEST(Fusion, RejectsMismatchedShapes) {
  const ReliabilityMatrix r(kAB, 2);
  const std::vector<dst::ContourFunction> one{{kAB, {0.5, 0.5}}};
  EXPECT_THROW(fuse_voxel(one, r), InvalidArgument);
  EXPECT_THROW(FusionEvaluator(r, {2}), InvalidArgument);
}

TEST(PredictedLabel, TiesGoToLowestIndex) {
  const std::vector<double> tie{0.2, 0.4, 0.4};
  EXPECT_EQ(predicted_label(tie), 1u);
  const std::vector<double> flat{0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(predicted_label(flat), 0u);
}

TEST(Fusion, VolumeMatchesPerVoxel) {
  std::mt19937_64 rng(6);
  const auto frame = dst::Frame::indexed(3);
  const auto r = random_reliability(frame, 2, rng);
  std::vector<std::vector<dst::ContourFunction>> per_source(2);
  for (int n = 0; n < 20; ++n) {
    const auto pl = random_contours(frame, 2, rng);
    per_source[0].push_back(pl[0]);
    per_source[1].push_back(pl[1]);
  }
  const auto volume = fuse_volume(per_source, r);
  ASSERT_EQ(volume.size(), 20u);
  for (std::size_t n = 0; n < 20; ++n) {
    const std::vector<dst::ContourFunction> pl{per_source[0][n], per_source[1][n]};
    EXPECT_EQ(volume[n].values, fuse_voxel(pl, r).values);
  }
}

TEST(FusionEvaluator, MatchesFuseVoxelOnActiveSubset) {
  std::mt19937_64 rng(7);
  const auto frame = dst::Frame::indexed(4);
  const auto r = random_reliability(frame, 3, rng);
  const FusionEvaluator eval(r, {0, 2});
  ReliabilityMatrix sub(frame, 2);
  for (std::size_t k = 0; k < 4; ++k) {
    sub.beta_raw[k] = r.beta_raw[k];
    sub.beta_raw[4 + k] = r.beta_raw[8 + k];
  }
  for (int t = 0; t < 50; ++t) {
    const auto pl = random_contours(frame, 2, rng);
    std::vector<double> flat, discounted(8), scores(4);
    for (const auto& c : pl) flat.insert(flat.end(), c.values().begin(), c.values().end());
    eval.forward(flat, discounted, scores);
    const auto want = fuse_voxel(pl, sub);
    for (std::size_t k = 0; k < 4; ++k) ASSERT_NEAR(scores[k], want.values[k], 1e-14);
  }
}

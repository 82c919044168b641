#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evfusion/error.hpp"
#include "evfusion/gradcheck.hpp"
#include "evfusion/loss.hpp"

using namespace evfusion;

namespace {

double dice_loss_oracle(const Matrix& s, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t c = 0; c < s.cols(); ++c) {
    double overlap = 0.0, pred = 0.0, truth = 0.0;
    for (std::size_t n = 0; n < s.rows(); ++n) {
      const double g = labels[n] == static_cast<int>(c) ? 1.0 : 0.0;
      overlap += s(n, c) * g;
      pred += s(n, c);
      truth += g;
    }
    total += 1.0 - 2.0 * overlap / (pred + truth + 1e-6);
  }
  return total / static_cast<double>(s.cols());
}

Matrix random_scores(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  Matrix s(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (double& v : s.row(i)) total += (v = unit(rng));
    for (double& v : s.row(i)) v /= total;
  }
  return s;
}

}  // namespace

TEST(DiceLoss, PerfectPredictionIsNearZero) {
  const std::vector<int> labels{0, 1, 2, 2, 1, 0};
  Matrix s(6, 3);
  for (std::size_t n = 0; n < 6; ++n) s(n, static_cast<std::size_t>(labels[n])) = 1.0;
  EXPECT_NEAR(discounted_dice_loss(s, GroundTruth(3, labels)), 0.0, 1e-6);
}

TEST(DiceLoss, UniformScoresOnBalancedClasses) {
  for (std::size_t k = 2; k <= 5; ++k) {
    std::vector<int> labels;
    for (std::size_t n = 0; n < 10 * k; ++n) labels.push_back(static_cast<int>(n % k));
    const Matrix s(labels.size(), k, 1.0 / static_cast<double>(k));
    EXPECT_NEAR(discounted_dice_loss(s, GroundTruth(k, labels)), 1.0 - 1.0 / static_cast<double>(k), 1e-6);
  }
}

TEST(DiceLoss, MatchesOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 2 + t % 4;
    const std::size_t n = 1 + static_cast<std::size_t>(t) * 37;
    const auto s = random_scores(n, k, rng);
    std::vector<int> labels(n);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(k) - 1);
    for (int& l : labels) l = pick(rng);
    ASSERT_NEAR(discounted_dice_loss(s, GroundTruth(k, labels)), dice_loss_oracle(s, labels), 1e-12);
  }
}

TEST(DiceLoss, RejectsBadInput) {
  EXPECT_THROW(GroundTruth(3, {0, 3}), InvalidArgument);
  EXPECT_THROW(GroundTruth(0, {}), InvalidArgument);
  EXPECT_THROW(discounted_dice_loss(Matrix(2, 3), GroundTruth(3, {0})), InvalidArgument);
}

TEST(FiniteDifference, QuadraticIsExact) {
  const std::vector<double> point{0.3, -1.2, 2.5, 0.0, 7.0};
  std::vector<double> analytic;
  for (double x : point) analytic.push_back(2.0 * x);
  auto f = [](std::span<const double> x) {
    double total = 0.0;
    for (double v : x) total += v * v;
    return total;
  };
  EXPECT_LT(finite_diff_check(f, analytic, point, 1e-5).max_relative_error, 1e-9);
}

TEST(FiniteDifference, DetectsWrongGradient) {
  const std::vector<double> point{1.0, 2.0};
  const std::vector<double> wrong{2.0, 3.0};
  auto f = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
  const auto r = finite_diff_check(f, wrong, point, 1e-5);
  EXPECT_GT(r.max_relative_error, 0.2);
  EXPECT_EQ(r.worst_index, 1u);
}

TEST(Gradient, EvidentialSweepBelowTolerance) {
  const auto cases = gradcheck_sweep(2024, 50, 1e-5);
  ASSERT_EQ(cases.size(), 50u);
  for (const auto& c : cases) {
    EXPECT_LT(c.result.max_relative_error, 1e-4)
        << "K=" << c.shape.classes << " H=" << c.shape.sources << " I=" << c.shape.prototypes
        << " d=" << c.shape.dim << " seed=" << c.seed;
  }
}

TEST(Gradient, SoftmaxHeadBelowTolerance) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GradCheckShape shape;
    shape.softmax = true;
    shape.classes = 2 + seed % 3;
    shape.sources = 1 + seed % 3;
    const auto inst = random_gradcheck_instance(shape, seed);
    EXPECT_LT(finite_diff_check(inst.params, inst.batch, inst.gt, 1e-5).max_relative_error, 1e-4);
  }
}

TEST(Gradient, CoarseStepIsLessAccurate) {
  GradCheckShape shape;
  const auto inst = random_gradcheck_instance(shape, 7);
  const double fine = finite_diff_check(inst.params, inst.batch, inst.gt, 1e-5).max_relative_error;
  const double coarse = finite_diff_check(inst.params, inst.batch, inst.gt, 1e-1).max_relative_error;
  EXPECT_GT(coarse, fine);
}

TEST(Gradient, ReliabilityGradientVanishesForVacuousSources) {
  GradCheckShape shape;
  auto inst = random_gradcheck_instance(shape, 3);
  for (auto& x : inst.batch.sources) {
    for (double& v : x.data()) v += 1e4;
  }
  const auto lg = backward(inst.params, inst.batch, inst.gt);
  for (double g : lg.gradient.reliability->beta_raw) EXPECT_EQ(g, 0.0);
}

TEST(Gradient, GammaGradientVanishesAtZeroEta) {
  auto inst = random_gradcheck_instance(GradCheckShape{}, 4);
  inst.params.sources[0].gamma_raw[1] = 0.0;
  inst.params.sources[0].alpha_raw[1] = -800.0;
  const auto lg = backward(inst.params, inst.batch, inst.gt);
  EXPECT_EQ(lg.gradient.sources[0].gamma_raw[1], 0.0);
}

TEST(Gradient, IndependentOfThreadCount) {
  GradCheckShape shape;
  shape.voxels = 3000;
  shape.sources = 3;
  shape.prototypes = 5;
  const auto inst = random_gradcheck_instance(shape, 11);
  const auto one = backward(inst.params, inst.batch, inst.gt, 1);
  for (std::size_t threads : {2u, 3u, 8u}) {
    const auto many = backward(inst.params, inst.batch, inst.gt, threads);
    EXPECT_EQ(one.loss, many.loss);
    EXPECT_EQ(one.gradient.flatten(), many.gradient.flatten());
  }
}

TEST(Gradient, LossMatchesForwardPass) {
  const auto inst = random_gradcheck_instance(GradCheckShape{}, 5);
  const auto lg = backward(inst.params, inst.batch, inst.gt);
  EXPECT_EQ(lg.loss, loss_value(inst.params, inst.batch, inst.gt));
  EXPECT_NEAR(lg.loss, dice_loss_oracle(predict_scores(inst.params, inst.batch), inst.gt.labels), 1e-12);
}

TEST(Forward, FastPathMatchesReference) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GradCheckShape shape;
    shape.voxels = 100;
    shape.classes = 2 + seed % 4;
    shape.sources = 1 + seed % 4;
    auto inst = random_gradcheck_instance(shape, seed);
    if (shape.sources > 1) inst.params.active = {0, shape.sources - 1};
    const auto fast = predict_scores(inst.params, inst.batch, 2);
    const auto ref = predict_scores_reference(inst.params, inst.batch);
    for (std::size_t i = 0; i < fast.size(); ++i) ASSERT_NEAR(fast.data()[i], ref.data()[i], 1e-12);
  }
}

TEST(Params, FlattenAssignRoundTrip) {
  auto inst = random_gradcheck_instance(GradCheckShape{}, 9);
  const auto flat = inst.params.flatten();
  EXPECT_EQ(flat.size(), inst.params.parameter_count());
  auto copy = inst.params.zeros_like();
  for (double v : copy.flatten()) EXPECT_EQ(v, 0.0);
  copy.assign(flat);
  EXPECT_EQ(copy.flatten(), flat);
  EXPECT_THROW(copy.assign(std::vector<double>(3)), InvalidArgument);
}

#include <gtest/gtest.h>

#include <random>

#include "evfusion/dst.hpp"
#include "evfusion/dst_json.hpp"
#include "evfusion/error.hpp"
#include "support/oracles.hpp"

using namespace evfusion;
using namespace evfusion::dst;

namespace {

const Frame kAB({"a", "b"});

MassFunction mass_ab(double a, double b, double omega) { return MassFunction(kAB, {0.0, a, b, omega}); }

}  // namespace

TEST(Frame, RejectsDuplicatesAndOversize) {
  EXPECT_THROW(Frame({"a", "a"}), InvalidArgument);
  EXPECT_THROW(Frame(std::vector<std::string>{}), InvalidArgument);
  EXPECT_THROW(Frame::indexed(17), InvalidArgument);
  EXPECT_NO_THROW(Frame::indexed(16));
}

TEST(Frame, SubsetNamesRoundTrip) {
  const Frame f({"tumor", "edema", "bg"});
  for (Subset a = 1; a <= f.omega(); ++a) EXPECT_EQ(f.parse_subset(f.subset_name(a)), a);
  EXPECT_EQ(f.subset_name(f.omega()), "bg|edema|tumor");
  EXPECT_EQ(f.parse_subset("tumor|bg"), f.parse_subset("bg|tumor"));
  EXPECT_THROW(f.parse_subset("necrosis"), InvalidArgument);
}

TEST(MassFunction, ValidatesInvariants) {
  EXPECT_THROW(MassFunction(kAB, {0.0, 0.5, 0.5}), InvalidArgument);
  EXPECT_THROW(MassFunction(kAB, {0.1, 0.4, 0.5, 0.0}), InvalidArgument);
  EXPECT_THROW(MassFunction(kAB, {0.0, -0.1, 0.6, 0.5}), InvalidArgument);
  EXPECT_THROW(MassFunction(kAB, {0.0, 0.5, 0.5, 0.1}), InvalidArgument);
  EXPECT_NO_THROW(MassFunction(kAB, {0.0, 0.5, 0.5, 1e-13}));
}

TEST(Vacuous, Definition) {
  const auto v = vacuous(kAB);
  EXPECT_EQ(v[3], 1.0);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_EQ(v[2], 0.0);
  const auto single = vacuous(Frame({"a"}));
  EXPECT_EQ(single[1], 1.0);
}

TEST(Belief, Examples) {
  EXPECT_EQ(belief(vacuous(kAB), 1), 0.0);
  EXPECT_EQ(belief(mass_ab(1.0, 0.0, 0.0), 1), 1.0);
  const auto m = mass_ab(0.6, 0.0, 0.4);
  EXPECT_DOUBLE_EQ(belief(m, 1), 0.6);
  EXPECT_DOUBLE_EQ(plausibility(m, 1), 1.0);
  EXPECT_THROW(belief(m, 4), InvalidArgument);
  EXPECT_THROW(plausibility(m, 7), InvalidArgument);
}

TEST(Plausibility, Examples) {
  for (Subset a = 1; a <= 3; ++a) EXPECT_EQ(plausibility(vacuous(kAB), a), 1.0);
  EXPECT_EQ(plausibility(mass_ab(1.0, 0.0, 0.0), 2), 0.0);
  EXPECT_DOUBLE_EQ(plausibility(mass_ab(0.6, 0.0, 0.4), 2), 0.4);
}

TEST(Contour, Examples) {
  const auto v = contour(vacuous(kAB));
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 1.0);
  const auto certain = contour(mass_ab(1.0, 0.0, 0.0));
  EXPECT_EQ(certain[0], 1.0);
  EXPECT_EQ(certain[1], 0.0);
  const auto m = contour(mass_ab(0.6, 0.0, 0.4));
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_DOUBLE_EQ(m[1], 0.4);
}

TEST(Dempster, WorkedExample) {
  const auto m1 = mass_ab(0.6, 0.0, 0.4);
  const auto m2 = mass_ab(0.0, 0.5, 0.5);
  EXPECT_NEAR(conflict(m1, m2), 0.3, 1e-15);
  const auto m = dempster_combine(m1, m2);
  EXPECT_NEAR(m[1], 0.30 / 0.7, 1e-15);
  EXPECT_NEAR(m[2], 0.20 / 0.7, 1e-15);
  EXPECT_NEAR(m[3], 0.20 / 0.7, 1e-15);
}

TEST(Dempster, TotalConflict) {
  const auto m1 = mass_ab(1.0, 0.0, 0.0);
  const auto m2 = mass_ab(0.0, 1.0, 0.0);
  EXPECT_EQ(conflict(m1, m2), 1.0);
  EXPECT_THROW(dempster_combine(m1, m2), TotalConflict);
}

TEST(Dempster, VacuousIsNeutral) {
  std::mt19937_64 rng(11);
  const auto frame = Frame::indexed(4);
  for (int i = 0; i < 50; ++i) {
    const auto m = oracle::random_mass(frame, rng);
    EXPECT_EQ(conflict(m, vacuous(frame)), 0.0);
    const auto c = dempster_combine(m, vacuous(frame));
    for (Subset a = 0; a < frame.subset_count(); ++a) EXPECT_NEAR(c[a], m[a], 1e-12);
  }
}

TEST(Dempster, RejectsDifferentFrames) {
  EXPECT_THROW(dempster_combine(vacuous(kAB), vacuous(Frame({"x", "y"}))), InvalidArgument);
}

TEST(DempsterProperty, MatchesEnumerationOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto frame = Frame::indexed(1 + i % 5);
    const auto m1 = oracle::random_mass(frame, rng);
    const auto m2 = oracle::random_mass(frame, rng);
    const double kappa = oracle::conflict(oracle::to_sets(m1), oracle::to_sets(m2));
    EXPECT_NEAR(conflict(m1, m2), kappa, 1e-12);
    if (1.0 - kappa < 1e-9) continue;
    const auto expected = oracle::to_mass(oracle::dempster(oracle::to_sets(m1), oracle::to_sets(m2)), frame);
    const auto got = dempster_combine(m1, m2);
    for (Subset a = 0; a < frame.subset_count(); ++a) ASSERT_NEAR(got[a], expected[a], 1e-10) << "instance " << i;
  }
}

TEST(DempsterProperty, CommutativeAndAssociative) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto frame = Frame::indexed(1 + i % 5);
    const auto a = oracle::random_mass(frame, rng);
    const auto b = oracle::random_mass(frame, rng);
    const auto c = oracle::random_mass(frame, rng);
    try {
      const auto ab = dempster_combine(a, b);
      const auto ba = dempster_combine(b, a);
      const auto left = dempster_combine(ab, c);
      const auto right = dempster_combine(a, dempster_combine(b, c));
      const auto other = dempster_combine(dempster_combine(c, a), b);
      for (Subset s = 0; s < frame.subset_count(); ++s) {
        ASSERT_NEAR(ab[s], ba[s], 1e-10);
        ASSERT_NEAR(left[s], right[s], 1e-10);
        ASSERT_NEAR(left[s], other[s], 1e-10);
      }
    } catch (const TotalConflict&) {
    }
  }
}

TEST(DempsterProperty, BeliefPlausibilityDuality) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto frame = Frame::indexed(1 + i % 5);
    const auto m = oracle::random_mass(frame, rng);
    const auto sets = oracle::to_sets(m);
    for (Subset a = 0; a < frame.subset_count(); ++a) {
      ASSERT_NEAR(plausibility(m, a), 1.0 - belief(m, frame.omega() & ~a), 1e-12);
      ASSERT_LE(belief(m, a), plausibility(m, a) + 1e-15);
      ASSERT_NEAR(belief(m, a), oracle::belief(sets, oracle::to_set(a, frame.size())), 1e-12);
      ASSERT_NEAR(plausibility(m, a), oracle::plausibility(sets, oracle::to_set(a, frame.size())), 1e-12);
    }
  }
}

TEST(DempsterProperty, ContourProductIdentity) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const auto frame = Frame::indexed(1 + i % 5);
    const auto m1 = oracle::random_mass(frame, rng);
    const auto m2 = oracle::random_mass(frame, rng);
    const double kappa = conflict(m1, m2);
    if (1.0 - kappa < 1e-9) continue;
    const auto combined = contour(dempster_combine(m1, m2));
    const std::vector<ContourFunction> pair{contour(m1), contour(m2)};
    const auto product = fused_contour(pair);
    for (std::size_t k = 0; k < frame.size(); ++k) ASSERT_NEAR(product[k] / (1.0 - kappa), combined[k], 1e-10);
  }
}

TEST(CombineSimple, SingleInputUnchanged) {
  const auto frame = Frame::indexed(3);
  const SimpleClassMass m(frame, {0.2, 0.3, 0.1}, 0.4);
  const auto c = combine_simple(std::vector{m});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(c.singleton(k), m.singleton(k), 1e-15);
  EXPECT_NEAR(c.omega(), 0.4, 1e-15);
}

TEST(CombineSimple, VacuousInputIsNeutral) {
  std::mt19937_64 rng(5);
  const auto frame = Frame::indexed(4);
  const auto a = oracle::random_simple(frame, rng);
  const auto b = oracle::random_simple(frame, rng);
  const auto without = combine_simple(std::vector{a, b});
  const auto with = combine_simple(std::vector{a, SimpleClassMass::vacuous(frame), b});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(with.singleton(k), without.singleton(k), 1e-15);
  EXPECT_NEAR(with.omega(), without.omega(), 1e-15);
}

TEST(CombineSimple, TotalConflict) {
  const SimpleClassMass a(kAB, {1.0, 0.0}, 0.0);
  const SimpleClassMass b(kAB, {0.0, 1.0}, 0.0);
  EXPECT_THROW(combine_simple(std::vector{a, b}), TotalConflict);
  EXPECT_THROW(combine_simple(std::vector<SimpleClassMass>{}), InvalidArgument);
}

TEST(CombineSimpleProperty, MatchesIteratedDempster) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const auto frame = Frame::indexed(1 + i % 5);
    const std::size_t count = 1 + static_cast<std::size_t>(i % 6);
    std::vector<SimpleClassMass> masses;
    for (std::size_t j = 0; j < count; ++j) masses.push_back(oracle::random_simple(frame, rng));
    auto expected = oracle::to_sets(to_mass_function(masses.front()));
    for (std::size_t j = 1; j < count; ++j) expected = oracle::dempster(expected, oracle::to_sets(to_mass_function(masses[j])));
    const auto got = to_mass_function(combine_simple(masses));
    const auto want = oracle::to_mass(expected, frame);
    for (Subset a = 0; a < frame.subset_count(); ++a) ASSERT_NEAR(got[a], want[a], 1e-10) << "instance " << i;
  }
}

TEST(Discount, Examples) {
  const auto m = mass_ab(0.6, 0.0, 0.4);
  const auto half = discount(m, 0.5);
  EXPECT_NEAR(half[1], 0.3, 1e-15);
  EXPECT_NEAR(half[3], 0.7, 1e-15);
  EXPECT_THROW(discount(m, 1.5), InvalidArgument);
  EXPECT_THROW(discount(m, -0.1), InvalidArgument);
}

TEST(Discount, Limits) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto frame = Frame::indexed(1 + i % 5);
    const auto m = oracle::random_mass(frame, rng);
    const auto keep = discount(m, 1.0);
    const auto drop = discount(m, 0.0);
    for (Subset a = 0; a < frame.subset_count(); ++a) {
      EXPECT_NEAR(keep[a], m[a], 1e-12);
      EXPECT_NEAR(drop[a], a == frame.omega() ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(ContextualDiscount, Examples) {
  const ContourFunction pl(kAB, {0.8, 0.3});
  const std::vector<double> beta{0.5, 1.0};
  const auto out = contextual_discount_contour(pl, beta);
  EXPECT_NEAR(out[0], 0.9, 1e-15);
  EXPECT_NEAR(out[1], 0.3, 1e-15);
  const std::vector<double> ones{1.0, 1.0}, zeros{0.0, 0.0};
  EXPECT_EQ(contextual_discount_contour(pl, ones)[0], 0.8);
  EXPECT_EQ(contextual_discount_contour(pl, zeros)[1], 1.0);
  const std::vector<double> bad{0.5, 1.2};
  EXPECT_THROW(contextual_discount_contour(pl, bad), InvalidArgument);
}

TEST(ContextualDiscountProperty, MonotoneInBeta) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const auto frame = Frame::indexed(1 + i % 5);
    std::vector<double> values(frame.size()), hi(frame.size()), lo(frame.size());
    for (std::size_t k = 0; k < frame.size(); ++k) {
      values[k] = unit(rng);
      hi[k] = unit(rng);
      lo[k] = hi[k] * unit(rng);
    }
    const ContourFunction pl(frame, values);
    const auto strong = contextual_discount_contour(pl, hi);
    const auto weak = contextual_discount_contour(pl, lo);
    for (std::size_t k = 0; k < frame.size(); ++k) {
      ASSERT_GE(weak[k], strong[k]);
      ASSERT_GE(strong[k], pl[k] - 1e-15);
      ASSERT_LE(weak[k], 1.0);
    }
  }
}

TEST(FusedContour, Examples) {
  const ContourFunction a(kAB, {0.8, 0.3});
  const ContourFunction b(kAB, {0.4, 0.9});
  const auto single = fused_contour(std::vector{a});
  EXPECT_EQ(single[0], 0.8);
  EXPECT_EQ(single[1], 0.3);
  const auto with_ones = fused_contour(std::vector{a, ContourFunction::ones(kAB), b});
  const auto without = fused_contour(std::vector{a, b});
  EXPECT_EQ(with_ones, without);
  EXPECT_NEAR(without[0], 0.32, 1e-15);
  EXPECT_NEAR(without[1], 0.27, 1e-15);
}

TEST(MassJson, RoundTripAndErrors) {
  const auto j = nlohmann::json::parse(R"({"frame": ["a","b"], "masses": {"a": 0.6, "b|a": 0.4}})");
  const auto m = mass_from_json(j);
  EXPECT_DOUBLE_EQ(m[1], 0.6);
  EXPECT_DOUBLE_EQ(m[3], 0.4);
  const auto out = mass_to_json(m);
  EXPECT_EQ(out["masses"].size(), 2u);
  EXPECT_DOUBLE_EQ(out["masses"]["a|b"].get<double>(), 0.4);
  const auto back = mass_from_json(out);
  for (Subset a = 0; a < 4; ++a) EXPECT_EQ(back[a], m[a]);
  EXPECT_THROW(mass_from_json(nlohmann::json::parse(R"({"frame": ["a"], "masses": {"z": 1.0}})")), InvalidArgument);
  EXPECT_THROW(mass_from_json(nlohmann::json::parse(R"({"frame": ["a","b"], "masses": {"a": 0.5}})")),
               InvalidArgument);
}

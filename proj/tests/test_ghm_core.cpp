#include <gtest/gtest.h>

#include <random>

#include "ghm/cones.hpp"
#include "ghm/hyperbolicity.hpp"
#include "ghm/instances.hpp"

using namespace ghm;

TEST(Baker, RightBranchInOriginalCoordinates) {
  auto s = make_baker(0.5);
  Point p = apply_branch_original(s, 1, {0.25, 0.0}, Direction::forward);
  EXPECT_NEAR(p.x, -0.5, 1e-15);
  EXPECT_NEAR(p.y, 0.5, 1e-15);
}

TEST(Baker, ExpansionConstant) {
  EXPECT_DOUBLE_EQ(make_baker(0.6).k0(), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(make_baker(0.3).k0(), 2.0);
}

TEST(Baker, RejectsLambdaOutsideUnitInterval) {
  EXPECT_THROW(make_baker(1.2), ParameterError);
  EXPECT_THROW(make_baker(0.0), ParameterError);
  EXPECT_THROW(make_baker(1.0), ParameterError);
}

TEST(Baker, InverseOfRightBranch) {
  auto s = make_baker(0.6);
  Point p = apply_branch_original(s, 1, {0.0, 0.4}, Direction::inverse);
  EXPECT_NEAR(p.x, 0.5, 1e-15);
  EXPECT_NEAR(p.y, 0.0, 1e-15);
}

TEST(Affine, AcceptsFigureParameters) { EXPECT_NO_THROW(make_affine_example(0.8, 0.55)); }

TEST(Affine, BranchValues) {
  auto s = make_affine_example(0.8, 0.55);
  Point p = apply_branch(s, 1, {0.75, 1.0}, Direction::forward);
  EXPECT_NEAR(p.x, 0.5, 1e-15);
  EXPECT_NEAR(p.y, 0.675, 1e-15);
  Point q = apply_branch(s, 0, {0.25, 0.5}, Direction::forward);
  EXPECT_NEAR(q.x, 0.5, 1e-15);
  EXPECT_NEAR(q.y, 0.3625, 1e-15);
}

TEST(Affine, RejectsWrongOrdering) {
  EXPECT_THROW(make_affine_example(0.55, 0.8), ParameterError);
  EXPECT_THROW(make_affine_example(0.8, 0.4), ParameterError);
}

TEST(Affine, LeftEdgeOfRightStripMapsToZero) {
  auto s = make_affine_example(0.8, 0.55);
  for (double y : {-0.1, 0.0, 0.3, 1.0, 1.1}) EXPECT_EQ(apply_branch(s, 1, {0.5, y}, Direction::forward).x, 0.0);
}

TEST(ApplyBranch, OutOfDomainNamesStrip) {
  auto s = make_affine_example(0.8, 0.55);
  try {
    apply_branch(s, 1, {2.0, 0.0}, Direction::forward);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.strip(), 1u);
    EXPECT_NE(std::string(e.what()).find("strip 1"), std::string::npos);
  }
  EXPECT_THROW(apply_branch(make_baker(0.6), 0, {2.0, 0.0}, Direction::forward), DomainError);
  EXPECT_THROW(apply_branch(s, 5, {0.1, 0.0}, Direction::forward), DomainError);
}

TEST(Derivatives, BakerDiagonal) {
  auto s = make_baker(0.6);
  for (std::size_t i = 0; i < 2; ++i)
    for (double x : {0.1, 0.3}) {
      Jacobian d = std::get<Jacobian>(branch_derivative(s, i, {x + 0.5 * i, 0.7}, 1));
      EXPECT_DOUBLE_EQ(d.f1x, 2.0);
      EXPECT_DOUBLE_EQ(d.f1y, 0.0);
      EXPECT_DOUBLE_EQ(d.f2x, 0.0);
      EXPECT_DOUBLE_EQ(d.f2y, 0.6);
    }
}

TEST(Derivatives, AffineRightBranch) {
  const double a = 0.8, b = 0.55;
  auto s = make_affine_example(a, b);
  for (double x : {0.5, 0.6, 0.9})
    for (double y : {-0.05, 0.4, 1.05}) {
      Jacobian d = std::get<Jacobian>(branch_derivative(s, 1, {x, y}, 1));
      EXPECT_NEAR(d.f2x, 2.0 * (b - a) * y, 1e-15);
      EXPECT_NEAR(d.f2y, a + (2.0 * x - 1.0) * (b - a), 1e-15);
    }
}

TEST(Derivatives, AffineSecondPartials) {
  auto s = make_affine_example(0.8, 0.55);
  for (std::size_t i = 0; i < 2; ++i) {
    SecondPartials h = std::get<SecondPartials>(branch_derivative(s, i, {0.25 + 0.5 * i, 0.3}, 2));
    EXPECT_EQ(h.f1xx, 0.0);
    EXPECT_EQ(h.f1xy, 0.0);
    EXPECT_EQ(h.f1yy, 0.0);
    EXPECT_EQ(h.f2xx, 0.0);
    EXPECT_EQ(h.f2yy, 0.0);
    EXPECT_NEAR(std::abs(h.f2xy), 0.5, 1e-15);
    EXPECT_NEAR(h.max_abs(), 0.5, 1e-15);
  }
  EXPECT_THROW(branch_derivative(s, 0, {0.1, 0.1}, 3), ParameterError);
}

TEST(Hyperbolicity, BakerPasses) {
  auto rep = validate_hyperbolicity(make_baker(0.6), 65);
  EXPECT_TRUE(rep.h1_pass);
  EXPECT_TRUE(rep.h2_pass);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.eq6.observed, 0.0);
  EXPECT_EQ(rep.eq5.observed, 0.0);
  EXPECT_NEAR(rep.eq7.observed, 0.3, 1e-15);
  EXPECT_NEAR(rep.a2.observed, 1.2, 1e-15);
}

TEST(Hyperbolicity, AffineFlagsA4WithMargin) {
  auto rep = validate_hyperbolicity(make_affine_example(0.8, 0.55), 65);
  // 2(a - b) sup|y| over J = [-0.1, 1.1]
  EXPECT_NEAR(rep.a4.observed, 0.5 * 1.1, 1e-12);
  EXPECT_FALSE(rep.a4.pass);
  EXPECT_NEAR(rep.a4.margin, 0.125 - 0.55, 1e-12);
  EXPECT_TRUE(rep.passed());  // A4 is advisory unless strict
  auto strict = validate_hyperbolicity(make_affine_example(0.8, 0.55), 65, true);
  EXPECT_FALSE(strict.passed());
}

TEST(Hyperbolicity, WideConeWithNeutralFiberFailsH2) {
  SkewBranch l, r;
  l.base = {0.0, 0.5};
  r.base = {0.5, 1.0};
  l.slope = r.slope = 1.0;
  auto s = make_custom_skew({l, r}, 0.9, 1.5);
  auto rep = validate_hyperbolicity(s, 33);
  EXPECT_FALSE(rep.h2_pass);
  EXPECT_FALSE(rep.passed());
  const BoundCheck& c = rep.h2_stable;
  EXPECT_FALSE(c.pass);
  EXPECT_TRUE(s.strips()[c.strip].contains(c.witness));
}

TEST(Property, RoundTripForwardInverse) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& s : {make_baker(0.6), make_affine_example(0.8, 0.55)}) {
    for (int k = 0; k < 10000; ++k) {
      std::size_t i = k % 2;
      const Strip& st = s.strips()[i];
      Point z{st.base.lo + u(rng) * st.base.length(), u(rng)};
      Point w = apply_branch(s, i, apply_branch(s, i, z, Direction::forward), Direction::inverse);
      EXPECT_LE(std::abs(w.x - z.x), 1e-12);
      EXPECT_LE(std::abs(w.y - z.y), 1e-12);
    }
  }
}

TEST(Property, UnstableConeInvariantOnLattice) {
  for (const auto& s : {make_baker(0.6), make_baker(0.3), make_affine_example(0.8, 0.55)}) {
    const double alpha = s.alpha();
    for (std::size_t i = 0; i < s.strip_count(); ++i)
      for (int ix = 0; ix <= 32; ++ix)
        for (int iy = 0; iy <= 32; ++iy) {
          const Strip& st = s.strips()[i];
          Point z{st.base.lo + st.base.length() * ix / 32.0, s.fiber().lo + s.fiber().length() * iy / 32.0};
          Jacobian d = first_derivatives(s, i, z);
          for (double t : {alpha, -alpha}) {
            Point v = d.apply({1.0, t});
            EXPECT_LE(std::abs(v.y), alpha * std::abs(v.x));
          }
        }
  }
}

TEST(Property, SkewProductsHaveNoVerticalShear) {
  auto s = make_affine_example(0.7, 0.6);
  for (std::size_t i = 0; i < 2; ++i)
    for (double y : {-0.1, 0.5, 1.1}) EXPECT_EQ(first_derivatives(s, i, {0.25 + 0.5 * i, y}).f1y, 0.0);
  EXPECT_EQ(validate_hyperbolicity(s, 17).eq5.observed, 0.0);
}

TEST(Property, JacobianDeterminantMatchesPartials) {
  auto s = make_affine_example(0.8, 0.55);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    std::size_t i = k % 2;
    Point z{0.5 * i + 0.5 * u(rng), u(rng)};
    Jacobian d = std::get<Jacobian>(branch_derivative(s, i, z, 1));
    EXPECT_NEAR(branch_jacobian_det(s, i, z), d.f1x * d.f2y - d.f1y * d.f2x, 1e-14);
  }
}

TEST(Property, A2BoundFiniteAndReported) {
  for (const auto& s : {make_baker(0.6), make_affine_example(0.8, 0.55)}) {
    auto rep = validate_hyperbolicity(s, 33);
    EXPECT_TRUE(std::isfinite(rep.a2.observed));
    EXPECT_TRUE(std::isfinite(rep.max_jacobian));
    EXPECT_GT(rep.max_jacobian, 0.0);
  }
}

TEST(Instances, ConjugationIsReversible) {
  auto s = make_baker(0.6);
  Point z{0.3, 0.7};
  Point o = s.conjugation().to_original(z);
  Point back = s.conjugation().from_original(o);
  EXPECT_DOUBLE_EQ(back.x, z.x);
  EXPECT_DOUBLE_EQ(back.y, z.y);
  EXPECT_TRUE(make_affine_example(0.8, 0.55).conjugation().is_identity());
}

TEST(Instances, HashDistinguishesParameters) {
  EXPECT_NE(make_baker(0.6).hash(), make_baker(0.61).hash());
  EXPECT_EQ(make_baker(0.6).hash(), make_baker(0.6).hash());
}

#include <gtest/gtest.h>

#include "ghm/diagnostics.hpp"
#include "ghm/hyperbolicity.hpp"
#include "ghm/instances.hpp"

using namespace ghm;

namespace {

constexpr double kA = 0.8, kB = 0.55;

// y -> c + 0.4 y + 0.1 y^2 on both halves
GhmSpec curved_skew() {
  SkewBranch l, r;
  l.base = {0.0, 0.5};
  r.base = {0.5, 1.0};
  l.offset = 0.05;
  r.offset = 0.45;
  l.slope = r.slope = 0.4;
  l.curvature = r.curvature = 0.1;
  return make_custom_skew({l, r}, 0.5);
}

// Points at relative heights 0.1 and 0.9 inside U_[w](x).
std::pair<Point, Point> fiber_pair(const GhmSpec& s, const Word& w, double x) {
  auto u = fiber_image(s, w, x, false);
  return {{x, u->lo + 0.1 * u->length()}, {x, u->lo + 0.9 * u->length()}};
}

// Forward orbit of a start point: returns the end point and its itinerary.
std::pair<Point, Word> forward_history(const GhmSpec& s, Point z, int steps) {
  Word hist;
  for (int k = 0; k < steps; ++k) {
    std::size_t i = z.x < 0.5 ? 0 : 1;
    hist.push_back(static_cast<Symbol>(i));
    z = apply_branch(s, i, z, Direction::forward);
  }
  return {z, hist};
}

DiagnosticsReport diagnose(const GhmSpec& s, std::size_t lattice, std::size_t depth) {
  DiagnosticsOptions o;
  o.lattice_n = lattice;
  o.word_depth = depth;
  return compute_diagnostics(s, o);
}

}  // namespace

TEST(Directions, BakerUnstableIsHorizontal) {
  auto s = make_baker(0.6);
  auto [z, h] = forward_history(s, {0.31, 0.4}, 20);
  for (std::size_t depth : {0u, 5u, 20u}) {
    auto d = unstable_direction(s, h, z, depth);
    EXPECT_EQ(d.slope, 0.0);
    EXPECT_EQ(d.v.x, 1.0);
  }
  auto st = stable_direction(s, {0.3, 0.4}, 10);
  EXPECT_EQ(st.v.x, 0.0);
  EXPECT_EQ(st.v.y, 1.0);
}

TEST(Directions, DepthZeroIsConeAxis) {
  auto d = unstable_direction(make_affine_example(kA, kB), {1, 0}, {0.4, 0.2}, 0);
  EXPECT_EQ(d.v.x, 1.0);
  EXPECT_EQ(d.v.y, 0.0);
}

TEST(Directions, AffineConvergesWithinBound) {
  auto s = make_affine_example(kA, kB);
  auto [z, hist] = forward_history(s, {0.37, 0.4}, 30);
  auto d10 = unstable_direction(s, hist, z, 10), d20 = unstable_direction(s, hist, z, 20);
  EXPECT_LE(std::abs(d10.slope), s.alpha());
  EXPECT_LE(std::abs(d10.slope - d20.slope), d10.error_bound);
  EXPECT_GT(d10.error_bound, d20.error_bound);
  EXPECT_THROW(unstable_direction(s, {0, 1}, z, 3), ParameterError);
}

TEST(StableDistortion, BakerAndAffineAreUndistorted) {
  auto b = make_baker(0.6);
  auto [p, q] = fiber_pair(b, {0, 1, 1, 0}, 0.3);
  EXPECT_NEAR(stable_distortion_ratio(b, {0, 1, 1, 0}, p, q), 1.0, 1e-12);
  auto s = make_affine_example(kA, kB);
  for (double x : {0.1, 0.5, 0.9}) {
    auto [z, w] = fiber_pair(s, {1, 1, 1}, x);
    EXPECT_NEAR(stable_distortion_ratio(s, {1, 1, 1}, z, w), 1.0, 1e-12);
  }
  EXPECT_THROW(stable_distortion_ratio(s, {1}, {0.1, 0.1}, {0.2, 0.1}), ParameterError);
}

TEST(StableDistortion, CurvedFibersBoundedInDepth) {
  auto s = curved_skew();
  std::vector<double> ratios;
  for (std::size_t n : {5u, 10u, 20u}) {
    Word w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = static_cast<Symbol>(k % 3 == 0);
    auto [z, v] = fiber_pair(s, w, 0.3);
    ratios.push_back(stable_distortion_ratio(s, w, z, v));
  }
  EXPECT_GT(ratios[0], 1.0);
  EXPECT_GE(ratios[2], ratios[1] - 1e-12);
  EXPECT_LT(ratios[2], 1.05 * ratios[1]);  // converges: deep images are tiny
}

TEST(FiberRatio, BakerIsOne) {
  auto s = make_baker(0.6);
  EXPECT_DOUBLE_EQ(fiber_ratio_constant(s, {0, 1, 0, 0, 1}), 1.0);
}

TEST(FiberRatio, AffineSingleSymbol) {
  auto s = make_affine_example(kA, kB);
  EXPECT_NEAR(fiber_ratio_constant(s, {1}), kA / kB, 1e-12);
  EXPECT_NEAR(kA / kB, 1.4545, 1e-4);
}

TEST(Margins, BakerConstantInDepth) {
  auto s = make_baker(0.6);
  // U_hat = lam^n J, U = lam^n [0,1] up to a common offset: margin 0.1 / 1.2
  for (const Word& w : std::vector<Word>{{}, {0}, {1, 0}, {0, 1, 1, 0, 1, 0}})
    EXPECT_NEAR(margin_constants(s, w).k3, 1.0 / 12.0, 1e-12) << word_text(w);
}

TEST(Margins, EmptyWordIsFiberMargin) {
  InstanceOptions o;
  o.fiber = {-0.2, 1.05};
  auto s = make_baker(0.6, o);
  EXPECT_NEAR(margin_constants(s, {}).k3, 0.05 / 1.25, 1e-12);
}

TEST(Margins, CorollaryAndNegativeControl) {
  auto s = make_affine_example(kA, kB);
  Word w{1, 0, 1, 1};
  auto ok = margin_constants(s, w, 257, 0.5, 1000, 3);
  EXPECT_EQ(ok.corollary.violations, 0u);
  EXPECT_EQ(ok.corollary.samples, 1000u);
  auto bad = margin_constants(s, w, 257, 10.0, 1000, 3);
  EXPECT_GT(bad.corollary.violations, 0u);
}

TEST(Adapted, BakerIsDiagonal) {
  auto r = adapted_matrix(Jacobian{2.0, 0.0, 0.0, 0.6}, 0.0, 0.0, 0.0, 0.0);
  EXPECT_NEAR(r.g.f1x, 0.5, 1e-15);
  EXPECT_NEAR(r.g.f2y, 1.0 / 0.6, 1e-15);
  EXPECT_EQ(r.g.f1y, 0.0);
  EXPECT_EQ(r.g.f2x, 0.0);
  EXPECT_NEAR(r.eq12_ratio, 0.3, 1e-15);
  EXPECT_EQ(r.c4_ratio, 0.0);
}

TEST(Adapted, InverseInAdaptedFrames) {
  // g = A_p^-1 DF^-1 A_z with A = [[1, b], [a, 1]]
  Jacobian F{2.0, 0.0, 0.3, 0.7};
  double az = 0.2, ap = -0.1, bz = 0.05, bp = 0.02;
  auto r = adapted_matrix(F, az, ap, bz, bp);
  Jacobian Az{1.0, bz, az, 1.0}, Ap{1.0, bp, ap, 1.0};
  Jacobian Fi = F.inverse(), Api = Ap.inverse();
  auto mul = [](const Jacobian& m, const Jacobian& n) {
    return Jacobian{m.f1x * n.f1x + m.f1y * n.f2x, m.f1x * n.f1y + m.f1y * n.f2y, m.f2x * n.f1x + m.f2y * n.f2x,
                    m.f2x * n.f1y + m.f2y * n.f2y};
  };
  Jacobian g = mul(Api, mul(Fi, Az));
  EXPECT_NEAR(r.g.f1x, g.f1x, 1e-12);
  EXPECT_NEAR(r.g.f1y, g.f1y, 1e-12);
  EXPECT_NEAR(r.g.f2x, g.f2x, 1e-12);
  EXPECT_NEAR(r.g.f2y, g.f2y, 1e-12);
}

TEST(Adapted, DegenerateFrameRejected) {
  EXPECT_THROW(adapted_matrix(Jacobian{2.0, 0.0, 0.0, 0.6}, 0.0, 1.0, 0.0, 1.0), DegenerateError);
}

TEST(Diagnostics, BakerClosedForms) {
  const double lam = 0.6;
  auto r = diagnose(make_baker(lam), 64, 8);
  EXPECT_NEAR(r.k_stable, 1.0, 1e-12);
  EXPECT_NEAR(r.k2, 1.0, 1e-12);
  EXPECT_NEAR(r.k3, 1.0 / 12.0, 1e-12);
  EXPECT_NEAR(r.k4, 1.0, 1e-12);
  EXPECT_NEAR(r.c2, 0.5, 1e-12);
  EXPECT_NEAR(r.c3, 1.0 / lam, 1e-12);
  EXPECT_NEAR(r.c4, 0.0, 1e-12);
  EXPECT_NEAR(r.eq12_max_ratio, lam / 2.0, 1e-12);
  EXPECT_NEAR(r.eq12_bound, lam * lam, 1e-12);  // K0 = 1 / lam
  EXPECT_NEAR(r.max_g1y_at_z, 0.0, 1e-12);
  EXPECT_FALSE(r.c4_k0_feasible);  // K0 = 5/3 < 3
  EXPECT_EQ(r.corollary_violations, 0u);
}

TEST(Diagnostics, AffineOffDiagonalVanishesAtZ) {
  auto r = diagnose(make_affine_example(kA, kB), 64, 8);
  EXPECT_EQ(r.lattice_points, 64u * 64u);
  EXPECT_LT(r.max_g1y_at_z, 1e-12);
  EXPECT_FALSE(r.c4_k0_feasible);
}

TEST(Property, DiagnosticsStableUnderRefinement) {
  auto s = make_affine_example(kA, kB);
  auto lo = diagnose(s, 32, 6), hi = diagnose(s, 64, 12);
  auto close = [](double a, double b) { return std::abs(a - b) <= 0.05 * std::max(std::abs(a), std::abs(b)) + 1e-9; };
  EXPECT_TRUE(close(lo.k2, hi.k2)) << lo.k2 << " " << hi.k2;
  EXPECT_TRUE(close(lo.k3, hi.k3));
  EXPECT_TRUE(close(lo.k4, hi.k4)) << lo.k4 << " " << hi.k4;
  EXPECT_TRUE(close(lo.k_stable, hi.k_stable));
  EXPECT_TRUE(close(lo.c2, hi.c2));
  EXPECT_TRUE(close(lo.c3, hi.c3));
  EXPECT_TRUE(close(lo.eq12_max_ratio, hi.eq12_max_ratio));
}

TEST(Property, ConstantsAtLeastOneAndBoundedInDepth) {
  for (const auto& s : {make_affine_example(kA, kB), curved_skew()}) {
    auto d8 = diagnose(s, 16, 8), d12 = diagnose(s, 16, 12);
    for (double k : {d8.k2, d8.k4, d8.k_stable, d12.k2, d12.k4, d12.k_stable}) EXPECT_GE(k, 1.0);
    EXPECT_LE(d12.k2, 1.05 * d8.k2) << s.family();
    EXPECT_LE(d12.k4, 1.05 * d8.k4) << s.family();
    EXPECT_LE(d12.k_stable, 1.05 * d8.k_stable) << s.family();
  }
}

TEST(Property, AdaptedContractionMarginWhereConesHold) {
  for (const auto& s : {make_baker(0.6), make_baker(0.3), make_affine_example(kA, kB)}) {
    if (!validate_hyperbolicity(s, 33).h2_pass) continue;
    auto r = diagnose(s, 32, 6);
    EXPECT_GE(r.eq12_margin, 0.0) << s.family();
  }
}

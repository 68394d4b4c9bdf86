#ifndef GHM_HYPERBOLICITY_HPP
#define GHM_HYPERBOLICITY_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ghm/cones.hpp"
#include "ghm/spec.hpp"

namespace ghm {

/// Margins closer to zero than this are reported as inconclusive.
inline constexpr double inconclusive_margin = 1e-3;

/// One grid-evaluated bound. `margin` is positive when the bound holds;
/// `witness` is the lattice point where the margin is smallest.
struct BoundCheck {
  std::string name;
  double observed = 0.0;
  double bound = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  bool pass = true;
  bool inconclusive = false;
  Point witness{};
  std::size_t strip = 0;
};

struct HyperbolicityReport {
  BoundCheck h1_unstable, h1_stable, h2_unstable, h2_stable;
  BoundCheck eq5, eq6, eq7, eq8;
  BoundCheck a1, a2, a3, a4;
  bool h1_pass = false;
  bool h2_pass = false;
  bool strict_a4 = false;
  double c0 = 0.0;  // measured sup |D^2 F|
  double c1 = 0.0;  // sqrt(2) (1 + alpha) c0
  double max_jacobian = 0.0;
  std::size_t grid_resolution = 0;

  std::vector<const BoundCheck*> checks() const {
    return {&h1_unstable, &h1_stable, &h2_unstable, &h2_stable, &eq5, &eq6, &eq7, &eq8, &a1, &a2, &a3, &a4};
  }
  bool passed() const {
    bool ok = h1_pass && h2_pass && eq5.pass && eq6.pass && eq7.pass && eq8.pass && a1.pass && a2.pass && a3.pass;
    return ok && (!strict_a4 || a4.pass);
  }
};

namespace detail {

// Tracks the worst (smallest) margin of an upper bound `observed <= bound`.
struct UpperBound {
  BoundCheck check;
  bool strict = false;
  UpperBound(std::string name, double bound, bool strict_ = false) : strict(strict_) {
    check.name = std::move(name);
    check.bound = bound;
    check.observed = -std::numeric_limits<double>::infinity();
  }
  void observe(double v, Point z, std::size_t strip) {
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    if (v > check.observed) {
      check.observed = v;
      check.witness = z;
      check.strip = strip;
    }
  }
  BoundCheck finish() {
    check.margin = check.bound - check.observed;
    check.pass = strict ? check.margin > 0.0 : check.margin >= 0.0;
    check.inconclusive = std::abs(check.margin) < inconclusive_margin;
    return check;
  }
};

// Lower bound `observed >= bound`.
struct LowerBound {
  BoundCheck check;
  LowerBound(std::string name, double bound) {
    check.name = std::move(name);
    check.bound = bound;
    check.observed = std::numeric_limits<double>::infinity();
  }
  void observe(double v, Point z, std::size_t strip) {
    if (std::isnan(v)) v = -std::numeric_limits<double>::infinity();
    if (v < check.observed) {
      check.observed = v;
      check.witness = z;
      check.strip = strip;
    }
  }
  BoundCheck finish() {
    check.margin = check.observed - check.bound;
    check.pass = check.margin >= 0.0;
    check.inconclusive = std::abs(check.margin) < inconclusive_margin;
    return check;
  }
};

inline double safe_ratio(double num, double den) {
  if (num == 0.0) return 0.0;
  return std::abs(num) / std::abs(den);
}

}  // namespace detail

/// Evaluates the cone conditions H1/H2, the derivative ratios they imply and
/// the special assumptions A1-A4 on a grid_n x grid_n lattice over each
/// extended strip. Grid-based: not a certificate.
inline HyperbolicityReport validate_hyperbolicity(const GhmSpec& spec, std::size_t grid_n, bool strict_a4 = false) {
  if (grid_n < 2) throw ParameterError("validation grid needs at least 2 samples per axis");
  const double alpha = spec.alpha();
  const double k0 = spec.k0();
  const Interval J = spec.fiber();
  const double n1 = static_cast<double>(grid_n - 1);

  // Pass 1: C0 is needed for the F1x distortion bound.
  double c0 = 0.0;
  double max_jac = -std::numeric_limits<double>::infinity();
  auto lattice = [&](std::size_t i, std::size_t ix, std::size_t iy) {
    const Strip& s = spec.strips()[i];
    double y = J.lo + J.length() * static_cast<double>(iy) / n1;
    double l = s.left_boundary(y), r = s.right_boundary(y);
    return Point{l + (r - l) * static_cast<double>(ix) / n1, y};
  };
  for (std::size_t i = 0; i < spec.strip_count(); ++i)
    for (std::size_t iy = 0; iy < grid_n; ++iy)
      for (std::size_t ix = 0; ix < grid_n; ++ix) {
        Point z = lattice(i, ix, iy);
        c0 = std::max(c0, spec.branches()[i].second_derivatives(z).max_abs());
      }
  const double c1 = std::sqrt(2.0) * (1.0 + alpha) * c0;

  detail::UpperBound h1u("H1 unstable cone slope", alpha), h1s("H1 stable cone slope", alpha);
  detail::LowerBound h2u("H2 unstable expansion", k0), h2s("H2 stable expansion", k0);
  detail::UpperBound e5("|F1y|/|F1x|", alpha), e6("|F2x|/|F1x|", alpha);
  detail::UpperBound e7("|F2y|/|F1x|", 1.0 / (k0 * k0) + alpha * alpha);
  detail::UpperBound e8("|F1x(z)|/|F1x(w)|", std::exp(c1));
  detail::UpperBound a1("A1 sup|D2F|", std::numeric_limits<double>::infinity(), true);
  detail::UpperBound a2("A2 sup J_F", std::numeric_limits<double>::infinity(), true);
  detail::UpperBound a3("A3 sup F1y(z)F2x(w)/F2y(z)", std::numeric_limits<double>::infinity(), true);
  detail::UpperBound a4("A4 max(|F1y|,|F2x|)", 0.125, true);

  for (std::size_t i = 0; i < spec.strip_count(); ++i) {
    const BranchMap& br = spec.branches()[i];
    for (std::size_t iy = 0; iy < grid_n; ++iy) {
      Jacobian prev{};
      for (std::size_t ix = 0; ix < grid_n; ++ix) {
        Point z = lattice(i, ix, iy);
        Jacobian d = br.first_derivatives(z);
        double jac = d.det();
        max_jac = std::max(max_jac, jac);

        h1u.observe(alpha - cones::unstable_invariance_margin(d, alpha), z, i);
        h1s.observe(alpha - cones::stable_invariance_margin(d, alpha), z, i);
        h2u.observe(cones::unstable_expansion(d, alpha), z, i);
        h2s.observe(cones::stable_expansion(d, alpha), z, i);
        e5.observe(detail::safe_ratio(d.f1y, d.f1x), z, i);
        e6.observe(detail::safe_ratio(d.f2x, d.f1x), z, i);
        e7.observe(detail::safe_ratio(d.f2y, d.f1x), z, i);
        if (ix > 0) {
          double ratio = std::abs(d.f1x) / std::abs(prev.f1x);
          e8.observe(std::max(ratio, 1.0 / ratio), z, i);
        }
        a1.observe(br.second_derivatives(z).max_abs(), z, i);
        a2.observe(jac, z, i);
        a4.observe(std::max(std::abs(d.f1y), std::abs(d.f2x)), z, i);

        // A3 pairs z in S_i with its preimage w = F_i^{-1}(z).
        if (auto w = br.inverse(z); w && spec.strips()[i].contains(*w)) {
          Jacobian dw = br.first_derivatives(*w);
          a3.observe(std::abs(d.f1y * dw.f2x) / std::abs(d.f2y), z, i);
        }
        prev = d;
      }
    }
  }

  HyperbolicityReport rep;
  rep.h1_unstable = h1u.finish();
  rep.h1_stable = h1s.finish();
  rep.h2_unstable = h2u.finish();
  rep.h2_stable = h2s.finish();
  rep.eq5 = e5.finish();
  rep.eq6 = e6.finish();
  rep.eq7 = e7.finish();
  rep.eq8 = e8.finish();
  rep.a1 = a1.finish();
  rep.a2 = a2.finish();
  if (a3.check.observed == -std::numeric_limits<double>::infinity()) a3.check.observed = 0.0;
  rep.a3 = a3.finish();
  rep.a4 = a4.finish();
  rep.h1_pass = rep.h1_unstable.pass && rep.h1_stable.pass;
  rep.h2_pass = rep.h2_unstable.pass && rep.h2_stable.pass;
  rep.strict_a4 = strict_a4;
  rep.c0 = c0;
  rep.c1 = c1;
  rep.max_jacobian = max_jac;
  rep.grid_resolution = grid_n;
  return rep;
}

}  // namespace ghm

#endif  // GHM_HYPERBOLICITY_HPP

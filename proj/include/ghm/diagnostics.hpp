#ifndef GHM_DIAGNOSTICS_HPP
#define GHM_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "ghm/conditions.hpp"
#include "ghm/measure.hpp"
#include "ghm/symbolic.hpp"

namespace ghm {

struct Direction2D {
  Point v{1.0, 0.0};  // Euclidean unit vector
  double slope = 0.0;
  double error_bound = 0.0;
};

namespace detail {

inline Point normalize(Point v) {
  double n = std::hypot(v.x, v.y);
  return {v.x / n, v.y / n};
}

// Backward orbit z_n = z, z_{k-1} = F_{a_k}^{-1}(z_k); throws when infeasible.
inline std::vector<Point> backward_orbit(const GhmSpec& spec, const Word& w, Point z) {
  std::vector<Point> orbit(w.size() + 1);
  orbit[w.size()] = z;
  for (std::size_t k = w.size(); k-- > 0;) {
    auto p = spec.branches()[w[k]].inverse(orbit[k + 1]);
    if (!p)
      throw DomainError("backward itinerary " + word_text(w) + " is infeasible at step " + std::to_string(k + 1), w[k]);
    orbit[k] = *p;
  }
  return orbit;
}

// Contraction rate of the projective action on unstable slopes.
inline double slope_contraction(const GhmSpec& spec, int n = 33) {
  double rho = 0.0, alpha = spec.alpha();
  const Interval J = spec.fiber();
  for (std::size_t i = 0; i < spec.strip_count(); ++i) {
    const Strip& s = spec.strips()[i];
    for (int iy = 0; iy < n; ++iy) {
      double y = J.lo + J.length() * iy / (n - 1);
      double l = s.left_boundary(y), r = s.right_boundary(y);
      for (int ix = 0; ix < n; ++ix) {
        Jacobian d = spec.branches()[i].first_derivatives({l + (r - l) * ix / (n - 1), y});
        double den = std::abs(d.f1x) - alpha * std::abs(d.f1y);
        rho = std::max(rho, std::abs(d.det()) / (den * den));
      }
    }
  }
  return rho;
}

}  // namespace detail

/// E^u at z: the horizontal vector pushed forward `depth` steps along the last
/// `depth` symbols of the backward itinerary.
inline Direction2D unstable_direction(const GhmSpec& spec, const Word& history, Point z, std::size_t depth) {
  check_word(spec, history);
  if (depth > history.size()) throw ParameterError("itinerary shorter than requested depth");
  Word tail(history.end() - static_cast<std::ptrdiff_t>(depth), history.end());
  auto orbit = detail::backward_orbit(spec, tail, z);
  Point v{1.0, 0.0};
  for (std::size_t k = 0; k < depth; ++k) {
    v = spec.branches()[tail[k]].first_derivatives(orbit[k]).apply(v);
    double m = max_norm(v);
    v = {v.x / m, v.y / m};
  }
  Direction2D d;
  d.v = detail::normalize(v);
  d.slope = v.y / v.x;
  d.error_bound = depth == 0 ? spec.alpha() : 2.0 * spec.alpha() * std::pow(detail::slope_contraction(spec), static_cast<double>(depth));
  return d;
}

/// E^s at z: vertical for skew products; otherwise the vertical vector pulled
/// back along the forward orbit of z.
inline Direction2D stable_direction(const GhmSpec& spec, Point z, std::size_t depth) {
  Direction2D d;
  if (spec.is_skew()) {
    d.v = {0.0, 1.0};
    d.slope = 0.0;  // x per y
    return d;
  }
  std::vector<Point> orbit{z};
  std::vector<std::size_t> strips;
  for (std::size_t k = 0; k < depth; ++k) {
    std::size_t i = spec.strip_count();
    for (std::size_t s = 0; s < spec.strip_count(); ++s)
      if (spec.strips()[s].contains(orbit.back())) i = s;
    if (i == spec.strip_count()) break;
    strips.push_back(i);
    orbit.push_back(spec.branches()[i].forward(orbit.back()));
  }
  Point v{0.0, 1.0};
  for (std::size_t k = strips.size(); k-- > 0;) {
    v = spec.branches()[strips[k]].first_derivatives(orbit[k]).inverse().apply(v);
    double m = max_norm(v);
    v = {v.x / m, v.y / m};
  }
  d.v = detail::normalize(v);
  d.slope = v.x / v.y;
  d.error_bound = 2.0 * spec.alpha() * std::pow(detail::slope_contraction(spec), static_cast<double>(strips.size()));
  return d;
}

/// max over i <= n of the ratio (>= 1) of |D^s F^{-1}_{[A]_i}| at z and w,
/// z and w on one vertical fiber inside U_[A].
inline double stable_distortion_ratio(const GhmSpec& spec, const Word& w, Point z, Point v) {
  if (z.x != v.x) throw ParameterError("points lie on different stable fibers");
  check_word(spec, w);
  const auto& sb = spec.skew_branches();
  auto oz = detail::backward_orbit(spec, w, z), ov = detail::backward_orbit(spec, w, v);
  double log_ratio = 0.0, worst = 0.0;
  for (std::size_t k = w.size(); k-- > 0;) {
    const auto& b = sb[w[k]];
    log_ratio += std::log(b.fiber_dy(ov[k].x, ov[k].y)) - std::log(b.fiber_dy(oz[k].x, oz[k].y));
    worst = std::max(worst, std::abs(log_ratio));
  }
  return std::exp(worst);
}

/// max/min of |U_hat_[A](x)| over the grid.
inline double fiber_ratio_constant(const GhmSpec& spec, const Word& w, std::size_t x_grid_n = 257) {
  if (x_grid_n < 2) throw ParameterError("x grid needs at least 2 points");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double x : uniform_grid(x_grid_n)) {
    double l = hat_length(spec, w, x);
    if (l <= 0.0) continue;
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  return hi / lo;
}

struct CorollaryCheck {
  double r = 0.0;
  std::size_t samples = 0;
  std::size_t violations = 0;
};

struct MarginResult {
  double k3 = 0.0;  // min over the grid of min(lower, upper margin) / |U_hat(x)|
  CorollaryCheck corollary;
};

/// K3 for one word, then the corollary: points within r of U_[A] lie in U_hat_[A]
/// when r < K3 K2^-1 d. `r_factor` scales r relative to K3 K2^-1 d.
inline MarginResult margin_constants(const GhmSpec& spec, const Word& w, std::size_t x_grid_n = 257, double r_factor = 0.5,
                                     std::size_t samples = 1000, std::uint64_t seed = 7) {
  const Interval J = spec.fiber();
  if (!(J.lo < 0.0 && J.hi > 1.0)) throw DegenerateError("extended fiber must strictly contain [0,1]");
  MarginResult res;
  res.k3 = std::numeric_limits<double>::infinity();
  for (double x : uniform_grid(x_grid_n)) {
    auto u = fiber_image(spec, w, x, false);
    auto uh = fiber_image(spec, w, x, true);
    if (!u || !uh) continue;
    double m = std::min(u->lo - uh->lo, uh->hi - u->hi) / uh->length();
    res.k3 = std::min(res.k3, m);
  }
  if (!(res.k3 > 0.0)) throw DegenerateError("margins of U_hat around U vanish for word " + word_text(w));
  double k2 = fiber_ratio_constant(spec, w, x_grid_n);
  double d = cylinder_diameter(spec, w, x_grid_n);
  double r = r_factor * res.k3 / k2 * d;
  res.corollary.r = r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (std::size_t s = 0; s < samples; ++s) {
    double x = uni(rng);
    auto u = fiber_image(spec, w, x, false);
    auto uh = fiber_image(spec, w, x, true);
    if (!u) continue;
    double y = (u->lo - r) + uni(rng) * (u->length() + 2.0 * r);
    ++res.corollary.samples;
    if (!uh || !uh->contains(y)) ++res.corollary.violations;
  }
  return res;
}

/// d([A][B]) / (d([A]) d([B]) / |J|).
inline double concatenation_ratio(const GhmSpec& spec, const Word& a, const Word& b, std::size_t x_grid_n = 257) {
  double jl = spec.fiber().length();
  return cylinder_diameter(spec, concat(a, b), x_grid_n) / (cylinder_diameter(spec, a, x_grid_n) * cylinder_diameter(spec, b, x_grid_n) / jl);
}

/// DF^{-1} in the adapted frames: A_{F^{-1}(z)}^{-1} DF^{-1} A_z, entries via the
/// explicit formulas with F's partials at the preimage of the evaluation point.
struct AdaptedDerivative {
  Jacobian g;  // g1x, g1y, g2x, g2y stored as f1x, f1y, f2x, f2y
  double a_z = 0, a_p = 0, b_z = 0, b_p = 0;
  double eq12_ratio = 0;   // |g1x| / |g2y|
  double c4_ratio = 0;     // |g2x| / |g2y|
};

inline AdaptedDerivative adapted_matrix(const Jacobian& F, double a_z, double a_p, double b_z, double b_p) {
  double jf = F.det(), ja = 1.0 - a_p * b_p;
  double den = jf * ja;
  if (std::abs(den) < 1e-10) throw DegenerateError("adapted frame is near-degenerate (|J_F J_A| < 1e-10)");
  AdaptedDerivative r;
  r.a_z = a_z;
  r.a_p = a_p;
  r.b_z = b_z;
  r.b_p = b_p;
  r.g.f1x = (F.f2y + b_p * F.f2x - a_z * F.f1y - a_z * b_p * F.f1x) / den;
  r.g.f1y = (b_z * F.f2y + b_z * b_p * F.f2x - F.f1y - b_p * F.f1x) / den;
  r.g.f2x = (-a_p * F.f2y - F.f2x + a_z * a_p * F.f1y + a_z * F.f1x) / den;
  r.g.f2y = (-a_p * b_z * F.f2y - b_z * F.f2x + a_p * F.f1y + F.f1x) / den;
  r.eq12_ratio = std::abs(r.g.f1x) / std::abs(r.g.f2y);
  r.c4_ratio = std::abs(r.g.f2x) / std::abs(r.g.f2y);
  return r;
}

/// Adapted derivative of branch `strip` at w (w = z when offset is 0, else
/// w = z + offset * unstable_dir). a(p) is the unstable slope at F^{-1}(z).
inline AdaptedDerivative adapted_derivative(const GhmSpec& spec, std::size_t strip, Point z, const Direction2D& unstable_dir,
                                            double a_p, double offset = 0.0, double b_z = 0.0, double b_p = 0.0) {
  Point w{z.x + offset * unstable_dir.v.x, z.y + offset * unstable_dir.v.y};
  auto pre = spec.branches().at(strip).inverse(w);
  if (!pre) throw DomainError("point has no preimage under strip " + std::to_string(strip), strip);
  Jacobian F = spec.branches()[strip].first_derivatives(*pre);
  return adapted_matrix(F, unstable_dir.slope, a_p, b_z, b_p);
}

struct DiagnosticsOptions {
  std::size_t lattice_n = 64;
  std::size_t word_depth = 8;
  std::size_t history_depth = 20;
  std::size_t x_grid_n = 257;
  double arc_offset = 1e-3;
  std::size_t corollary_words = 16;
  std::size_t corollary_samples = 1000;
  std::uint64_t seed = 7;
  unsigned workers = 1;
};

struct DiagnosticsReport {
  double k_stable = 1.0;
  double k2 = 1.0;
  double k3 = 0.0;
  double k4 = 1.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double eq12_max_ratio = 0.0;
  double eq12_bound = 0.0;  // 1 / K0^2
  double eq12_margin = 0.0;
  double max_g1y_at_z = 0.0;
  bool c4_k0_feasible = false;  // C4 < 1/4 and K0 > 3
  std::size_t lattice_points = 0;
  std::size_t words_used = 0;
  std::size_t corollary_samples = 0;
  std::size_t corollary_violations = 0;
  std::size_t samples_used = 0;
};

inline DiagnosticsReport compute_diagnostics(const GhmSpec& spec, DiagnosticsOptions opt = {}) {
  DiagnosticsReport rep;
  EnumerationOptions eo;
  eo.x_grid_n = opt.x_grid_n;
  eo.workers = opt.workers;
  auto words = words_to_depth(spec, opt.word_depth, eo);
  rep.words_used = words.size();

  // K2, K_stable, K3 per word.
  std::vector<double> k2(words.size()), ks(words.size()), k3(words.size());
  parallel_for(words.size(), opt.workers, [&](std::size_t i) {
    const Word& w = words[i].word;
    k2[i] = fiber_ratio_constant(spec, w, opt.x_grid_n);
    double worst = 1.0, m3 = std::numeric_limits<double>::infinity();
    for (double x : uniform_grid(17)) {
      auto u = fiber_image(spec, w, x, false);
      if (!u) continue;
      worst = std::max(worst, stable_distortion_ratio(spec, w, {x, u->lo + 0.1 * u->length()}, {x, u->hi - 0.1 * u->length()}));
    }
    for (double x : uniform_grid(opt.x_grid_n)) {
      auto u = fiber_image(spec, w, x, false);
      auto uh = fiber_image(spec, w, x, true);
      if (u && uh) m3 = std::min(m3, std::min(u->lo - uh->lo, uh->hi - u->hi) / uh->length());
    }
    ks[i] = worst;
    k3[i] = m3;
  });
  rep.k2 = *std::max_element(k2.begin(), k2.end());
  rep.k_stable = *std::max_element(ks.begin(), ks.end());
  rep.k3 = std::min(*std::min_element(k3.begin(), k3.end()), [&] {
    // Empty word: the two components of J \ [0,1].
    const Interval J = spec.fiber();
    return std::min(-J.lo, J.hi - 1.0) / J.length();
  }());

  // Corollary on an evenly spaced word subset.
  std::size_t step = std::max<std::size_t>(1, words.size() / std::max<std::size_t>(1, opt.corollary_words));
  for (std::size_t i = 0; i < words.size(); i += step) {
    auto m = margin_constants(spec, words[i].word, opt.x_grid_n, 0.5, opt.corollary_samples, opt.seed + i);
    rep.corollary_samples += m.corollary.samples;
    rep.corollary_violations += m.corollary.violations;
  }

  // K4 over long words joined with short ones on either side.
  std::vector<Word> shorts;
  for (const auto& c : words)
    if (c.word.size() <= 2) shorts.push_back(c.word);
  std::vector<double> k4(words.size(), 1.0);
  parallel_for(words.size(), opt.workers, [&](std::size_t i) {
    for (const auto& b : shorts)
      for (double q : {concatenation_ratio(spec, words[i].word, b, opt.x_grid_n), concatenation_ratio(spec, b, words[i].word, opt.x_grid_n)})
        k4[i] = std::max({k4[i], q, 1.0 / q});
  });
  rep.k4 = *std::max_element(k4.begin(), k4.end());
  std::size_t k4_pairs = 2 * words.size() * shorts.size();

  // Adapted-coordinate constants on a lattice of image points.
  const std::size_t L = opt.lattice_n;
  struct LatticeOut {
    bool ok = false;
    double c2 = 0, c3 = 0, c4 = 0, eq12 = 0, g1y = 0;
  };
  std::vector<LatticeOut> out(L * L);
  parallel_for(L * L, opt.workers, [&](std::size_t idx) {
    std::size_t j = idx / L, k = idx % L;
    // Lattice start points pushed forward, so z has a genuine backward itinerary.
    Point z{(static_cast<double>(j) + 0.5) / static_cast<double>(L), (static_cast<double>(k) + 0.5) / static_cast<double>(L)};
    Word history;
    for (std::size_t s = 0; s < opt.history_depth; ++s) {
      std::size_t i = spec.strip_count();
      for (std::size_t t = 0; t < spec.strip_count(); ++t)
        if (spec.strips()[t].contains(z)) i = t;
      if (i == spec.strip_count()) return;
      history.push_back(static_cast<Symbol>(i));
      z = spec.branches()[i].forward(z);
    }
    Direction2D uz = unstable_direction(spec, history, z, opt.history_depth);
    std::size_t strip = history.back();
    Word hp(history.begin(), history.end() - 1);
    Point p = *spec.branches()[strip].inverse(z);
    Direction2D up = unstable_direction(spec, hp, p, opt.history_depth - 1);
    double bz = stable_direction(spec, z, opt.history_depth).slope;
    double bp = stable_direction(spec, p, opt.history_depth).slope;
    AdaptedDerivative at_z = adapted_derivative(spec, strip, z, uz, up.slope, 0.0, bz, bp);
    LatticeOut o;
    o.c2 = std::abs(at_z.g.f1x);
    o.g1y = std::abs(at_z.g.f1y);
    o.c3 = std::abs(at_z.g.f2y);
    o.c4 = at_z.c4_ratio;
    o.eq12 = at_z.eq12_ratio;
    for (double sgn : {-1.0, 1.0}) {
      Point w{z.x + sgn * opt.arc_offset * uz.v.x, z.y + sgn * opt.arc_offset * uz.v.y};
      if (!spec.branches()[strip].inverse(w)) continue;
      AdaptedDerivative at_w = adapted_derivative(spec, strip, z, uz, up.slope, sgn * opt.arc_offset, bz, bp);
      o.c3 = std::min(o.c3, std::abs(at_w.g.f2y));
      o.c4 = std::max(o.c4, at_w.c4_ratio);
      o.eq12 = std::max(o.eq12, at_w.eq12_ratio);
    }
    o.ok = true;
    out[idx] = o;
  });
  rep.c3 = std::numeric_limits<double>::infinity();
  for (const auto& o : out) {
    if (!o.ok) continue;
    ++rep.lattice_points;
    rep.c2 = std::max(rep.c2, o.c2);
    rep.c3 = std::min(rep.c3, o.c3);
    rep.c4 = std::max(rep.c4, o.c4);
    rep.eq12_max_ratio = std::max(rep.eq12_max_ratio, o.eq12);
    rep.max_g1y_at_z = std::max(rep.max_g1y_at_z, o.g1y);
  }
  if (rep.lattice_points == 0) throw DegenerateError("no lattice point admits a backward itinerary");
  rep.eq12_bound = 1.0 / (spec.k0() * spec.k0());
  rep.eq12_margin = rep.eq12_bound - rep.eq12_max_ratio;
  rep.c4_k0_feasible = rep.c4 < 0.25 && spec.k0() > 3.0;
  rep.samples_used = rep.lattice_points + rep.words_used + k4_pairs + rep.corollary_samples;
  return rep;
}

}  // namespace ghm

#endif  // GHM_DIAGNOSTICS_HPP

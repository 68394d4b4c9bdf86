#ifndef GHM_CONES_HPP
#define GHM_CONES_HPP

#include <algorithm>
#include <cmath>
#include <limits>

#include "ghm/geometry.hpp"

namespace ghm::cones {

/// min over |t| <= alpha of max(|a1 + b1 t|, |a2 + b2 t|). The objective is
/// convex and piecewise linear, so the minimum sits at an endpoint or a kink.
inline double min_max_abs_affine(double a1, double b1, double a2, double b2, double alpha) {
  double candidates[8];
  int n = 0;
  candidates[n++] = -alpha;
  candidates[n++] = alpha;
  if (b1 != 0.0) candidates[n++] = -a1 / b1;
  if (b2 != 0.0) candidates[n++] = -a2 / b2;
  if (b1 != b2) candidates[n++] = (a2 - a1) / (b1 - b2);
  if (b1 != -b2) candidates[n++] = -(a1 + a2) / (b1 + b2);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    double t = candidates[k];
    if (!(t >= -alpha && t <= alpha)) continue;
    best = std::min(best, std::max(std::abs(a1 + b1 * t), std::abs(a2 + b2 * t)));
  }
  return best;
}

/// min |DF v| / |v| over the unstable cone |v2| <= alpha |v1| (max norm).
inline double unstable_expansion(const Jacobian& d, double alpha) {
  return min_max_abs_affine(d.f1x, d.f1y, d.f2x, d.f2y, alpha);
}

/// min |DF^{-1} v| / |v| over the stable cone |v1| <= alpha |v2| (max norm).
inline double stable_expansion(const Jacobian& d, double alpha) {
  Jacobian inv = d.inverse();
  return min_max_abs_affine(inv.f1y, inv.f1x, inv.f2y, inv.f2x, alpha);
}

/// alpha minus the largest slope |w2/w1| of the images of the unstable cone's
/// boundary vectors; negative means DF(C^u) is not inside C^u.
inline double unstable_invariance_margin(const Jacobian& d, double alpha) {
  Point a = d.apply({1.0, alpha});
  Point b = d.apply({1.0, -alpha});
  if (a.x == 0.0 || b.x == 0.0 || (a.x > 0.0) != (b.x > 0.0))
    return -std::numeric_limits<double>::infinity();
  return alpha - std::max(std::abs(a.y / a.x), std::abs(b.y / b.x));
}

/// Same for DF^{-1} on the stable cone.
inline double stable_invariance_margin(const Jacobian& d, double alpha) {
  Jacobian inv = d.inverse();
  Point a = inv.apply({alpha, 1.0});
  Point b = inv.apply({-alpha, 1.0});
  if (a.y == 0.0 || b.y == 0.0 || (a.y > 0.0) != (b.y > 0.0))
    return -std::numeric_limits<double>::infinity();
  return alpha - std::max(std::abs(a.x / a.y), std::abs(b.x / b.y));
}

}  // namespace ghm::cones

#endif  // GHM_CONES_HPP

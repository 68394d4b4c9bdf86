#ifndef GHM_GEOMETRY_HPP
#define GHM_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <limits>

namespace ghm {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Closed interval [lo, hi]. An interval with lo > hi is empty.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static constexpr Interval empty_set() {
    return {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  }

  constexpr bool empty() const { return lo > hi; }
  constexpr double length() const { return empty() ? 0.0 : hi - lo; }
  constexpr double mid() const { return 0.5 * (lo + hi); }
  constexpr double radius() const { return 0.5 * length(); }
  constexpr bool contains(double v) const { return v >= lo && v <= hi; }
  constexpr bool contains(const Interval& o) const { return o.empty() || (o.lo >= lo && o.hi <= hi); }
  constexpr bool strictly_contains(const Interval& o) const { return lo < o.lo && o.hi < hi; }

  constexpr Interval intersect(const Interval& o) const {
    Interval r{std::max(lo, o.lo), std::min(hi, o.hi)};
    return r.empty() ? empty_set() : r;
  }
  constexpr Interval hull(const Interval& o) const {
    if (empty()) return o;
    if (o.empty()) return *this;
    return {std::min(lo, o.lo), std::max(hi, o.hi)};
  }
  /// Smallest distance between a point of this and a point of o.
  constexpr double gap(const Interval& o) const {
    if (lo > o.hi) return lo - o.hi;
    if (o.lo > hi) return o.lo - hi;
    return 0.0;
  }
  /// Largest distance between a point of this and a point of o.
  constexpr double max_gap(const Interval& o) const { return std::max(hi - o.lo, o.hi - lo); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Image of an interval under t -> offset + scale * t.
constexpr Interval affine_image(const Interval& t, double scale, double offset) {
  double a = offset + scale * t.lo;
  double b = offset + scale * t.hi;
  return a <= b ? Interval{a, b} : Interval{b, a};
}

/// Product of two intervals (interval arithmetic).
inline Interval product(const Interval& a, const Interval& b) {
  double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

inline Interval sum(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }

/// The four first partials of a planar map F = (F1, F2).
struct Jacobian {
  double f1x = 0.0, f1y = 0.0, f2x = 0.0, f2y = 0.0;

  constexpr double det() const { return f1x * f2y - f1y * f2x; }
  constexpr Point apply(Point v) const { return {f1x * v.x + f1y * v.y, f2x * v.x + f2y * v.y}; }
  Jacobian inverse() const {
    double d = det();
    return {f2y / d, -f1y / d, -f2x / d, f1x / d};
  }
};

/// The six second partials F_{jkl}, j in {1,2}, (k,l) in {xx, xy, yy}.
struct SecondPartials {
  double f1xx = 0.0, f1xy = 0.0, f1yy = 0.0;
  double f2xx = 0.0, f2xy = 0.0, f2yy = 0.0;

  double max_abs() const {
    return std::max({std::abs(f1xx), std::abs(f1xy), std::abs(f1yy), std::abs(f2xx),
                     std::abs(f2xy), std::abs(f2yy)});
  }
};

inline double max_norm(Point v) { return std::max(std::abs(v.x), std::abs(v.y)); }

}  // namespace ghm

#endif  // GHM_GEOMETRY_HPP

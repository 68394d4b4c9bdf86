#ifndef GHM_SPEC_HPP
#define GHM_SPEC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ghm/digest.hpp"
#include "ghm/errors.hpp"
#include "ghm/geometry.hpp"

namespace ghm {

enum class MapKind { skew_product, general };
enum class Direction { forward, inverse };

/// One branch of a polynomial skew product on the strip base x [0,1].
///
/// With u = (x - base.lo) / |base| the branch is
///   x -> u + bend * u * (1 - u)
///   y -> offset + offset_x * u + (slope + slope_x * u) * y + curvature * y^2
/// so the base map is a full branch onto [0,1] and the fiber map is monotone
/// in y wherever slope + slope_x * u + 2 * curvature * y > 0.
struct SkewBranch {
  Interval base{0.0, 1.0};
  double bend = 0.0;
  double offset = 0.0;
  double offset_x = 0.0;
  double slope = 1.0;
  double slope_x = 0.0;
  double curvature = 0.0;

  double width() const { return base.hi - base.lo; }
  double local(double x) const { return (x - base.lo) / width(); }

  double base_map(double x) const {
    double u = local(x);
    return u + bend * u * (1.0 - u);
  }
  double base_derivative(double x) const {
    double u = local(x);
    return (1.0 + bend * (1.0 - 2.0 * u)) / width();
  }
  double base_second(double) const { return -2.0 * bend / (width() * width()); }
  double base_inverse(double image_x) const {
    double u = image_x;
    if (bend != 0.0) {
      double p = 1.0 + bend;
      u = 2.0 * image_x / (p + std::sqrt(p * p - 4.0 * bend * image_x));
    }
    return base.lo + width() * u;
  }
  /// Derivative of the inverse base branch at an image point.
  double base_inverse_derivative(double image_x) const {
    return 1.0 / base_derivative(base_inverse(image_x));
  }

  double fiber(double x, double y) const {
    double u = local(x);
    return offset + offset_x * u + (slope + slope_x * u) * y + curvature * y * y;
  }
  double fiber_dx(double, double y) const { return (offset_x + slope_x * y) / width(); }
  double fiber_dy(double x, double y) const {
    return slope + slope_x * local(x) + 2.0 * curvature * y;
  }
  double fiber_dxy() const { return slope_x / width(); }
  double fiber_dyy() const { return 2.0 * curvature; }

  /// y with fiber(x, y) == target, on the increasing branch.
  double fiber_inverse(double x, double target) const {
    double u = local(x);
    double c0 = offset + offset_x * u - target;
    double c1 = slope + slope_x * u;
    if (curvature == 0.0) return -c0 / c1;
    double disc = c1 * c1 - 4.0 * curvature * c0;
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    return -2.0 * c0 / (c1 + std::sqrt(disc));
  }

  /// Image of a fiber interval (fiber maps are increasing in y on J).
  Interval fiber_image(double x, const Interval& ys) const {
    if (ys.empty()) return Interval::empty_set();
    return {fiber(x, ys.lo), fiber(x, ys.hi)};
  }
  /// Exact ranges of the first partials over a fiber interval (both are affine in y).
  Interval fiber_dx_range(double x, const Interval& ys) const {
    double a = fiber_dx(x, ys.lo), b = fiber_dx(x, ys.hi);
    return {std::min(a, b), std::max(a, b)};
  }
  Interval fiber_dy_range(double x, const Interval& ys) const {
    double a = fiber_dy(x, ys.lo), b = fiber_dy(x, ys.hi);
    return {std::min(a, b), std::max(a, b)};
  }

  Point forward(Point z) const { return {base_map(z.x), fiber(z.x, z.y)}; }
  Point inverse(Point z) const {
    double x = base_inverse(z.x);
    return {x, fiber_inverse(x, z.y)};
  }
  Jacobian jacobian(Point z) const {
    return {base_derivative(z.x), 0.0, fiber_dx(z.x, z.y), fiber_dy(z.x, z.y)};
  }
  SecondPartials hessian(Point z) const {
    return {base_second(z.x), 0.0, 0.0, 0.0, fiber_dxy(), fiber_dyy()};
  }
};

/// Full-height strip S_i. Boundaries are graphs y -> x.
struct Strip {
  Interval base;
  std::function<double(double)> left_boundary;
  std::function<double(double)> right_boundary;
  Interval extended_base;

  bool contains(Point z) const { return z.x >= left_boundary(z.y) && z.x <= right_boundary(z.y); }
};

/// Branch diffeomorphism F_i : S_i -> U_i with its derivatives.
struct BranchMap {
  std::function<Point(Point)> forward;
  /// Returns nullopt when the point is not in the extended image of the branch.
  std::function<std::optional<Point>(Point)> inverse;
  std::function<Jacobian(Point)> first_derivatives;
  std::function<SecondPartials(Point)> second_derivatives;
};

/// Per-axis affine change of coordinates: original = scale * native + shift.
struct Conjugation {
  Point scale{1.0, 1.0};
  Point shift{0.0, 0.0};

  Point to_original(Point z) const { return {scale.x * z.x + shift.x, scale.y * z.y + shift.y}; }
  Point from_original(Point z) const {
    return {(z.x - shift.x) / scale.x, (z.y - shift.y) / scale.y};
  }
  bool is_identity() const {
    return scale.x == 1.0 && scale.y == 1.0 && shift.x == 0.0 && shift.y == 0.0;
  }
};

/// A generalized horseshoe map on [0,1] x J. Immutable after construction.
class GhmSpec {
 public:
  using Parameters = std::vector<std::pair<std::string, double>>;

  /// General map with user-supplied strips and branches.
  GhmSpec(std::string family, std::vector<Strip> strips, std::vector<BranchMap> branches,
          double alpha, double k0, Interval fiber, MapKind kind, Parameters params = {},
          Conjugation conjugation = {})
      : family_(std::move(family)),
        strips_(std::move(strips)),
        branches_(std::move(branches)),
        alpha_(alpha),
        k0_(k0),
        fiber_(fiber),
        kind_(kind),
        params_(std::move(params)),
        conjugation_(conjugation) {
    check_common();
  }

  /// Skew product assembled from polynomial branches.
  static GhmSpec skew(std::string family, std::vector<SkewBranch> pieces, double alpha, double k0,
                      Interval fiber, Parameters params = {}, Conjugation conjugation = {}) {
    std::vector<Strip> strips;
    std::vector<BranchMap> maps;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const SkewBranch b = pieces[i];
      double lo = b.base.lo, hi = b.base.hi;
      strips.push_back({b.base, [lo](double) { return lo; }, [hi](double) { return hi; }, b.base});
      Interval J = fiber;
      maps.push_back(BranchMap{
          [b](Point z) { return b.forward(z); },
          [b, J](Point z) -> std::optional<Point> {
            if (z.x < 0.0 || z.x > 1.0) return std::nullopt;
            Point p = b.inverse(z);
            if (!std::isfinite(p.y) || !J.contains(p.y)) return std::nullopt;
            return p;
          },
          [b](Point z) { return b.jacobian(z); },
          [b](Point z) { return b.hessian(z); }});
    }
    GhmSpec spec(std::move(family), std::move(strips), std::move(maps), alpha, k0, fiber,
                 MapKind::skew_product, std::move(params), conjugation);
    spec.skew_ = std::move(pieces);
    spec.check_skew();
    return spec;
  }

  const std::string& family() const { return family_; }
  const std::vector<Strip>& strips() const { return strips_; }
  const std::vector<BranchMap>& branches() const { return branches_; }
  std::size_t strip_count() const { return strips_.size(); }
  double alpha() const { return alpha_; }
  double k0() const { return k0_; }
  /// Extended fiber J (strictly contains [0,1]).
  const Interval& fiber() const { return fiber_; }
  MapKind kind() const { return kind_; }
  bool is_skew() const { return kind_ == MapKind::skew_product && !skew_.empty(); }
  const Parameters& parameters() const { return params_; }
  const Conjugation& conjugation() const { return conjugation_; }

  const std::vector<SkewBranch>& skew_branches() const {
    if (!is_skew()) throw UnsupportedError("operation requires a skew-product map (family '" + family_ + "')");
    return skew_;
  }

  /// Index of the skew branch whose base interval contains x. Points on an
  /// interior boundary go to the right-hand strip.
  std::size_t locate_base(double x) const {
    const auto& sb = skew_branches();
    std::size_t lo = 0, hi = sb.size();
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (x >= sb[mid].base.lo)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  /// Content hash of the defining parameters.
  std::uint64_t hash() const {
    Fnv1a h;
    h.update(family_).update_value(alpha_).update_value(k0_).update_value(fiber_.lo).update_value(fiber_.hi);
    for (const auto& [k, v] : params_) h.update(k).update_value(v);
    for (const auto& b : skew_) {
      for (double v : {b.base.lo, b.base.hi, b.bend, b.offset, b.offset_x, b.slope, b.slope_x, b.curvature})
        h.update_value(v);
    }
    return h.value();
  }

 private:
  void check_common() const {
    if (strips_.empty()) throw ParameterError("a map needs at least one strip");
    if (strips_.size() != branches_.size())
      throw ParameterError("strip and branch counts differ");
    if (!(alpha_ > 0.0 && alpha_ < 1.0)) throw ParameterError("cone aperture alpha must lie in (0,1)");
    if (!(k0_ > 1.0)) throw ParameterError("expansion constant k0 must exceed 1");
    if (!(fiber_.lo < 0.0 && fiber_.hi > 1.0))
      throw ParameterError("extended fiber J must strictly contain [0,1]");
    constexpr double tol = 1e-12;
    if (std::abs(strips_.front().base.lo) > tol || std::abs(strips_.back().base.hi - 1.0) > tol)
      throw ParameterError("strip base intervals must cover [0,1]");
    for (std::size_t i = 0; i < strips_.size(); ++i) {
      if (!(strips_[i].base.lo < strips_[i].base.hi))
        throw ParameterError("strip " + std::to_string(i) + " has an empty base interval");
      if (i + 1 < strips_.size() && std::abs(strips_[i].base.hi - strips_[i + 1].base.lo) > tol)
        throw ParameterError("strips " + std::to_string(i) + " and " + std::to_string(i + 1) +
                             " overlap or leave a gap");
    }
  }

  void check_skew() const {
    constexpr int n = 33;
    for (std::size_t i = 0; i < skew_.size(); ++i) {
      const auto& b = skew_[i];
      for (int ix = 0; ix < n; ++ix) {
        double x = b.base.lo + b.width() * ix / (n - 1);
        for (int iy = 0; iy < n; ++iy) {
          double y = fiber_.lo + fiber_.length() * iy / (n - 1);
          if (!(b.fiber_dy(x, y) > 0.0))
            throw ParameterError("branch " + std::to_string(i) + " fiber map is not increasing on J");
          Point w = b.forward({x, y});
          if (w.x < -1e-12 || w.x > 1.0 + 1e-12 || w.y < fiber_.lo - 1e-12 || w.y > fiber_.hi + 1e-12)
            throw ParameterError("branch " + std::to_string(i) + " maps its strip outside [0,1] x J");
        }
        if (!(b.base_derivative(x) > 0.0))
          throw ParameterError("branch " + std::to_string(i) + " base map is not increasing");
      }
    }
  }

  std::string family_;
  std::vector<Strip> strips_;
  std::vector<BranchMap> branches_;
  double alpha_;
  double k0_;
  Interval fiber_;
  MapKind kind_;
  Parameters params_;
  Conjugation conjugation_;
  std::vector<SkewBranch> skew_;
};

namespace detail {

inline std::string point_text(Point z) {
  std::ostringstream os;
  os << '(' << z.x << ", " << z.y << ')';
  return os.str();
}

inline void check_strip_index(const GhmSpec& spec, std::size_t i) {
  if (i >= spec.strip_count())
    throw DomainError("strip index " + std::to_string(i) + " out of range (map has " +
                          std::to_string(spec.strip_count()) + " strips)",
                      i);
}

inline void check_in_strip(const GhmSpec& spec, std::size_t i, Point z) {
  check_strip_index(spec, i);
  const Strip& s = spec.strips()[i];
  if (!std::isfinite(z.x) || !std::isfinite(z.y) || !spec.fiber().contains(z.y) || !s.contains(z))
    throw DomainError("point " + point_text(z) + " lies outside strip " + std::to_string(i), i);
}

}  // namespace detail

/// F_i(z) (forward) or F_i^{-1}(z) (inverse), in native coordinates.
inline Point apply_branch(const GhmSpec& spec, std::size_t i, Point z, Direction dir) {
  if (dir == Direction::forward) {
    detail::check_in_strip(spec, i, z);
    return spec.branches()[i].forward(z);
  }
  detail::check_strip_index(spec, i);
  auto p = spec.branches()[i].inverse(z);
  if (!p)
    throw DomainError("point " + detail::point_text(z) + " lies outside the image of strip " +
                          std::to_string(i),
                      i);
  return *p;
}

/// apply_branch with the point given and returned in the map's original coordinates.
inline Point apply_branch_original(const GhmSpec& spec, std::size_t i, Point z, Direction dir) {
  const auto& c = spec.conjugation();
  return c.to_original(apply_branch(spec, i, c.from_original(z), dir));
}

inline Jacobian first_derivatives(const GhmSpec& spec, std::size_t i, Point z) {
  detail::check_in_strip(spec, i, z);
  return spec.branches()[i].first_derivatives(z);
}

inline SecondPartials second_derivatives(const GhmSpec& spec, std::size_t i, Point z) {
  detail::check_in_strip(spec, i, z);
  return spec.branches()[i].second_derivatives(z);
}

/// Order-selected derivative: 1 gives the four first partials, 2 the six second partials.
inline std::variant<Jacobian, SecondPartials> branch_derivative(const GhmSpec& spec, std::size_t i,
                                                                Point z, int order) {
  if (order == 1) return first_derivatives(spec, i, z);
  if (order == 2) return second_derivatives(spec, i, z);
  throw ParameterError("derivative order must be 1 or 2");
}

/// Jacobian determinant J_{F_i} = F_{i1x} F_{i2y} - F_{i1y} F_{i2x}.
inline double branch_jacobian_det(const GhmSpec& spec, std::size_t i, Point z) {
  return first_derivatives(spec, i, z).det();
}

}  // namespace ghm

#endif  // GHM_SPEC_HPP

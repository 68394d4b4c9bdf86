#ifndef GHM_INSTANCES_HPP
#define GHM_INSTANCES_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "ghm/cones.hpp"
#include "ghm/spec.hpp"

namespace ghm {

inline constexpr Interval default_fiber{-0.1, 1.1};

struct InstanceOptions {
  Interval fiber = default_fiber;
  double alpha = 0.5;
};

/// Generalized baker map, conjugated from [-1,1]^2 to [0,1]^2 by
/// original = 2 * native - 1 on both axes. Strip 0 is x < 1/2 (original x < 0),
/// strip 1 is x >= 1/2.
inline GhmSpec make_baker(double lambda, InstanceOptions opt = {}) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ParameterError("baker contraction lambda must lie in (0,1), got " + std::to_string(lambda));
  SkewBranch left;
  left.base = {0.0, 0.5};
  left.slope = lambda;
  SkewBranch right;
  right.base = {0.5, 1.0};
  right.offset = 1.0 - lambda;
  right.slope = lambda;
  double k0 = std::min(2.0, 1.0 / lambda);
  return GhmSpec::skew("baker", {left, right}, opt.alpha, k0, opt.fiber, {{"lambda", lambda}},
                       Conjugation{{2.0, 2.0}, {-1.0, -1.0}});
}

/// Two-strip piecewise affine skew product on I_1 = [0,1/2], I_2 = [1/2,1]:
///   strip 0: y -> (a + 2x(b - a)) y + (1 - a) 2x (a - b)
///   strip 1: y -> (a + (2x - 1)(b - a)) y
/// with base map the doubling map.
inline GhmSpec make_affine_example(double a, double b, InstanceOptions opt = {}) {
  if (!(0.5 < b && b < a && a < 1.0))
    throw ParameterError("affine example needs 1/2 < b < a < 1");
  SkewBranch left;
  left.base = {0.0, 0.5};
  left.offset_x = (1.0 - a) * (a - b);
  left.slope = a;
  left.slope_x = b - a;
  SkewBranch right;
  right.base = {0.5, 1.0};
  right.slope = a;
  right.slope_x = b - a;

  const Interval& J = opt.fiber;
  double reach = std::max({std::abs(J.lo), std::abs(J.hi), std::abs(1.0 - a - J.lo), std::abs(1.0 - a - J.hi)});
  double fx_max = 2.0 * (a - b) * reach;
  // Stable vectors (t,1) map to (t/2, (1 - F_2x t / 2) / slope); slope <= a.
  double k0 = std::min(2.0, (1.0 - opt.alpha * fx_max / 2.0) / a);
  if (!(k0 > 1.0))
    throw ParameterError("affine example has no uniform expansion with alpha = " + std::to_string(opt.alpha));
  return GhmSpec::skew("affine_example", {left, right}, opt.alpha, k0, opt.fiber, {{"a", a}, {"b", b}});
}

/// Smallest cone expansion (unstable under DF, stable under DF^{-1}) over a lattice.
inline double estimate_expansion(const std::vector<SkewBranch>& branches, Interval fiber, double alpha,
                                 int grid = 65) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& b : branches) {
    for (int ix = 0; ix < grid; ++ix) {
      double x = b.base.lo + b.width() * ix / (grid - 1);
      for (int iy = 0; iy < grid; ++iy) {
        double y = fiber.lo + fiber.length() * iy / (grid - 1);
        Jacobian d = b.jacobian({x, y});
        worst = std::min({worst, cones::unstable_expansion(d, alpha), cones::stable_expansion(d, alpha)});
      }
    }
  }
  return worst;
}

/// Skew product from explicit branches; k0 is estimated on a lattice when absent.
inline GhmSpec make_custom_skew(std::vector<SkewBranch> branches, double alpha,
                                std::optional<double> k0 = std::nullopt,
                                Interval fiber = default_fiber) {
  if (branches.empty()) throw ParameterError("custom skew product needs at least one branch");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("cone aperture alpha must lie in (0,1)");
  double k = k0 ? *k0 : estimate_expansion(branches, fiber, alpha);
  if (!(k > 1.0))
    throw ParameterError("custom skew product: estimated expansion " + std::to_string(k) +
                         " <= 1; pass k0 explicitly to validate anyway");
  GhmSpec::Parameters params;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto& b = branches[i];
    std::string p = "b" + std::to_string(i) + ".";
    for (auto [name, v] : {std::pair<const char*, double>{"lo", b.base.lo}, {"hi", b.base.hi}, {"bend", b.bend},
                           {"offset", b.offset}, {"offset_x", b.offset_x}, {"slope", b.slope},
                           {"slope_x", b.slope_x}, {"curvature", b.curvature}})
      params.emplace_back(p + name, v);
  }
  return GhmSpec::skew("custom_skew", std::move(branches), alpha, k, fiber, std::move(params));
}

/// A possibly infinite strip family described by the infimum of each strip's
/// fiber contraction, strip indices 0, 1, 2, ...
struct StripFamilyGenerator {
  std::function<double(std::size_t)> inf_contraction;
  std::optional<std::size_t> size;
};

inline StripFamilyGenerator strip_generator(const GhmSpec& spec, int grid = 65) {
  std::vector<double> inf;
  for (const auto& b : spec.skew_branches()) {
    double m = std::numeric_limits<double>::infinity();
    for (int ix = 0; ix < grid; ++ix) {
      double x = b.base.lo + b.width() * ix / (grid - 1);
      for (int iy = 0; iy < grid; ++iy) {
        double y = spec.fiber().lo + spec.fiber().length() * iy / (grid - 1);
        m = std::min(m, b.fiber_dy(x, y));
      }
    }
    inf.push_back(m);
  }
  std::size_t n = inf.size();
  return {[inf = std::move(inf)](std::size_t i) { return inf.at(i); }, n};
}

}  // namespace ghm

#endif  // GHM_INSTANCES_HPP

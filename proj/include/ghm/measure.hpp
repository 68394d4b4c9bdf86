#ifndef GHM_MEASURE_HPP
#define GHM_MEASURE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "ghm/binary_io.hpp"
#include "ghm/parallel.hpp"
#include "ghm/symbolic.hpp"

namespace ghm {

// ---------------------------------------------------------------------------
// Factor map

/// Returned instead of a value when x sits on an interior strip boundary.
struct BoundarySignal {
  double x = 0.0;
  std::size_t left_strip = 0;
  std::size_t right_strip = 0;
  double left_value = 0.0;   // limit from the left strip (1 for full branches)
  double right_value = 0.0;  // value of the right strip (0 for full branches)
};

using FactorValue = std::variant<double, BoundarySignal>;

/// g(x) = p^s(F(x, 0)); for skew products this is the base map of the strip containing x.
inline FactorValue factor_map_eval(const GhmSpec& spec, double x) {
  const auto& sb = spec.skew_branches();
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("base point " + std::to_string(x) + " outside [0,1]", 0);
  std::size_t i = spec.locate_base(x);
  if (i > 0 && x == sb[i].base.lo)
    return BoundarySignal{x, i - 1, i, sb[i - 1].base_map(x), sb[i].base_map(x)};
  return sb[i].base_map(x);
}

inline bool is_boundary(const FactorValue& v) { return std::holds_alternative<BoundarySignal>(v); }

/// Piecewise monotone interval map given by branches on subintervals of [0,1].
struct PiecewiseMap1D {
  struct Branch {
    Interval domain;
    std::function<double(double)> map;
    std::function<double(double)> inverse;  // defined on the image of the domain
  };
  std::vector<Branch> branches;

  static PiecewiseMap1D from_spec(const GhmSpec& spec) {
    PiecewiseMap1D m;
    for (const auto& b : spec.skew_branches())
      m.branches.push_back({b.base, [b](double x) { return b.base_map(x); }, [b](double y) { return b.base_inverse(y); }});
    return m;
  }

  double operator()(double x) const {
    for (std::size_t i = branches.size(); i-- > 0;)
      if (x >= branches[i].domain.lo && x <= branches[i].domain.hi) return branches[i].map(x);
    throw DomainError("point " + std::to_string(x) + " outside every branch domain", 0);
  }
};

// ---------------------------------------------------------------------------
// Ulam discretization

/// Binned invariant density of the factor map.
struct Density1D {
  std::size_t bins = 0;
  std::vector<double> masses;
  double l_bound = 0.0;
  double L_bound = 0.0;
  std::size_t sweeps = 0;
  double residual = 0.0;

  double density(std::size_t j) const { return masses[j] * static_cast<double>(bins); }

  /// Inverse CDF: maps u in [0,1) to a point of [0,1].
  /// Callers sampling from several threads must call prepare() first.
  double sample(double u) const {
    prepare();
    double target = u * cdf_.back();
    std::size_t j = static_cast<std::size_t>(std::upper_bound(cdf_.begin() + 1, cdf_.end(), target) - (cdf_.begin() + 1));
    if (j >= bins) j = bins - 1;
    while (masses[j] <= 0.0 && j > 0) --j;
    double frac = masses[j] > 0.0 ? (target - cdf_[j]) / masses[j] : 0.0;
    frac = std::clamp(frac, 0.0, 1.0);
    return (static_cast<double>(j) + frac) / static_cast<double>(bins);
  }

  /// mu_g-mass of [a, b] under the piecewise-constant density.
  double mass(double a, double b) const {
    a = std::clamp(a, 0.0, 1.0);
    b = std::clamp(b, 0.0, 1.0);
    if (b <= a) return 0.0;
    double n = static_cast<double>(bins);
    std::size_t ja = std::min(bins - 1, static_cast<std::size_t>(a * n));
    std::size_t jb = std::min(bins - 1, static_cast<std::size_t>(b * n));
    CompensatedSum s;
    for (std::size_t j = ja; j <= jb; ++j) {
      double lo = std::max(a, static_cast<double>(j) / n), hi = std::min(b, static_cast<double>(j + 1) / n);
      if (hi > lo) s.add(masses[j] * (hi - lo) * n);
    }
    return s.value();
  }

  void prepare() const {
    if (cdf_.size() == bins + 1) return;
    cdf_.assign(bins + 1, 0.0);
    CompensatedSum s;
    for (std::size_t j = 0; j < bins; ++j) {
      s.add(masses[j]);
      cdf_[j + 1] = s.value();
    }
  }

 private:
  mutable std::vector<double> cdf_;
};

inline constexpr std::size_t ulam_sweep_cap = 100'000;

/// Ulam transition matrix as per-row sparse lists: row j holds (k, fraction
/// of cell j mapped into cell k).
inline std::vector<std::vector<std::pair<std::size_t, double>>> ulam_matrix(const PiecewiseMap1D& g, std::size_t bins) {
  const double n = static_cast<double>(bins);
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(bins);
  for (std::size_t j = 0; j < bins; ++j) {
    Interval cell{static_cast<double>(j) / n, static_cast<double>(j + 1) / n};
    for (const auto& br : g.branches) {
      Interval piece = cell.intersect(br.domain);
      if (piece.empty() || piece.length() <= 0.0) continue;
      double a = br.map(piece.lo), b = br.map(piece.hi);
      Interval img{std::min(a, b), std::max(a, b)};
      std::size_t k0 = static_cast<std::size_t>(std::clamp(std::floor(img.lo * n), 0.0, n - 1));
      std::size_t k1 = static_cast<std::size_t>(std::clamp(std::ceil(img.hi * n) - 1.0, 0.0, n - 1));
      for (std::size_t k = k0; k <= k1; ++k) {
        Interval target = Interval{static_cast<double>(k) / n, static_cast<double>(k + 1) / n}.intersect(img);
        if (target.empty() || target.length() <= 0.0) continue;
        double p = br.inverse(target.lo), q = br.inverse(target.hi);
        double frac = std::abs(q - p) * n;
        if (frac > 0.0) rows[j].emplace_back(k, frac);
      }
    }
    // Normalize away rounding so each row is stochastic.
    double total = 0.0;
    for (auto& [k, f] : rows[j]) total += f;
    if (total > 0.0)
      for (auto& [k, f] : rows[j]) f /= total;
  }
  return rows;
}

/// Stationary vector of the Ulam matrix by power iteration from the uniform
/// vector; residual is the total-variation change per sweep.
inline Density1D ulam_acip(const PiecewiseMap1D& g, std::size_t bins, double tol, std::size_t max_sweeps = ulam_sweep_cap) {
  if (bins < 16 || (bins & (bins - 1)) != 0) throw ParameterError("Ulam bin count must be a power of 2 >= 16");
  if (!(tol > 0.0)) throw ParameterError("Ulam tolerance must be positive (a zero residual is unreachable)");
  auto rows = ulam_matrix(g, bins);
  std::vector<double> v(bins, 1.0 / static_cast<double>(bins)), next(bins);
  std::vector<double> history;
  Density1D d;
  d.bins = bins;
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t j = 0; j < bins; ++j)
      for (auto [k, f] : rows[j]) next[k] += v[j] * f;
    double total = compensated_total(next);
    for (double& x : next) x /= total;
    double tv = 0.0;
    for (std::size_t j = 0; j < bins; ++j) tv += std::abs(next[j] - v[j]);
    tv *= 0.5;
    v.swap(next);
    if (history.size() < 1000 || sweep % 100 == 0) history.push_back(tv);
    if (tv <= tol) {
      d.masses = v;
      d.sweeps = sweep;
      d.residual = tv;
      break;
    }
  }
  if (d.masses.empty())
    throw ConvergenceError("Ulam power iteration did not reach tolerance " + std::to_string(tol) + " within " +
                               std::to_string(max_sweeps) + " sweeps (last residual " + std::to_string(history.back()) + ")",
                           history);
  double total = compensated_total(d.masses);
  for (double& m : d.masses) m /= total;
  auto [mn, mx] = std::minmax_element(d.masses.begin(), d.masses.end());
  d.l_bound = *mn * static_cast<double>(bins);
  d.L_bound = *mx * static_cast<double>(bins);
  return d;
}

inline Density1D ulam_acip(const GhmSpec& spec, std::size_t bins, double tol) {
  return ulam_acip(PiecewiseMap1D::from_spec(spec), bins, tol);
}

/// d/dx g^n on I_[A] at x (product of base derivatives along the forward orbit).
inline double cylinder_map_derivative(const GhmSpec& spec, const Word& w, double x) {
  check_word(spec, w);
  const auto& sb = spec.skew_branches();
  double d = 1.0;
  for (Symbol s : w) {
    d *= sb[s].base_derivative(x);
    x = sb[s].base_map(x);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Lifting

struct SrbOptions {
  std::size_t fiber_bins = 256;
  std::size_t y_bins = 8192;
  unsigned workers = 1;
  std::size_t block_size = 1 << 16;
  bool keep_samples = true;
  double max_discard_fraction = 0.01;
};

/// Sample cloud of the lifted measure with per-x-bin conditional histograms over J.
struct SrbEstimate {
  std::uint64_t map_hash = 0;
  std::uint64_t seed = 0;
  std::vector<Point> samples;  // native coordinates, equal weights
  double weight = 0.0;
  std::size_t iterations_used = 0;
  double contraction_bound = 0.0;  // M^n |J|
  std::size_t fiber_bins = 0;
  std::size_t y_bins = 0;
  Interval fiber;
  double fiber_scale = 1.0;  // original fiber length per native unit
  std::vector<std::uint64_t> counts;       // fiber_bins x y_bins, row-major
  std::vector<std::uint64_t> bin_counts;   // samples per x-bin
  std::vector<double> bin_mass;            // mu_g mass of each x-bin
  std::uint64_t requested = 0;
  std::uint64_t kept = 0;
  std::uint64_t discarded = 0;
  std::uint64_t jittered = 0;

  double y_bin_width() const { return fiber.length() / static_cast<double>(y_bins); }

  /// Conditional probability vector mu_x of an x-bin.
  std::vector<double> conditional(std::size_t x_bin) const {
    if (x_bin >= fiber_bins) throw ParameterError("x-bin index out of range");
    std::vector<double> p(y_bins, 0.0);
    if (bin_counts[x_bin] == 0) return p;
    double inv = 1.0 / static_cast<double>(bin_counts[x_bin]);
    for (std::size_t j = 0; j < y_bins; ++j) p[j] = static_cast<double>(counts[x_bin * y_bins + j]) * inv;
    return p;
  }
};

/// Smallest n with M^n |J| below the requested fiber resolution.
inline std::size_t suggested_iterations(const GhmSpec& spec, double resolution) {
  double m = max_fiber_contraction(spec);
  if (!(m < 1.0)) throw ParameterError("fiber maps do not contract");
  double n = std::ceil(std::log(resolution / spec.fiber().length()) / std::log(m));
  return static_cast<std::size_t>(std::max(1.0, n));
}

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline void build_histograms(const GhmSpec& spec, const Density1D& density, SrbEstimate& est) {
  est.counts.assign(est.fiber_bins * est.y_bins, 0);
  est.bin_counts.assign(est.fiber_bins, 0);
  const double fb = static_cast<double>(est.fiber_bins), h = est.y_bin_width();
  for (const Point& z : est.samples) {
    auto b = static_cast<std::size_t>(std::clamp(std::floor(z.x * fb), 0.0, fb - 1.0));
    auto j = static_cast<std::size_t>(std::clamp(std::floor((z.y - est.fiber.lo) / h), 0.0, static_cast<double>(est.y_bins - 1)));
    ++est.counts[b * est.y_bins + j];
    ++est.bin_counts[b];
  }
  est.bin_mass.resize(est.fiber_bins);
  for (std::size_t b = 0; b < est.fiber_bins; ++b)
    est.bin_mass[b] = density.mass(static_cast<double>(b) / fb, static_cast<double>(b + 1) / fb);
  (void)spec;
}

}  // namespace detail

/// Draws x ~ mu_g, pushes (x, 0) forward n_iter times and records the endpoints.
/// Blocks of samples use independent seeded streams and results are stored
/// per sample index, so the estimate does not depend on the worker count.
inline SrbEstimate lift_srb(const GhmSpec& spec, const Density1D& density, std::size_t n_iter, std::size_t n_samples,
                            std::uint64_t seed, SrbOptions opt = {}) {
  if (n_iter < 1) throw ParameterError("lift needs at least one iteration");
  if (n_samples < 1) throw ParameterError("lift needs at least one sample");
  if (opt.fiber_bins < 1 || opt.y_bins < 1) throw ParameterError("histogram bin counts must be positive");
  const auto& sb = spec.skew_branches();
  const Interval J = spec.fiber();
  std::vector<double> interior;
  for (std::size_t i = 1; i < sb.size(); ++i) interior.push_back(sb[i].base.lo);

  density.prepare();
  std::vector<Point> pts(n_samples);
  std::vector<unsigned char> ok(n_samples, 0), jit(n_samples, 0);
  std::size_t blocks = (n_samples + opt.block_size - 1) / opt.block_size;
  parallel_for(blocks, opt.workers, [&](std::size_t blk) {
    std::mt19937_64 rng(stream_seed(seed, blk));
    std::size_t lo = blk * opt.block_size, hi = std::min(n_samples, lo + opt.block_size);
    for (std::size_t s = lo; s < hi; ++s) {
      double x = density.sample(detail::unit_uniform(rng));
      for (double b : interior)
        if (std::abs(x - b) < 1e-12) {
          x = b + 1e-12;
          jit[s] = 1;
        }
      Point z{x, 0.0};
      bool good = true;
      for (std::size_t n = 0; n < n_iter; ++n) {
        z = sb[spec.locate_base(z.x)].forward(z);
        if (!(z.x >= 0.0 && z.x <= 1.0 && z.y >= J.lo && z.y <= J.hi)) {
          good = false;
          break;
        }
      }
      pts[s] = z;
      ok[s] = good;
    }
  });

  SrbEstimate est;
  est.map_hash = spec.hash();
  est.seed = seed;
  est.iterations_used = n_iter;
  est.contraction_bound = std::pow(max_fiber_contraction(spec), static_cast<double>(n_iter)) * J.length();
  est.fiber_bins = opt.fiber_bins;
  est.y_bins = opt.y_bins;
  est.fiber = J;
  est.fiber_scale = spec.conjugation().scale.y;
  est.requested = n_samples;
  est.samples.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    est.jittered += jit[s];
    if (ok[s])
      est.samples.push_back(pts[s]);
    else
      ++est.discarded;
  }
  est.kept = est.samples.size();
  if (static_cast<double>(est.discarded) > opt.max_discard_fraction * static_cast<double>(n_samples) || est.kept == 0)
    throw Error("lift discarded " + std::to_string(est.discarded) + " of " + std::to_string(n_samples) +
                " orbits (limit " + std::to_string(opt.max_discard_fraction * 100.0) + "%)");
  est.weight = 1.0 / static_cast<double>(est.kept);
  detail::build_histograms(spec, density, est);
  if (!opt.keep_samples) {
    est.samples.clear();
    est.samples.shrink_to_fit();
  }
  return est;
}

/// Pushes every stored sample `steps` more times under F and rebuilds the histograms.
inline SrbEstimate advance_srb(const GhmSpec& spec, const Density1D& density, const SrbEstimate& srb, std::size_t steps) {
  const auto& sb = spec.skew_branches();
  SrbEstimate out = srb;
  out.samples.clear();
  for (Point z : srb.samples) {
    for (std::size_t n = 0; n < steps; ++n) z = sb[spec.locate_base(z.x)].forward(z);
    if (z.x >= 0.0 && z.x <= 1.0 && out.fiber.contains(z.y)) out.samples.push_back(z);
  }
  out.iterations_used += steps;
  out.kept = out.samples.size();
  out.discarded = srb.kept - out.kept;
  out.weight = 1.0 / static_cast<double>(out.kept);
  detail::build_histograms(spec, density, out);
  return out;
}

// ---------------------------------------------------------------------------
// Fiber L2 norms and the criterion

/// int (mu(B_r(z)))^2 dz for a histogram measure on [lo, hi] with uniform mass
/// inside each cell. With F the (piecewise linear) CDF, G(z) = F(z+r) - F(z-r)
/// is piecewise linear with knots at edge -/+ r, so the integral of G^2 is exact
/// piece by piece.
inline double histogram_l2_norm(const std::vector<double>& probs, double lo, double hi, double r) {
  const std::size_t n = probs.size();
  if (n == 0) throw ParameterError("empty histogram");
  const double h = (hi - lo) / static_cast<double>(n);
  if (!(r > 0.0) || r < h)
    throw ResolutionError("radius " + std::to_string(r) + " is below the histogram resolution " + std::to_string(h));
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) cum[j + 1] = cum[j] + probs[j];
  auto F = [&](double z) {
    double t = (z - lo) / h;
    if (t <= 0.0) return 0.0;
    if (t >= static_cast<double>(n)) return cum[n];
    auto k = static_cast<std::size_t>(t);
    return cum[k] + probs[k] * (t - static_cast<double>(k));
  };
  auto G = [&](double z) { return F(z + r) - F(z - r); };
  // Merge the two knot sequences lo + j h - r and lo + j h + r.
  std::vector<double> knots;
  knots.reserve(2 * n + 2);
  std::size_t i = 0, j = 0;
  while (i <= n || j <= n) {
    double a = i <= n ? lo + static_cast<double>(i) * h - r : std::numeric_limits<double>::infinity();
    double b = j <= n ? lo + static_cast<double>(j) * h + r : std::numeric_limits<double>::infinity();
    if (a <= b) {
      knots.push_back(a);
      ++i;
    } else {
      knots.push_back(b);
      ++j;
    }
  }
  CompensatedSum s;
  double g1 = G(knots[0]);
  for (std::size_t k = 1; k < knots.size(); ++k) {
    double dz = knots[k] - knots[k - 1];
    double g2 = G(knots[k]);
    if (dz > 0.0 && (g1 != 0.0 || g2 != 0.0)) s.add(dz * (g1 * g1 + g1 * g2 + g2 * g2) / 3.0);
    g1 = g2;
  }
  return s.value();
}

/// ||mu_x||_r^2 for one x-bin, r in native fiber units.
inline double fiber_l2_norm(const SrbEstimate& srb, std::size_t x_bin, double r) {
  if (x_bin >= srb.fiber_bins) throw ParameterError("x-bin index out of range");
  if (srb.bin_counts[x_bin] == 0) throw ParameterError("x-bin " + std::to_string(x_bin) + " holds no samples");
  return histogram_l2_norm(srb.conditional(x_bin), srb.fiber.lo, srb.fiber.hi, r);
}

enum class CriterionVerdict { bounded, diverging, undetermined };

inline std::string verdict_name(CriterionVerdict v) {
  switch (v) {
    case CriterionVerdict::bounded: return "bounded";
    case CriterionVerdict::diverging: return "diverging";
    default: return "undetermined";
  }
}

struct CriterionTable {
  std::vector<double> r_values;                  // in original fiber units
  std::vector<double> i_of_r;
  std::vector<std::vector<double>> fiber_norms;  // [r][x-bin], original units
  double loglog_slope = 0.0;
  double window_ratio = 1.5;
  double tail_ratio = 0.0;  // max/min of I over the three smallest r
  CriterionVerdict verdict = CriterionVerdict::undetermined;
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// I(r) = r^-2 sum_bins ||mu_x||_r^2 * mass(bin), r in original fiber units
/// (fiber_scale converts; defaults to the estimate's own). Verdict: "bounded"
/// if the three smallest r stay within window_ratio (the liminf only sees small
/// r), else "diverging" if the log-log slope is <= -0.2, else "undetermined".
inline CriterionTable tsujii_criterion(const SrbEstimate& srb, const std::vector<double>& r_list, double window_ratio = 1.5,
                                       std::optional<double> fiber_scale = std::nullopt, unsigned workers = 1) {
  if (r_list.empty()) throw ParameterError("criterion needs at least one radius");
  for (std::size_t k = 0; k < r_list.size(); ++k) {
    if (!(r_list[k] > 0.0)) throw ParameterError("radii must be positive");
    if (k > 0 && !(r_list[k] < r_list[k - 1])) throw ParameterError("radii must be strictly decreasing");
  }
  const double scale = fiber_scale.value_or(srb.fiber_scale);
  CriterionTable t;
  t.r_values = r_list;
  t.window_ratio = window_ratio;
  double mass_total = 0.0;
  for (std::size_t b = 0; b < srb.fiber_bins; ++b)
    if (srb.bin_counts[b] > 0) mass_total += srb.bin_mass[b];
  for (double r : r_list) {
    std::vector<double> norms(srb.fiber_bins, 0.0);
    parallel_for(srb.fiber_bins, workers, [&](std::size_t b) {
      if (srb.bin_counts[b] > 0) norms[b] = scale * fiber_l2_norm(srb, b, r / scale);
    });
    CompensatedSum s;
    for (std::size_t b = 0; b < srb.fiber_bins; ++b)
      if (srb.bin_counts[b] > 0) s.add(norms[b] * srb.bin_mass[b] / mass_total);
    t.i_of_r.push_back(s.value() / (r * r));
    t.fiber_norms.push_back(std::move(norms));
  }
  t.loglog_slope = loglog_slope(t.r_values, t.i_of_r);
  std::size_t k = std::min<std::size_t>(3, t.i_of_r.size());
  auto tail_begin = t.i_of_r.end() - static_cast<std::ptrdiff_t>(k);
  auto [mn, mx] = std::minmax_element(tail_begin, t.i_of_r.end());
  t.tail_ratio = *mx / *mn;
  if (t.tail_ratio < window_ratio)
    t.verdict = CriterionVerdict::bounded;
  else if (t.loglog_slope <= -0.2)
    t.verdict = CriterionVerdict::diverging;
  else
    t.verdict = CriterionVerdict::undetermined;
  return t;
}

/// Normalized 2-D histogram of the samples over [0,1] x y_range (default [0,1]).
struct Grid2D {
  std::size_t nx = 0, ny = 0;
  Interval x_range{0.0, 1.0}, y_range{0.0, 1.0};
  std::vector<double> cells;  // row-major in x
  std::uint64_t counted = 0;
  double at(std::size_t i, std::size_t j) const { return cells[i * ny + j]; }
};

inline Grid2D density_grid(const SrbEstimate& srb, std::size_t nx, std::size_t ny, Interval y_range = {0.0, 1.0}) {
  if (nx < 1 || ny < 1) throw ParameterError("density grid needs nx, ny >= 1");
  if (srb.samples.empty()) throw ParameterError("estimate holds no samples");
  Grid2D g;
  g.nx = nx;
  g.ny = ny;
  g.y_range = y_range;
  std::vector<std::uint64_t> c(nx * ny, 0);
  const double fx = static_cast<double>(nx), fy = static_cast<double>(ny);
  for (const Point& z : srb.samples) {
    if (z.x < 0.0 || z.x > 1.0 || !y_range.contains(z.y)) continue;
    auto i = static_cast<std::size_t>(std::min(fx - 1.0, std::floor(z.x * fx)));
    auto j = static_cast<std::size_t>(std::min(fy - 1.0, std::floor((z.y - y_range.lo) / y_range.length() * fy)));
    ++c[i * ny + j];
    ++g.counted;
  }
  g.cells.resize(nx * ny);
  for (std::size_t k = 0; k < c.size(); ++k)
    g.cells[k] = g.counted ? static_cast<double>(c[k]) / static_cast<double>(g.counted) : 0.0;
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoint

inline constexpr std::string_view srb_magic = "GHMSRB01";
inline constexpr std::uint32_t srb_format_version = 1;

inline void save_srb(const std::string& path, const SrbEstimate& e) {
  io::Writer w;
  w.put(e.map_hash);
  w.put(e.seed);
  w.put(static_cast<std::uint64_t>(e.iterations_used));
  w.put(e.contraction_bound);
  w.put(static_cast<std::uint64_t>(e.fiber_bins));
  w.put(static_cast<std::uint64_t>(e.y_bins));
  w.put(e.fiber.lo);
  w.put(e.fiber.hi);
  w.put(e.fiber_scale);
  w.put(e.requested);
  w.put(e.kept);
  w.put(e.discarded);
  w.put(e.jittered);
  for (auto c : e.counts) w.put(c);
  for (auto c : e.bin_counts) w.put(c);
  for (double m : e.bin_mass) w.put(m);
  w.put(static_cast<std::uint64_t>(e.samples.size()));
  for (const Point& z : e.samples) {
    w.put(z.x);
    w.put(z.y);
  }
  io::write_file(path, srb_magic, srb_format_version, w.bytes());
}

inline SrbEstimate load_srb(const std::string& path, std::optional<std::uint64_t> expected_hash = std::nullopt) {
  std::string payload = io::read_file(path, srb_magic, srb_format_version, "re-run the lift stage to regenerate the checkpoint");
  io::Reader r(payload);
  SrbEstimate e;
  e.map_hash = r.get<std::uint64_t>();
  if (expected_hash && *expected_hash != e.map_hash) throw CacheError("SRB checkpoint '" + path + "' belongs to a different map");
  e.seed = r.get<std::uint64_t>();
  e.iterations_used = r.get<std::uint64_t>();
  e.contraction_bound = r.get<double>();
  e.fiber_bins = r.get<std::uint64_t>();
  e.y_bins = r.get<std::uint64_t>();
  e.fiber.lo = r.get<double>();
  e.fiber.hi = r.get<double>();
  e.fiber_scale = r.get<double>();
  e.requested = r.get<std::uint64_t>();
  e.kept = r.get<std::uint64_t>();
  e.discarded = r.get<std::uint64_t>();
  e.jittered = r.get<std::uint64_t>();
  e.counts.resize(e.fiber_bins * e.y_bins);
  for (auto& c : e.counts) c = r.get<std::uint64_t>();
  e.bin_counts.resize(e.fiber_bins);
  for (auto& c : e.bin_counts) c = r.get<std::uint64_t>();
  e.bin_mass.resize(e.fiber_bins);
  for (auto& m : e.bin_mass) m = r.get<double>();
  auto n = r.get<std::uint64_t>();
  e.samples.resize(n);
  for (auto& z : e.samples) {
    z.x = r.get<double>();
    z.y = r.get<double>();
  }
  if (!r.done()) throw CacheError("SRB checkpoint '" + path + "' has trailing bytes");
  e.weight = e.kept ? 1.0 / static_cast<double>(e.kept) : 0.0;
  return e;
}

}  // namespace ghm

#endif  // GHM_MEASURE_HPP

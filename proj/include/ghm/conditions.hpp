#ifndef GHM_CONDITIONS_HPP
#define GHM_CONDITIONS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <random>
#include <unordered_map>
#include <unordered_set>
#include <string>
#include <vector>

#include "ghm/measure.hpp"
#include "ghm/symbolic.hpp"

namespace ghm {

// ---------------------------------------------------------------------------
// Fatness

struct FatnessFit {
  double k1 = 0.0;
  double epsilon = 0.0;
  bool pass = false;
  double per_word_slack = 0.0;  // min over words of log(K1 d^(1+eps)) - log|I|
  std::size_t words_used = 0;
  std::size_t depth_used = 0;
  std::size_t anchor_depth = 0;
  bool partial = false;  // word budget hit before depth_max
};

struct FatnessOptions {
  std::size_t x_grid_n = 257;
  std::size_t max_words = 4'000'000;
  double epsilon_max = 20.0;
  double epsilon_tol = 1e-9;  // fits below this are rounding, not fatness
  unsigned workers = 1;
};

/// Fits |I| <= K1 d^(1+eps) over all words of length <= depth_max.
///
/// K1 alone can absorb any finite word set, so eps is fixed by growth: with
/// p = -log|I|, q = -log d and anchor depth h = max(1, depth_max / 2), eps is
/// the largest value for which
///   min_{h < |w| <= D} (p_w - (1+eps) q_w) >= min_{|v| = h} (p_v - (1+eps) q_v),
/// i.e. no deeper word is tighter than the tightest anchor word. K1 then makes
/// the tightest word over all depths exactly tight.
inline FatnessFit fatness_fit(const GhmSpec& spec, std::size_t depth_max, FatnessOptions opt = {}) {
  if (depth_max < 2) throw ParameterError("fatness fit needs depth_max >= 2");
  FatnessFit fit;
  std::size_t n = spec.strip_count();
  std::size_t depth = depth_max;
  // Word count grows like n^depth; shrink depth to respect the budget.
  auto count = [&](std::size_t d) {
    double c = 0, p = 1;
    for (std::size_t k = 1; k <= d; ++k) c += (p *= static_cast<double>(n));
    return c;
  };
  while (depth > 2 && count(depth) > static_cast<double>(opt.max_words)) --depth;
  fit.partial = depth < depth_max;
  fit.depth_used = depth;
  EnumerationOptions eo;
  eo.x_grid_n = opt.x_grid_n;
  eo.workers = opt.workers;
  auto words = words_to_depth(spec, depth, eo);
  fit.words_used = words.size();
  std::size_t h = std::max<std::size_t>(1, depth / 2);
  fit.anchor_depth = h;

  std::vector<std::pair<double, double>> deep, anchor, all;
  for (const auto& c : words) {
    double p = -std::log(c.base.length()), q = -std::log(c.diameter);
    all.emplace_back(p, q);
    if (c.word.size() == h) anchor.emplace_back(p, q);
    if (c.word.size() > h) deep.emplace_back(p, q);
  }
  auto f = [&](double eps) {
    double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
    for (auto [p, q] : deep) lo = std::min(lo, p - (1.0 + eps) * q);
    for (auto [p, q] : anchor) hi = std::max(hi, (1.0 + eps) * q - p);
    return lo + hi;
  };
  if (!(f(0.0) >= 0.0)) {
    fit.pass = false;
    fit.epsilon = 0.0;
  } else {
    // Largest feasible eps: coarse scan, then bisection past the last feasible point.
    const int steps = 2000;
    const double step = opt.epsilon_max / steps;
    double last_ok = 0.0;
    for (int k = 1; k <= steps; ++k)
      if (f(step * k) >= 0.0) last_ok = step * k;
    if (last_ok < opt.epsilon_max) {
      double a = last_ok, b = last_ok + step;
      for (int it = 0; it < 100; ++it) {
        double m = 0.5 * (a + b);
        (f(m) >= 0.0 ? a : b) = m;
      }
      last_ok = a;
    }
    fit.epsilon = last_ok;
    fit.pass = fit.epsilon > opt.epsilon_tol;
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (auto [p, q] : all) worst = std::max(worst, (1.0 + fit.epsilon) * q - p);
  fit.k1 = std::exp(worst);
  double slack = std::numeric_limits<double>::infinity();
  for (auto [p, q] : all) slack = std::min(slack, worst - (1.0 + fit.epsilon) * q + p);
  fit.per_word_slack = slack;
  return fit;
}

// ---------------------------------------------------------------------------
// Unstable-manifold envelopes

/// Cone aperture bound after k backward steps: a_{j+1} = sup (|f_x| + f_y a_j) / g'.
inline double tail_cone(const GhmSpec& spec, std::size_t tail_depth) {
  const auto& sb = spec.skew_branches();
  const Interval J = spec.fiber();
  double a = spec.alpha();
  for (std::size_t k = 0; k < tail_depth; ++k) {
    double next = 0.0;
    for (const auto& b : sb)
      for (int ix = 0; ix <= 64; ++ix) {
        double x = b.base.lo + b.width() * ix / 64.0;
        for (double y : {J.lo, J.hi, 0.0, 1.0})
          next = std::max(next, (std::abs(b.fiber_dx(x, y)) + std::abs(b.fiber_dy(x, y)) * a) / b.base_derivative(x));
      }
    a = std::min(a, next);
  }
  return a;
}

/// Position and slope ranges of W^u over every tail of a word, at one base point.
struct Envelope {
  Interval pos;
  Interval slope;
  bool empty = false;
};

inline Envelope envelope_at(const GhmSpec& spec, const Word& w, double x, double alpha_tail) {
  const auto& sb = spec.skew_branches();
  const Interval J = spec.fiber();
  std::size_t n = w.size();
  double chain[128];
  std::vector<double> heap;
  double* xs = chain;
  if (n + 1 > 128) {
    heap.resize(n + 1);
    xs = heap.data();
  }
  xs[n] = x;
  for (std::size_t k = n; k-- > 0;) xs[k] = sb[w[k]].base_inverse(xs[k + 1]);
  Interval Y = J, T{-alpha_tail, alpha_tail};
  for (std::size_t k = 0; k < n; ++k) {
    const auto& b = sb[w[k]];
    double xp = xs[k];
    Interval fx = b.fiber_dx_range(xp, Y), fy = b.fiber_dy_range(xp, Y);
    double gp = b.base_derivative(xp);
    Interval t = sum(fx, product(fy, T));
    T = {t.lo / gp, t.hi / gp};
    Y = b.fiber_image(xp, Y).intersect(J);
    if (Y.empty()) return {Y, T, true};
  }
  return {Y, T, false};
}

struct WordEnvelope {
  std::vector<Interval> pos;
  std::vector<Interval> slope;
};

inline WordEnvelope word_envelope(const GhmSpec& spec, const Word& w, const std::vector<double>& grid, double alpha_tail) {
  WordEnvelope e;
  e.pos.reserve(grid.size());
  e.slope.reserve(grid.size());
  for (double x : grid) {
    Envelope v = envelope_at(spec, w, x, alpha_tail);
    e.pos.push_back(v.empty ? Interval::empty_set() : v.pos);
    e.slope.push_back(v.slope);
  }
  return e;
}

// ---------------------------------------------------------------------------
// Transversality

enum class TransversalStatus { transversal, non_transversal, inconclusive };

inline std::string status_name(TransversalStatus s) {
  switch (s) {
    case TransversalStatus::transversal: return "transversal";
    case TransversalStatus::non_transversal: return "non_transversal";
    default: return "inconclusive";
  }
}

struct TransversalityVerdict {
  Word a, b;
  TransversalStatus status = TransversalStatus::inconclusive;
  double witness_x = 0.0;
  double position_gap = 0.0;  // at the witness: min distance (transversal) or max distance (non-transversal)
  double slope_gap = 0.0;
  double delta = 0.0;
  Word tail_a, tail_b;  // concrete tails certifying non-transversality
};

struct TransversalityOptions {
  std::size_t x_grid_n = 65;
  std::size_t tail_depth = 8;
  double margin = 1e-9;
  std::size_t witness_budget = 20'000;
};

namespace detail {

// Envelope test at every grid point: true when position or slope ranges are
// separated by more than delta + margin everywhere.
inline bool separated(const WordEnvelope& A, const WordEnvelope& B, double thr, std::size_t* tight = nullptr,
                      double* pos_gap = nullptr, double* slope_gap = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (std::size_t k = 0; k < A.pos.size(); ++k) {
    if (A.pos[k].empty() || B.pos[k].empty()) continue;
    double pg = A.pos[k].gap(B.pos[k]), sg = A.slope[k].gap(B.slope[k]);
    double m = std::max(pg, sg);
    if (m < best) {
      best = m;
      if (tight) *tight = k;
      if (pos_gap) *pos_gap = pg;
      if (slope_gap) *slope_gap = sg;
    }
    if (m <= thr) ok = false;
  }
  return ok;
}

struct TailNode {
  double score;
  Word a, b;
  bool operator<(const TailNode& o) const { return score > o.score; }
};

// Best-first search over concrete prepended tails at base point x until both
// the position and slope ranges lie within delta - margin of each other.
inline std::optional<TransversalityVerdict> find_witness(const GhmSpec& spec, const Word& A, const Word& B, double x,
                                                         double delta, double alpha_tail, const TransversalityOptions& opt) {
  double thr = delta - opt.margin;
  if (thr <= 0.0) return std::nullopt;
  std::priority_queue<TailNode> open;
  auto score = [&](const Word& a, const Word& b, Envelope& ea, Envelope& eb) {
    ea = envelope_at(spec, a, x, alpha_tail);
    eb = envelope_at(spec, b, x, alpha_tail);
    if (ea.empty || eb.empty) return std::numeric_limits<double>::infinity();
    if (ea.pos.gap(eb.pos) > thr || ea.slope.gap(eb.slope) > thr) return std::numeric_limits<double>::infinity();
    return std::max(ea.pos.max_gap(eb.pos), ea.slope.max_gap(eb.slope));
  };
  Envelope ea, eb;
  double s0 = score(A, B, ea, eb);
  if (!std::isfinite(s0)) return std::nullopt;
  open.push({s0, A, B});
  std::size_t expanded = 0;
  while (!open.empty() && expanded < opt.witness_budget) {
    TailNode node = open.top();
    open.pop();
    ++expanded;
    Envelope na = envelope_at(spec, node.a, x, alpha_tail), nb = envelope_at(spec, node.b, x, alpha_tail);
    if (na.pos.max_gap(nb.pos) <= thr && na.slope.max_gap(nb.slope) <= thr) {
      TransversalityVerdict v;
      v.a = A;
      v.b = B;
      v.status = TransversalStatus::non_transversal;
      v.witness_x = x;
      v.position_gap = na.pos.max_gap(nb.pos);
      v.slope_gap = na.slope.max_gap(nb.slope);
      v.delta = delta;
      v.tail_a.assign(node.a.begin(), node.a.end() - static_cast<std::ptrdiff_t>(A.size()));
      v.tail_b.assign(node.b.begin(), node.b.end() - static_cast<std::ptrdiff_t>(B.size()));
      return v;
    }
    // Refine the side whose envelope is wider.
    double wa = std::max(na.pos.length(), na.slope.length()), wb = std::max(nb.pos.length(), nb.slope.length());
    bool left = wa >= wb;
    for (Symbol c = 0; c < spec.strip_count(); ++c) {
      Word a2 = left ? prepend(c, node.a) : node.a;
      Word b2 = left ? node.b : prepend(c, node.b);
      double s = score(a2, b2, ea, eb);
      if (std::isfinite(s)) open.push({s, std::move(a2), std::move(b2)});
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Conservative classification of the pair (A, B) over all infinite tails.
inline TransversalityVerdict classify_transversal(const GhmSpec& spec, const Word& A, const Word& B, double delta,
                                                  TransversalityOptions opt = {}) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  if (opt.x_grid_n < 2) throw ParameterError("x grid needs at least 2 points");
  check_word(spec, A);
  check_word(spec, B);
  double at = tail_cone(spec, opt.tail_depth);
  auto grid = uniform_grid(opt.x_grid_n);
  WordEnvelope ea = word_envelope(spec, A, grid, at), eb = word_envelope(spec, B, grid, at);
  TransversalityVerdict v;
  v.a = A;
  v.b = B;
  v.delta = delta;
  std::size_t tight = 0;
  double pg = 0, sg = 0;
  if (detail::separated(ea, eb, delta + opt.margin, &tight, &pg, &sg)) {
    v.status = TransversalStatus::transversal;
    v.witness_x = grid[tight];
    v.position_gap = pg;
    v.slope_gap = sg;
    return v;
  }
  // Try grid points in order of how close the envelopes come.
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (ea.pos[k].empty() || eb.pos[k].empty()) continue;
    double thr = delta - opt.margin;
    if (ea.pos[k].gap(eb.pos[k]) > thr || ea.slope[k].gap(eb.slope[k]) > thr) continue;
    order.emplace_back(std::max(ea.pos[k].max_gap(eb.pos[k]), ea.slope[k].max_gap(eb.slope[k])), k);
  }
  std::sort(order.begin(), order.end());
  TransversalityOptions per = opt;
  per.witness_budget = std::max<std::size_t>(1, opt.witness_budget / std::max<std::size_t>(1, std::min<std::size_t>(order.size(), 8)));
  for (std::size_t i = 0; i < order.size() && i < 8; ++i) {
    if (auto w = detail::find_witness(spec, A, B, grid[order[i].second], delta, at, per)) return *w;
  }
  v.status = TransversalStatus::inconclusive;
  v.witness_x = grid[tight];
  v.position_gap = pg;
  v.slope_gap = sg;
  return v;
}

/// Area of U_hat_A intersect U_hat_B by trapezoidal quadrature over an x-grid.
inline double overlap_volume(const GhmSpec& spec, const Word& A, const Word& B, std::size_t resolution = 1025) {
  if (resolution < 64) throw ParameterError("overlap quadrature needs resolution >= 64");
  auto grid = uniform_grid(resolution);
  std::vector<double> len(resolution);
  for (std::size_t k = 0; k < resolution; ++k) {
    auto a = fiber_image(spec, A, grid[k], true), b = fiber_image(spec, B, grid[k], true);
    len[k] = (a && b) ? a->intersect(*b).length() : 0.0;
  }
  double h = 1.0 / static_cast<double>(resolution - 1);
  CompensatedSum s;
  for (std::size_t k = 0; k + 1 < resolution; ++k) s.add(0.5 * h * (len[k] + len[k + 1]));
  return s.value();
}

namespace detail {

inline double envelope_overlap(const WordEnvelope& A, const WordEnvelope& B) {
  std::size_t n = A.pos.size();
  double h = 1.0 / static_cast<double>(n - 1);
  CompensatedSum s;
  double prev = A.pos[0].intersect(B.pos[0]).length();
  for (std::size_t k = 1; k < n; ++k) {
    double cur = A.pos[k].intersect(B.pos[k]).length();
    s.add(0.5 * h * (prev + cur));
    prev = cur;
  }
  return s.value();
}

inline Word suffix(const Word& w, std::size_t k) { return Word(w.end() - static_cast<std::ptrdiff_t>(std::min(k, w.size())), w.end()); }

// Transversal verdicts of short most-recent suffix pairs. Envelopes only shrink
// when older symbols are prepended, so a transversal suffix pair makes every
// extension transversal. Never used to upgrade anything else.
class SuffixPruner {
 public:
  SuffixPruner(const GhmSpec& spec, double delta, double margin, const std::vector<double>& grid, double alpha_tail,
               std::size_t max_len)
      : max_len_(max_len) {
    std::vector<Word> words{Word{}};
    for (std::size_t len = 1; len <= max_len; ++len) {
      std::vector<Word> next;
      for (const auto& w : words)
        if (w.size() == len - 1)
          for (Symbol c = 0; c < spec.strip_count(); ++c) next.push_back(prepend(c, w));
      for (auto& w : next) {
        env_.emplace(w, word_envelope(spec, w, grid, alpha_tail));
        words.push_back(w);
      }
    }
    for (const auto& [a, ea] : env_)
      for (const auto& [b, eb] : env_)
        if (separated(ea, eb, delta + margin)) transversal_.emplace(a, b);
  }

  bool transversal(const Word& A, const Word& B) const {
    for (std::size_t k = 1; k <= max_len_ && k <= A.size(); ++k)
      for (std::size_t j = 1; j <= max_len_ && j <= B.size(); ++j)
        if (transversal_.count({suffix(A, k), suffix(B, j)})) return true;
    return false;
  }

 private:
  struct PairHash {
    std::size_t operator()(const std::pair<Word, Word>& p) const noexcept {
      return WordHash{}(p.first) * 1000003u ^ WordHash{}(p.second);
    }
  };
  std::size_t max_len_;
  std::unordered_map<Word, WordEnvelope, WordHash> env_;
  std::unordered_set<std::pair<Word, Word>, PairHash> transversal_;
};

}  // namespace detail

struct NtrOptions {
  std::size_t x_grid_n = 257;
  std::size_t tail_depth = 8;
  double margin = 1e-9;
  std::size_t pair_budget = 2'000'000;   // unordered pairs evaluated exactly
  std::size_t sample_pairs = 100'000;     // pairs drawn when over budget
  std::uint64_t seed = 1;
  std::size_t suffix_len = 3;
  unsigned workers = 1;
  EnumerationOptions enumeration{};
};

struct NtrSumReport {
  double r = 0.0;
  double delta = 0.0;
  std::size_t words = 0;
  double pair_count = 0.0;        // ordered pairs in M(r)^2
  double charged_pairs = 0.0;     // ordered pairs not certified transversal (estimated when sampled)
  double transversal_pairs = 0.0;
  double sum_value = 0.0;         // r^-2 sum over charged ordered pairs of vol |I_A||I_B|
  double distinct_sum = 0.0;      // same, restricted to pairs whose most-recent symbols differ
  double std_error = 0.0;         // sampling standard error (0 when exact)
  bool sampled = false;
  std::size_t evaluated_pairs = 0;
  double max_vol_ratio = 0.0;     // max over transversal pairs of vol / (delta^-1 d_A d_B)
};

/// r^-2 sum over ordered pairs (A, B) in M(r)^2 not certified transversal of
/// vol(U_hat_A & U_hat_B) |I_A| |I_B|. Unordered pairs are evaluated once and
/// off-diagonal terms doubled. Over the pair budget the sum is estimated by
/// stratified sampling (strata: most-recent symbols of A and B, A and B drawn
/// proportional to |I|).
inline NtrSumReport ntr_sum(const GhmSpec& spec, const std::vector<CylinderSummary>& M, double r, double delta,
                            NtrOptions opt = {}) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  if (M.empty()) throw ParameterError("empty cylinder inventory");
  const double at = tail_cone(spec, opt.tail_depth);
  const auto grid = uniform_grid(opt.x_grid_n);
  detail::SuffixPruner pruner(spec, delta, opt.margin, grid, at, opt.suffix_len);
  const double thr = delta + opt.margin;
  const std::size_t n = M.size();
  NtrSumReport rep;
  rep.r = r;
  rep.delta = delta;
  rep.words = n;
  rep.pair_count = static_cast<double>(n) * static_cast<double>(n);

  struct PairValue {
    bool charged = false;
    double vol = 0.0;
    double ratio = 0.0;  // Eq (vol) ratio for transversal pairs
  };
  auto evaluate = [&](const CylinderSummary& A, const CylinderSummary& B, const WordEnvelope& ea,
                      const WordEnvelope& eb) {
    PairValue v;
    v.vol = detail::envelope_overlap(ea, eb);
    bool tr = pruner.transversal(A.word, B.word) || detail::separated(ea, eb, thr);
    v.charged = !tr;
    if (tr && v.vol > 0.0) v.ratio = v.vol / (A.diameter * B.diameter / delta);
    return v;
  };

  double unordered = 0.5 * static_cast<double>(n) * static_cast<double>(n + 1);
  if (unordered <= static_cast<double>(opt.pair_budget)) {
    std::vector<WordEnvelope> env(n);
    parallel_for(n, opt.workers, [&](std::size_t i) { env[i] = word_envelope(spec, M[i].word, grid, at); });
    std::vector<CompensatedSum> sums(n), distinct(n);
    std::vector<double> charged(n, 0.0), ratio(n, 0.0);
    parallel_for(n, opt.workers, [&](std::size_t i) {
      for (std::size_t j = i; j < n; ++j) {
        PairValue v = evaluate(M[i], M[j], env[i], env[j]);
        double mult = i == j ? 1.0 : 2.0;
        if (v.charged) {
          sums[i].add(mult * v.vol * M[i].base.length() * M[j].base.length());
          if (!M[i].word.empty() && !M[j].word.empty() && M[i].word.back() != M[j].word.back())
            distinct[i].add(mult * v.vol * M[i].base.length() * M[j].base.length());
          charged[i] += mult;
        }
        ratio[i] = std::max(ratio[i], v.ratio);
      }
    });
    CompensatedSum total, total_distinct;
    for (std::size_t i = 0; i < n; ++i) {
      total.add(sums[i].value());
      total_distinct.add(distinct[i].value());
      rep.charged_pairs += charged[i];
      rep.max_vol_ratio = std::max(rep.max_vol_ratio, ratio[i]);
    }
    rep.sum_value = total.value() / (r * r);
    rep.distinct_sum = total_distinct.value() / (r * r);
    rep.evaluated_pairs = static_cast<std::size_t>(unordered);
  } else {
    // Strata by most-recent symbol; within a stratum draw A, B proportional to |I|.
    const std::size_t S = spec.strip_count();
    std::vector<std::vector<std::size_t>> members(S);
    std::vector<std::vector<double>> cum(S);
    std::vector<double> weight(S, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      Symbol s = M[i].word.empty() ? 0 : M[i].word.back();
      members[s].push_back(i);
      weight[s] += M[i].base.length();
      cum[s].push_back(weight[s]);
    }
    struct Stratum {
      std::size_t sa, sb;
      double w;
      std::size_t draws;
    };
    std::vector<Stratum> strata;
    for (std::size_t a = 0; a < S; ++a)
      for (std::size_t b = 0; b < S; ++b)
        if (weight[a] > 0 && weight[b] > 0) strata.push_back({a, b, weight[a] * weight[b], 0});
    double wt = 0;
    for (auto& s : strata) wt += s.w;
    for (auto& s : strata) s.draws = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(opt.sample_pairs * s.w / wt)));

    auto pick = [&](std::size_t s, double u) {
      double t = u * weight[s];
      std::size_t k = static_cast<std::size_t>(std::upper_bound(cum[s].begin(), cum[s].end(), t) - cum[s].begin());
      return members[s][std::min(k, members[s].size() - 1)];
    };
    CompensatedSum est, var, charged_est, evaluated, est_distinct;
    for (std::size_t si = 0; si < strata.size(); ++si) {
      const auto& st = strata[si];
      const std::size_t chunk = 4096;
      std::size_t chunks = (st.draws + chunk - 1) / chunk;
      std::vector<double> vals(st.draws), ch(st.draws), rat(st.draws);
      parallel_for(chunks, opt.workers, [&](std::size_t c) {
        std::mt19937_64 rng(stream_seed(opt.seed, si * 1'000'003ULL + c));
        for (std::size_t k = c * chunk; k < std::min(st.draws, (c + 1) * chunk); ++k) {
          std::size_t i = pick(st.sa, detail::unit_uniform(rng)), j = pick(st.sb, detail::unit_uniform(rng));
          WordEnvelope ea = word_envelope(spec, M[i].word, grid, at);
          WordEnvelope eb = word_envelope(spec, M[j].word, grid, at);
          PairValue v = evaluate(M[i], M[j], ea, eb);
          vals[k] = v.charged ? v.vol : 0.0;
          ch[k] = v.charged ? 1.0 : 0.0;
          rat[k] = v.ratio;
        }
      });
      double mean = compensated_total(vals) / static_cast<double>(st.draws);
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      double sv = ss / static_cast<double>(st.draws - 1);
      est.add(st.w * mean);
      if (st.sa != st.sb) est_distinct.add(st.w * mean);
      var.add(st.w * st.w * sv / static_cast<double>(st.draws));
      // Charged fraction is estimated with uniform weight per stratum member pair.
      charged_est.add(compensated_total(ch) / static_cast<double>(st.draws) * static_cast<double>(members[st.sa].size()) *
                      static_cast<double>(members[st.sb].size()));
      evaluated.add(static_cast<double>(st.draws));
      for (double x : rat) rep.max_vol_ratio = std::max(rep.max_vol_ratio, x);
    }
    rep.sampled = true;
    rep.sum_value = est.value() / (r * r);
    rep.distinct_sum = est_distinct.value() / (r * r);
    rep.std_error = std::sqrt(var.value()) / (r * r);
    rep.charged_pairs = charged_est.value();
    rep.evaluated_pairs = static_cast<std::size_t>(evaluated.value());
  }
  rep.transversal_pairs = rep.pair_count - rep.charged_pairs;
  return rep;
}

inline NtrSumReport ntr_sum(const GhmSpec& spec, double r, double delta, NtrOptions opt = {}) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  return ntr_sum(spec, enumerate_cylinders(spec, r, opt.enumeration), r, delta, opt);
}

struct NtrSweep {
  std::vector<NtrSumReport> reports;
  double exponent = 0.0;  // log-log slope of sum against r
};

inline NtrSweep ntr_sweep(const GhmSpec& spec, const std::vector<double>& r_list, double delta, NtrOptions opt = {}) {
  NtrSweep s;
  std::vector<double> rs, vs;
  for (double r : r_list) {
    s.reports.push_back(ntr_sum(spec, r, delta, opt));
    if (s.reports.back().sum_value > 0.0) {
      rs.push_back(r);
      vs.push_back(s.reports.back().sum_value);
    }
  }
  s.exponent = rs.size() >= 2 ? loglog_slope(rs, vs) : 0.0;
  return s;
}

/// Default delta for the affine family: (a - b) / 4.
inline double default_delta(const GhmSpec& spec) {
  double a = 0, b = 0;
  bool has_a = false, has_b = false;
  for (const auto& [k, v] : spec.parameters()) {
    if (k == "a") a = v, has_a = true;
    if (k == "b") b = v, has_b = true;
  }
  if (has_a && has_b) return (a - b) / 4.0;
  return 0.05;
}

}  // namespace ghm

#endif  // GHM_CONDITIONS_HPP

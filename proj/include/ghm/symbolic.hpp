#ifndef GHM_SYMBOLIC_HPP
#define GHM_SYMBOLIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "ghm/instances.hpp"
#include "ghm/parallel.hpp"
#include "ghm/spec.hpp"

namespace ghm {

using Symbol = std::uint32_t;

/// Finite itinerary (a_1, ..., a_n), oldest symbol first: F_[A] = F_{a_n} o ... o F_{a_1}.
/// Prepending a symbol extends the past; the empty word is the whole space.
using Word = std::vector<Symbol>;

inline std::string word_text(const Word& w) {
  if (w.empty()) return "()";
  std::string s;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (k) s += '.';
    s += std::to_string(w[k]);
  }
  return s;
}

inline Word parse_word(const std::string& text) {
  Word w;
  if (text.empty() || text == "()") return w;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t dot = text.find('.', pos);
    std::string tok = text.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw ParameterError("malformed word '" + text + "'");
    w.push_back(static_cast<Symbol>(std::stoul(tok)));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return w;
}

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept {
    Fnv1a h;
    for (Symbol s : w) h.update_value(s);
    return static_cast<std::size_t>(h.value());
  }
};

inline Word concat(const Word& a, const Word& b) {
  Word w = a;
  w.insert(w.end(), b.begin(), b.end());
  return w;
}

inline Word prepend(Symbol c, const Word& w) {
  Word out;
  out.reserve(w.size() + 1);
  out.push_back(c);
  out.insert(out.end(), w.begin(), w.end());
  return out;
}

inline void check_word(const GhmSpec& spec, const Word& w) {
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k] >= spec.strip_count())
      throw ParameterError("symbol " + std::to_string(w[k]) + " at position " + std::to_string(k) +
                           " out of range (map has " + std::to_string(spec.strip_count()) + " strips)");
}

/// I_[A] = psi_{a_1}(psi_{a_2}(... psi_{a_n}([0,1]))), psi_i the inverse base branches.
inline Interval base_cylinder(const GhmSpec& spec, const Word& w) {
  check_word(spec, w);
  const auto& sb = spec.skew_branches();
  Interval I{0.0, 1.0};
  for (std::size_t k = w.size(); k-- > 0;) {
    const auto& b = sb[w[k]];
    I = {b.base_inverse(I.lo), b.base_inverse(I.hi)};
  }
  return I;
}

/// Oldest base point x_0 of the backward itinerary of x along w.
inline double base_origin(const GhmSpec& spec, const Word& w, double x) {
  const auto& sb = spec.skew_branches();
  for (std::size_t k = w.size(); k-- > 0;) x = sb[w[k]].base_inverse(x);
  return x;
}

/// True when every fiber map is affine in y. Then U_[A](x) is an affine image of
/// the starting fiber and diameters reduce to a product of slopes.
inline bool affine_fibers(const GhmSpec& spec) {
  for (const auto& b : spec.skew_branches())
    if (b.curvature != 0.0) return false;
  return true;
}

/// Largest fiber slope over the extended strips (corner lattice plus 65^2 samples).
inline double max_fiber_contraction(const GhmSpec& spec) {
  double m = 0.0;
  const Interval J = spec.fiber();
  for (const auto& b : spec.skew_branches())
    for (int ix = 0; ix <= 64; ++ix)
      for (int iy = 0; iy <= 64; ++iy)
        m = std::max(m, b.fiber_dy(b.base.lo + b.width() * ix / 64.0, J.lo + J.length() * iy / 64.0));
  return m;
}

namespace detail {

inline void check_base_point(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("base point " + std::to_string(x) + " outside [0,1]");
}

// |U_hat_[A](x)| for affine fibers: product of slopes along the backward chain,
// accumulated newest-to-oldest so that it matches the incremental enumeration.
inline double affine_hat_length(const GhmSpec& spec, const Word& w, double x) {
  const auto& sb = spec.skew_branches();
  double alpha = 1.0;
  for (std::size_t k = w.size(); k-- > 0;) {
    const auto& b = sb[w[k]];
    x = b.base_inverse(x);
    alpha = alpha * b.fiber_dy(x, 0.0);
  }
  return alpha * spec.fiber().length();
}

}  // namespace detail

/// U_[A](x) (hat = false, starting fiber [0,1]) or U_hat_[A](x) (starting
/// fiber J). nullopt is the empty-fiber signal: the itinerary of x leaves the
/// domain before the word ends.
inline std::optional<Interval> fiber_image(const GhmSpec& spec, const Word& w, double x, bool hat) {
  check_word(spec, w);
  detail::check_base_point(x);
  const auto& sb = spec.skew_branches();
  const Interval bound = hat ? spec.fiber() : Interval{0.0, 1.0};
  std::vector<double> chain(w.size() + 1);
  chain[w.size()] = x;
  for (std::size_t k = w.size(); k-- > 0;) chain[k] = sb[w[k]].base_inverse(chain[k + 1]);
  Interval Y = bound;
  for (std::size_t k = 0; k < w.size(); ++k) {
    Y = sb[w[k]].fiber_image(chain[k], Y).intersect(bound);
    if (Y.empty()) return std::nullopt;
  }
  return Y;
}

/// |U_hat_[A](x)|, zero for an empty fiber.
inline double hat_length(const GhmSpec& spec, const Word& w, double x) {
  if (affine_fibers(spec)) return detail::affine_hat_length(spec, w, x);
  auto u = fiber_image(spec, w, x, true);
  return u ? u->length() : 0.0;
}

inline std::vector<double> uniform_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = static_cast<double>(k) / static_cast<double>(n - 1);
  return g;
}

namespace detail {

// Golden-section maximization of f on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double start_value) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  double best = std::max({start_value, fc, fd});
  for (int it = 0; it < 48 && b - a > 1e-13; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      best = std::max(best, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      best = std::max(best, fd);
    }
  }
  return best;
}

// Grid max of per-point lengths refined around the arg-max.
template <class F>
double refine_grid_max(const std::vector<double>& lengths, F&& eval, bool refine) {
  std::size_t n = lengths.size();
  std::size_t arg = static_cast<std::size_t>(std::max_element(lengths.begin(), lengths.end()) - lengths.begin());
  double best = lengths[arg];
  if (!refine || n < 3) return best;
  double h = 1.0 / static_cast<double>(n - 1);
  double lo = arg == 0 ? 0.0 : static_cast<double>(arg - 1) * h;
  double hi = arg + 1 >= n ? 1.0 : static_cast<double>(arg + 1) * h;
  return golden_max(eval, lo, hi, best);
}

}  // namespace detail

/// d([A]) = max_x |U_hat_[A](x)|: grid max over x_grid_n points, then
/// golden-section refinement between the neighbours of the grid arg-max.
inline double cylinder_diameter(const GhmSpec& spec, const Word& w, std::size_t x_grid_n = 257, bool refine = true) {
  if (x_grid_n < 2) throw ParameterError("x grid needs at least 2 points");
  check_word(spec, w);
  (void)spec.skew_branches();
  if (w.empty()) return spec.fiber().length();
  auto grid = uniform_grid(x_grid_n);
  std::vector<double> lengths(x_grid_n);
  for (std::size_t k = 0; k < x_grid_n; ++k) lengths[k] = hat_length(spec, w, grid[k]);
  return detail::refine_grid_max(lengths, [&](double x) { return hat_length(spec, w, x); }, refine);
}

/// Stored cylinder geometry on an x-grid.
struct CylinderGeom {
  Word word;
  Interval base_interval;
  std::vector<double> x_grid;
  std::vector<std::optional<Interval>> fiber;
  std::vector<std::optional<Interval>> hat_fiber;
  double diameter = 0.0;
};

inline CylinderGeom cylinder_geometry(const GhmSpec& spec, const Word& w, std::size_t x_grid_n = 257) {
  CylinderGeom g;
  g.word = w;
  g.base_interval = base_cylinder(spec, w);
  g.x_grid = uniform_grid(x_grid_n);
  for (double x : g.x_grid) {
    g.fiber.push_back(fiber_image(spec, w, x, false));
    g.hat_fiber.push_back(fiber_image(spec, w, x, true));
  }
  g.diameter = cylinder_diameter(spec, w, x_grid_n);
  return g;
}

/// A word with its base interval and diameter.
struct CylinderSummary {
  Word word;
  Interval base;
  double diameter = 0.0;
};

inline bool word_less(const Word& a, const Word& b) { return a < b; }

struct EnumerationOptions {
  std::size_t x_grid_n = 257;
  bool refine = true;
  std::size_t max_depth = 64;
  std::size_t max_words = 20'000'000;
  unsigned workers = 1;
};

namespace detail {

// DFS node: a word plus, per grid point, its oldest base point and the
// accumulated fiber slope (affine case).
struct Node {
  Word word;
  std::vector<double> x0;
  std::vector<double> slope;
  double d = 0.0;
};

class Enumerator {
 public:
  Enumerator(const GhmSpec& spec, const EnumerationOptions& opt)
      : spec_(spec), opt_(opt), sb_(spec.skew_branches()), affine_(affine_fibers(spec)),
        grid_(uniform_grid(opt.x_grid_n)), jlen_(spec.fiber().length()) {
    if (opt.x_grid_n < 2) throw ParameterError("x grid needs at least 2 points");
    if (affine_) m_sup_ = max_fiber_contraction(spec);
  }

  Node root() const {
    Node n;
    n.x0 = grid_;
    n.slope.assign(grid_.size(), 1.0);
    n.d = jlen_;
    return n;
  }

  Node child(const Node& p, Symbol c) const {
    Node n;
    n.word = prepend(c, p.word);
    if (n.word.size() > opt_.max_depth)
      throw BudgetError("word depth exceeded " + std::to_string(opt_.max_depth));
    const auto& b = sb_[c];
    std::vector<double> lengths(grid_.size());
    if (affine_) {
      n.x0.resize(grid_.size());
      n.slope.resize(grid_.size());
      for (std::size_t k = 0; k < grid_.size(); ++k) {
        n.x0[k] = b.base_inverse(p.x0[k]);
        n.slope[k] = p.slope[k] * b.fiber_dy(n.x0[k], 0.0);
        lengths[k] = n.slope[k] * jlen_;
      }
    } else {
      for (std::size_t k = 0; k < grid_.size(); ++k) lengths[k] = hat_length(spec_, n.word, grid_[k]);
    }
    const Word& w = n.word;
    n.d = refine_grid_max(lengths, [&](double x) { return hat_length(spec_, w, x); }, opt_.refine);
    return n;
  }

  // Emits into out the maximal words below node p at scale r.
  void maximal(const Node& p, double r, std::vector<CylinderSummary>& out) const {
    if (affine_ && m_sup_ * p.d < r) {
      emit(p, out);
      return;
    }
    std::vector<Node> kids;
    kids.reserve(sb_.size());
    bool some_below = false;
    for (Symbol c = 0; c < sb_.size(); ++c) {
      kids.push_back(child(p, c));
      if (kids.back().d < r) some_below = true;
    }
    if (some_below) {
      emit(p, out);
      return;
    }
    for (auto& k : kids) maximal(k, r, out);
  }

  void emit(const Node& p, std::vector<CylinderSummary>& out) const {
    if (out.size() >= opt_.max_words) throw BudgetError("M(r) exceeds word budget " + std::to_string(opt_.max_words));
    out.push_back({p.word, base_cylinder(spec_, p.word), p.d});
  }

  void all_to_depth(const Node& p, std::size_t depth, std::vector<CylinderSummary>& out) const {
    if (!p.word.empty()) emit(p, out);
    if (p.word.size() >= depth) return;
    for (Symbol c = 0; c < sb_.size(); ++c) all_to_depth(child(p, c), depth, out);
  }

  std::size_t alphabet() const { return sb_.size(); }

 private:
  const GhmSpec& spec_;
  EnumerationOptions opt_;
  const std::vector<SkewBranch>& sb_;
  bool affine_;
  std::vector<double> grid_;
  double jlen_;
  double m_sup_ = 1.0;
};

inline void sort_summaries(std::vector<CylinderSummary>& v) {
  std::sort(v.begin(), v.end(), [](const CylinderSummary& a, const CylinderSummary& b) { return a.word < b.word; });
}

}  // namespace detail

/// M(r): the words with d >= r at least one of whose one-symbol extensions
/// (prepended past symbols) has d < r. Every infinite past has exactly one
/// prefix-in-time in M(r), so the base intervals tile [0,1]. Sorted
/// lexicographically.
inline std::vector<CylinderSummary> enumerate_cylinders(const GhmSpec& spec, double r, EnumerationOptions opt = {}) {
  if (!(r > 0.0)) throw ParameterError("scale r must be positive");
  if (r >= spec.fiber().length())
    throw DegenerateError("scale r = " + std::to_string(r) + " is not below |J| = " + std::to_string(spec.fiber().length()));
  detail::Enumerator en(spec, opt);
  // Expand breadth-first until there are enough independent subtrees.
  std::vector<detail::Node> frontier{en.root()};
  std::vector<CylinderSummary> settled;
  std::size_t target = 4 * static_cast<std::size_t>(resolve_workers(opt.workers));
  while (!frontier.empty() && frontier.size() < target && opt.workers != 1) {
    std::vector<detail::Node> next;
    for (const auto& p : frontier) {
      std::vector<detail::Node> kids;
      bool some_below = false;
      for (Symbol c = 0; c < en.alphabet(); ++c) {
        kids.push_back(en.child(p, c));
        if (kids.back().d < r) some_below = true;
      }
      if (some_below)
        en.emit(p, settled);
      else
        for (auto& k : kids) next.push_back(std::move(k));
    }
    frontier = std::move(next);
  }
  std::vector<std::vector<CylinderSummary>> parts(frontier.size());
  parallel_for(frontier.size(), opt.workers, [&](std::size_t i) { en.maximal(frontier[i], r, parts[i]); });
  for (auto& p : parts) settled.insert(settled.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  if (settled.size() > opt.max_words) throw BudgetError("M(r) exceeds word budget " + std::to_string(opt.max_words));
  detail::sort_summaries(settled);
  return settled;
}

inline std::vector<Word> enumerate_M(const GhmSpec& spec, double r, EnumerationOptions opt = {}) {
  std::vector<Word> out;
  for (auto& c : enumerate_cylinders(spec, r, opt)) out.push_back(std::move(c.word));
  return out;
}

/// Every nonempty word of length <= depth with its base interval and diameter.
inline std::vector<CylinderSummary> words_to_depth(const GhmSpec& spec, std::size_t depth, EnumerationOptions opt = {}) {
  detail::Enumerator en(spec, opt);
  auto root = en.root();
  std::vector<CylinderSummary> out;
  if (depth == 0) return out;
  std::vector<std::vector<CylinderSummary>> parts(en.alphabet());
  parallel_for(en.alphabet(), opt.workers,
               [&](std::size_t c) { en.all_to_depth(en.child(root, static_cast<Symbol>(c)), depth, parts[c]); });
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  detail::sort_summaries(out);
  return out;
}

/// Largest N such that strips 0..N-1 all have fiber contraction above r.
/// Unbounded generators are scanned up to `cap` strips.
inline std::size_t truncate_alphabet(const StripFamilyGenerator& gen, double r, std::size_t cap = 1'000'000) {
  std::size_t n = 0;
  while (true) {
    if (gen.size && n >= *gen.size) return n;
    if (n >= cap) throw BudgetError("strip generator still above r after " + std::to_string(cap) + " strips");
    if (!(gen.inf_contraction(n) > r)) return n;
    ++n;
  }
}

/// Sum of |I_[A]| over all words with c1 < d([A]) < c2 (any length).
inline double weighted_count(const GhmSpec& spec, double c1, double c2, EnumerationOptions opt = {}) {
  if (!(c1 > 0.0 && c2 > c1)) throw ParameterError("need 0 < c1 < c2");
  detail::Enumerator en(spec, opt);
  CompensatedSum total;
  std::vector<detail::Node> stack{en.root()};
  while (!stack.empty()) {
    detail::Node p = std::move(stack.back());
    stack.pop_back();
    if (p.d > c1 && p.d < c2) total.add(base_cylinder(spec, p.word).length());
    if (p.d <= c1) continue;  // diameters only shrink along extensions
    for (Symbol c = 0; c < en.alphabet(); ++c) stack.push_back(en.child(p, c));
  }
  return total.value();
}

/// Thread-safe insert-or-get memo of cylinder summaries for one map.
class CylinderMemo {
 public:
  explicit CylinderMemo(const GhmSpec& spec, std::size_t x_grid_n = 257)
      : spec_(spec), hash_(spec.hash()), x_grid_n_(x_grid_n) {}

  CylinderSummary get(const Word& w) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = table_.find(w); it != table_.end()) return it->second;
    }
    CylinderSummary s{w, base_cylinder(spec_, w), cylinder_diameter(spec_, w, x_grid_n_)};
    std::unique_lock lock(mutex_);
    return table_.try_emplace(w, std::move(s)).first->second;
  }

  void insert(const CylinderSummary& s) {
    std::unique_lock lock(mutex_);
    table_.try_emplace(s.word, s);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return table_.size();
  }
  std::uint64_t map_hash() const { return hash_; }
  std::size_t x_grid_n() const { return x_grid_n_; }

  std::vector<CylinderSummary> snapshot() const {
    std::shared_lock lock(mutex_);
    std::vector<CylinderSummary> v;
    for (const auto& [k, s] : table_) v.push_back(s);
    detail::sort_summaries(v);
    return v;
  }

 private:
  const GhmSpec& spec_;
  std::uint64_t hash_;
  std::size_t x_grid_n_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<Word, CylinderSummary, WordHash> table_;
};

}  // namespace ghm

#endif  // GHM_SYMBOLIC_HPP

#ifndef GHM_FIGURE_HPP
#define GHM_FIGURE_HPP

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "ghm/symbolic.hpp"

namespace ghm {

struct StripPolygon {
  Word word;
  std::vector<double> lower, upper;  // on StripFigure::x; NaN where the fiber is empty
};

struct StripFigure {
  std::size_t n = 0;
  std::vector<double> x;
  std::vector<StripPolygon> strips;
};

/// Boundary polylines of U_[A] for every word of length n, i.e. the strips of F^n([0,1]^2).
inline StripFigure emit_strip_polygons(const GhmSpec& spec, std::size_t n, std::size_t x_grid_n = 257,
                                       std::size_t max_words = 1 << 14) {
  if (n == 0) throw ParameterError("strip figure needs n >= 1");
  if (x_grid_n < 2) throw ParameterError("strip figure needs x_grid_n >= 2");
  std::size_t k = spec.strip_count();
  double count = std::pow(static_cast<double>(k), static_cast<double>(n));
  if (count > static_cast<double>(max_words))
    throw BudgetError("strip figure: " + std::to_string(static_cast<unsigned long long>(count)) +
                      " words exceed budget " + std::to_string(max_words));
  StripFigure fig;
  fig.n = n;
  fig.x = uniform_grid(x_grid_n);
  Word w(n, 0);
  for (std::size_t idx = 0; idx < static_cast<std::size_t>(count); ++idx) {
    std::size_t rest = idx;
    for (std::size_t j = n; j-- > 0;) {
      w[j] = static_cast<Symbol>(rest % k);
      rest /= k;
    }
    StripPolygon p{w, {}, {}};
    p.lower.reserve(x_grid_n);
    p.upper.reserve(x_grid_n);
    for (double x : fig.x) {
      auto iv = fiber_image(spec, w, x, false);
      p.lower.push_back(iv ? iv->lo : std::nan(""));
      p.upper.push_back(iv ? iv->hi : std::nan(""));
    }
    fig.strips.push_back(std::move(p));
  }
  return fig;
}

namespace detail {
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace detail

/// word,vertex,x,y rows; each polygon runs along the lower edge then back along the upper edge.
inline std::string strip_csv(const StripFigure& fig) {
  std::ostringstream os;
  os << "word,vertex,x,y\n";
  for (const auto& s : fig.strips) {
    std::size_t v = 0;
    std::string name = word_text(s.word);
    for (std::size_t i = 0; i < fig.x.size(); ++i)
      if (!std::isnan(s.lower[i])) os << name << ',' << v++ << ',' << detail::num(fig.x[i]) << ',' << detail::num(s.lower[i]) << '\n';
    for (std::size_t i = fig.x.size(); i-- > 0;)
      if (!std::isnan(s.upper[i])) os << name << ',' << v++ << ',' << detail::num(fig.x[i]) << ',' << detail::num(s.upper[i]) << '\n';
  }
  return os.str();
}

inline std::string strip_svg(const StripFigure& fig, double size = 400.0) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::num(size) << "\" height=\""
     << detail::num(size) << "\" viewBox=\"0 0 " << detail::num(size) << ' ' << detail::num(size) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << detail::num(size) << "\" height=\"" << detail::num(size)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto px = [&](double x, double y) { return detail::num(x * size) + "," + detail::num((1.0 - y) * size); };
  for (const auto& s : fig.strips) {
    os << "<polygon data-word=\"" << word_text(s.word) << "\" fill=\"steelblue\" fill-opacity=\"0.35\" stroke=\"navy\" stroke-width=\"0.5\" points=\"";
    bool first = true;
    auto put = [&](std::size_t i, double y) {
      if (std::isnan(y)) return;
      os << (first ? "" : " ") << px(fig.x[i], y);
      first = false;
    };
    for (std::size_t i = 0; i < fig.x.size(); ++i) put(i, s.lower[i]);
    for (std::size_t i = fig.x.size(); i-- > 0;) put(i, s.upper[i]);
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace ghm

#endif  // GHM_FIGURE_HPP

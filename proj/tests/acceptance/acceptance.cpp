// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance <path to ghm cli> <scratch directory>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <tuple>

#include "ghm/conditions.hpp"
#include "ghm/diagnostics.hpp"
#include "ghm/figure.hpp"
#include "ghm/hyperbolicity.hpp"
#include "ghm/instances.hpp"
#include "ghm/measure.hpp"
#include "ghm/runner.hpp"
#include "oracles.hpp"

using namespace ghm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const double kA = 0.8, kB = 0.55;

Outcome ulam_exactness() {
  auto t0 = std::chrono::steady_clock::now();
  auto d = ulam_acip(make_baker(0.6), 4096, 1e-14);
  double sec = seconds_since(t0), dev = 0.0;
  for (std::size_t j = 0; j < d.bins; ++j) dev = std::max(dev, std::abs(d.density(j) - 1.0));
  return {dev <= 1e-10 && sec < 10.0, fmt("sup|h - 1| = %.3g, %.2f s", dev, sec)};
}

Outcome lebesgue_pipeline() {
  auto s = make_baker(0.5);
  auto d = ulam_acip(s, 4096, 1e-14);
  const std::size_t N = 10'000'000;
  auto e = lift_srb(s, d, 40, N, 2024);
  auto g = density_grid(e, 64, 64, Interval{0.0, 1.0});
  double p = 1.0 / 4096.0, sigma = std::sqrt(p * (1 - p) / static_cast<double>(g.counted)), worst = 0.0;
  for (double c : g.cells) worst = std::max(worst, std::abs(c - p) / sigma);
  auto radii = dyadic_radii(3, 7);
  auto t = tsujii_criterion(e, radii);
  double rel = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) rel = std::max(rel, std::abs(t.i_of_r[k] / (2.0 - 2.0 / 3.0 * radii[k]) - 1.0));
  return {worst <= 5.0 && rel <= 0.10, fmt("max cell deviation %.2f sigma, max I(r) relative error %.4f", worst, rel)};
}

Outcome discrimination() {
  auto radii = dyadic_radii(3, 9);
  auto run = [&](double lam) {
    auto s = make_baker(lam);
    auto e = lift_srb(s, ulam_acip(s, 4096, 1e-14), 40, 10'000'000, 77);
    return tsujii_criterion(e, radii);
  };
  auto ac = run(0.7), sing = run(1.0 / 3.0);
  auto [mn, mx] = std::minmax_element(ac.i_of_r.begin(), ac.i_of_r.end());
  double ratio_ac = *mx / *mn;
  double growth = sing.i_of_r.back() / sing.i_of_r.front();
  double target = std::log(2.0) / std::log(3.0) - 1.0;
  bool pass = ratio_ac < 3.0 && growth >= 4.0 && std::abs(sing.loglog_slope - target) <= 0.15;
  return {pass, fmt("lambda 0.7 max/min %.4f (%s); lambda 1/3 growth %.3f, slope %.4f vs %.4f (%s)", ratio_ac,
                    verdict_name(ac.verdict).c_str(), growth, sing.loglog_slope, target, verdict_name(sing.verdict).c_str())};
}

Outcome fatness() {
  auto f7 = fatness_fit(make_baker(0.7), 12), f4 = fatness_fit(make_baker(0.4), 12);
  auto fa = fatness_fit(make_affine_example(kA, kB), 12);
  double oracle_eps = oracle::baker_fatness_eps(0.7);
  bool pass = f7.pass && std::abs(f7.epsilon - oracle_eps) <= 0.02 && !f4.pass && fa.pass && fa.epsilon > 0.0;
  return {pass, fmt("baker 0.7 eps %.6f vs %.6f; baker 0.4 %s; affine eps %.6f", f7.epsilon, oracle_eps,
                    f4.pass ? "accepted" : "rejected", fa.epsilon)};
}

Outcome transversality() {
  auto s = make_affine_example(kA, kB);
  auto radii = dyadic_radii(3, 9);
  auto sweep = ntr_sweep(s, radii, default_delta(s));
  double worst_ratio = 0.0;
  std::string sums;
  for (const auto& r : sweep.reports) {
    worst_ratio = std::max(worst_ratio, r.max_vol_ratio);
    sums += fmt("%s%.4g", sums.empty() ? "" : " ", r.sum_value);
  }
  bool pass = sweep.exponent >= 1.5 && worst_ratio <= 1.02;
  return {pass, fmt("exponent %.4f (closed form %.4f), max vol ratio %.4f, sums [%s]", sweep.exponent,
                    oracle::affine_ntr_exponent(kA, kB), worst_ratio, sums.c_str())};
}

Outcome distortion() {
  auto a = make_affine_example(kA, kB);
  DiagnosticsOptions o8, o12;
  o8.word_depth = 8;
  o12.word_depth = 12;
  auto d8 = compute_diagnostics(a, o8), d12 = compute_diagnostics(a, o12);
  double k2_change = std::abs(d12.k2 - d8.k2) / d8.k2;
  const double lam = 0.6;
  auto b = make_baker(lam);
  auto db = compute_diagnostics(b, o8);
  double err = 0.0;
  for (auto [got, want] : std::vector<std::pair<double, double>>{{db.k_stable, 1.0}, {db.k2, 1.0}, {db.k4, 1.0}, {db.c2, 0.5},
                                                                 {db.c3, 1.0 / lam}, {db.c4, 0.0}, {db.eq12_max_ratio, lam / 2.0},
                                                                 {db.max_g1y_at_z, 0.0}})
    err = std::max(err, std::abs(got - want));
  bool eq12_ok = true;
  std::string eq12;
  for (const auto& [name, s, rep] : std::vector<std::tuple<std::string, GhmSpec, DiagnosticsReport>>{{"baker", b, db}, {"affine", a, d8}}) {
    bool h2 = validate_hyperbolicity(s, 65).h2_pass;
    if (h2 && rep.eq12_margin < 0.0) eq12_ok = false;
    eq12 += fmt(" %s %.4f%s", name.c_str(), rep.eq12_margin, h2 ? "" : " (H2 fails)");
  }
  bool pass = k2_change < 0.05 && err <= 1e-12 && eq12_ok;
  return {pass, fmt("affine K2 %.5f -> %.5f (%.2f%%); baker max error %.2g; adapted contraction margins%s", d8.k2, d12.k2, 100 * k2_change, err,
                    eq12.c_str())};
}

Outcome figure() {
  auto s = make_affine_example(kA, kB);
  bool ok = true;
  std::string detail;
  for (std::size_t n : {1u, 5u}) {
    auto fig = emit_strip_polygons(s, n);
    bool inside = true, full = true;
    for (const auto& p : fig.strips)
      for (std::size_t k = 0; k < fig.x.size(); ++k) {
        if (std::isnan(p.lower[k])) full = false;
        else if (p.lower[k] < -1e-12 || p.upper[k] > 1.0 + 1e-12) inside = false;
      }
    // bands overlap when some x has two intersecting fiber intervals
    std::size_t overlapping = 0;
    for (std::size_t i = 0; i < fig.strips.size(); ++i)
      for (std::size_t j = i + 1; j < fig.strips.size(); ++j)
        for (std::size_t k = 0; k < fig.x.size(); ++k)
          if (std::min(fig.strips[i].upper[k], fig.strips[j].upper[k]) > std::max(fig.strips[i].lower[k], fig.strips[j].lower[k])) {
            ++overlapping;
            break;
          }
    bool good = fig.strips.size() == (std::size_t{1} << n) && inside && full && overlapping > 0;
    ok = ok && good;
    detail += fmt("%sn=%zu: %zu bands, %zu overlapping pairs", detail.empty() ? "" : "; ", n, fig.strips.size(), overlapping);
  }
  return {ok, detail};
}

Outcome partition() {
  double r = std::ldexp(1.0, -10), worst = 0.0;
  std::string detail;
  for (const auto& s : {make_baker(0.6), make_affine_example(kA, kB)}) {
    auto M = enumerate_cylinders(s, r);
    CompensatedSum sum;
    for (const auto& c : M) sum.add(c.base.length());
    worst = std::max(worst, std::abs(sum.value() - 1.0));
    detail += fmt("%s%s %zu words", detail.empty() ? "" : ", ", s.family().c_str(), M.size());
  }
  return {worst <= 1e-12, fmt("%s, max |sum - 1| = %.2g", detail.c_str(), worst)};
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  fs::path d1 = work / "run_j1", d2 = work / "run_j3";
  fs::remove_all(d1);
  fs::remove_all(d2);
  const std::string common =
      " all --family affine --seed 99 --samples 200000 --bins 1024 --fiber-bins 16 --y-bins 4096"
      " --r-sweep 0.125 0.0625 0.03125 --r-list 0.125 0.0625 0.03125 0.015625 --fatness-depth 8"
      " --lattice-n 16 --word-depth 6 --figure-n 1 3 > /dev/null 2>&1";
  int a = std::system((cli + " -j 1 -o " + d1.string() + common).c_str());
  int b = std::system((cli + " -j 3 -o " + d2.string() + common).c_str());
  if (a != 0 || b != 0) return {false, fmt("cli exit statuses %d, %d", a, b)};
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    ++files;
    auto other = d2 / fs::relative(e.path(), d1);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
  }
  return {files > 0 && differing == 0, fmt("%zu files compared, %zu differ", files, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <ghm cli> <scratch dir>\n", argv[0]);
    return 2;
  }
  std::string cli = argv[1];
  fs::path work = argv[2];
  fs::create_directories(work);

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ulam exactness", ulam_exactness},
      {"lebesgue pipeline", lebesgue_pipeline},
      {"ac vs singular", discrimination},
      {"fatness", fatness},
      {"transversality sum", transversality},
      {"distortion suite", distortion},
      {"strip figure", figure},
      {"partition identity", partition},
      {"determinism", [&] { return determinism(cli, work); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}

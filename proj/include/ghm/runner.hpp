#ifndef GHM_RUNNER_HPP
#define GHM_RUNNER_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghm/conditions.hpp"
#include "ghm/cylinder_cache.hpp"
#include "ghm/diagnostics.hpp"
#include "ghm/figure.hpp"
#include "ghm/hyperbolicity.hpp"
#include "ghm/instances.hpp"
#include "ghm/measure.hpp"

namespace ghm {

inline constexpr const char* library_version = "0.1.0";

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed; what() carries the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& msg) : Error("stage '" + stage + "': " + msg), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct RunConfig {
  // map
  std::string family = "baker";
  double lambda = 0.5, a = 0.8, b = 0.55;
  double alpha = 0.5;
  Interval fiber = default_fiber;
  // validation
  std::size_t validation_grid = 65;
  bool strict_a4 = false;
  // enumeration
  std::vector<double> r_sweep;
  std::size_t x_grid_n = 257;
  std::size_t max_depth = 64;
  std::size_t max_words = 20'000'000;
  // measure
  std::size_t acip_bins = 4096;
  double acip_tol = 1e-13;
  std::size_t samples = 1'000'000;
  std::size_t iterations = 0;  // 0: enough to resolve a y-bin
  std::optional<std::uint64_t> seed;
  std::vector<double> r_list;
  std::size_t fiber_bins = 256;
  std::size_t y_bins = 8192;
  double window_ratio = 1.5;
  std::size_t density_grid_n = 64;
  // conditions
  std::optional<double> delta;
  std::size_t fatness_depth = 12;
  std::size_t tail_depth = 8;
  std::size_t pair_budget = 2'000'000;
  std::size_t sample_pairs = 100'000;
  // diagnostics
  std::size_t lattice_n = 64;
  std::size_t word_depth = 8;
  // figure
  std::vector<std::size_t> figure_n{1, 5};
  std::size_t figure_x_grid = 257;
  // output
  std::string directory = "ghm_out";
  std::vector<std::string> formats{"csv", "json", "svg"};
  unsigned workers = 1;

  bool wants(const std::string& fmt) const { return std::find(formats.begin(), formats.end(), fmt) != formats.end(); }
};

inline std::vector<double> dyadic_radii(int from, int to) {
  std::vector<double> r;
  for (int e = from; e <= to; ++e) r.push_back(std::ldexp(1.0, -e));
  return r;
}

namespace detail {

using nlohmann::json;

template <class T>
void take(const json& sec, const char* key, T& out, const std::string& where) {
  if (!sec.contains(key) || sec.at(key).is_null()) return;
  try {
    out = sec.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline void allow_only(const json& sec, std::initializer_list<const char*> keys, const std::string& where) {
  if (!sec.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = sec.begin(); it != sec.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("unknown key " + where + "." + it.key());
  }
}

inline void check_decreasing(const std::vector<double>& r, const std::string& name) {
  if (r.empty()) throw ConfigError(name + " must not be empty");
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!(r[k] > 0.0) || !std::isfinite(r[k])) throw ConfigError(name + " entries must be positive");
    if (k > 0 && !(r[k] < r[k - 1])) throw ConfigError(name + " must be strictly decreasing");
  }
}

}  // namespace detail

/// Parse a configuration document. Unknown keys are rejected; the seed is mandatory.
inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::take;
  RunConfig c;
  detail::allow_only(j, {"map", "validation", "enumeration", "measure", "conditions", "diagnostics", "figure", "output", "workers"}, "config");
  auto sec = [&](const char* name) { return j.contains(name) ? j.at(name) : nlohmann::json::object(); };

  auto m = sec("map");
  detail::allow_only(m, {"family", "lambda", "a", "b", "alpha", "fiber"}, "map");
  take(m, "family", c.family, "map");
  take(m, "lambda", c.lambda, "map");
  take(m, "a", c.a, "map");
  take(m, "b", c.b, "map");
  take(m, "alpha", c.alpha, "map");
  std::vector<double> fib;
  take(m, "fiber", fib, "map");
  if (!fib.empty()) {
    if (fib.size() != 2) throw ConfigError("map.fiber must be [lo, hi]");
    c.fiber = {fib[0], fib[1]};
  }

  auto v = sec("validation");
  detail::allow_only(v, {"grid_n", "strict_a4"}, "validation");
  take(v, "grid_n", c.validation_grid, "validation");
  take(v, "strict_a4", c.strict_a4, "validation");

  auto e = sec("enumeration");
  detail::allow_only(e, {"r_sweep", "x_grid_n", "max_depth", "max_words"}, "enumeration");
  take(e, "r_sweep", c.r_sweep, "enumeration");
  take(e, "x_grid_n", c.x_grid_n, "enumeration");
  take(e, "max_depth", c.max_depth, "enumeration");
  take(e, "max_words", c.max_words, "enumeration");

  auto me = sec("measure");
  detail::allow_only(me, {"bins", "tol", "samples", "iterations", "seed", "r_list", "fiber_bins", "y_bins", "window_ratio", "density_grid_n"}, "measure");
  take(me, "bins", c.acip_bins, "measure");
  take(me, "tol", c.acip_tol, "measure");
  take(me, "samples", c.samples, "measure");
  take(me, "iterations", c.iterations, "measure");
  if (me.contains("seed") && !me.at("seed").is_null()) {
    const auto& sd = me.at("seed");
    bool ok = sd.is_number_unsigned() || (sd.is_number_integer() && sd.get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError("measure.seed must be a non-negative integer");
    c.seed = me.at("seed").get<std::uint64_t>();
  }
  take(me, "r_list", c.r_list, "measure");
  take(me, "fiber_bins", c.fiber_bins, "measure");
  take(me, "y_bins", c.y_bins, "measure");
  take(me, "window_ratio", c.window_ratio, "measure");
  take(me, "density_grid_n", c.density_grid_n, "measure");

  auto co = sec("conditions");
  detail::allow_only(co, {"delta", "fatness_depth", "tail_depth", "pair_budget", "sample_pairs"}, "conditions");
  if (co.contains("delta") && !co.at("delta").is_null()) {
    double d = 0;
    take(co, "delta", d, "conditions");
    c.delta = d;
  }
  take(co, "fatness_depth", c.fatness_depth, "conditions");
  take(co, "tail_depth", c.tail_depth, "conditions");
  take(co, "pair_budget", c.pair_budget, "conditions");
  take(co, "sample_pairs", c.sample_pairs, "conditions");

  auto d = sec("diagnostics");
  detail::allow_only(d, {"lattice_n", "word_depth"}, "diagnostics");
  take(d, "lattice_n", c.lattice_n, "diagnostics");
  take(d, "word_depth", c.word_depth, "diagnostics");

  auto f = sec("figure");
  detail::allow_only(f, {"n", "x_grid_n"}, "figure");
  take(f, "n", c.figure_n, "figure");
  take(f, "x_grid_n", c.figure_x_grid, "figure");

  auto o = sec("output");
  detail::allow_only(o, {"directory", "formats"}, "output");
  take(o, "directory", c.directory, "output");
  take(o, "formats", c.formats, "output");
  take(j, "workers", c.workers, "config");

  if (!c.seed) throw ConfigError("measure.seed is mandatory");
  if (c.r_sweep.empty()) c.r_sweep = dyadic_radii(3, 7);
  if (c.r_list.empty()) c.r_list = dyadic_radii(3, 9);
  detail::check_decreasing(c.r_sweep, "enumeration.r_sweep");
  detail::check_decreasing(c.r_list, "measure.r_list");
  if (c.family != "baker" && c.family != "affine") throw ConfigError("map.family must be 'baker' or 'affine'");
  if (c.delta && !(*c.delta > 0.0)) throw ConfigError("conditions.delta must be positive");
  if (!(c.window_ratio > 1.0)) throw ConfigError("measure.window_ratio must exceed 1");
  if (c.samples == 0) throw ConfigError("measure.samples must be positive");
  for (const auto& fmt : c.formats)
    if (fmt != "csv" && fmt != "json" && fmt != "svg") throw ConfigError("unknown output format '" + fmt + "'");
  if (c.directory.empty()) throw ConfigError("output.directory must not be empty");
  return c;
}

inline GhmSpec build_spec(const RunConfig& c) {
  try {
    InstanceOptions io{c.fiber, c.alpha};
    if (c.family == "baker") return make_baker(c.lambda, io);
    return make_affine_example(c.a, c.b, io);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("map: ") + e.what());
  }
}

struct FileRecord {
  std::string path;  // relative to the output directory
  std::uint64_t bytes = 0;
  std::uint64_t digest = 0;
};

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  std::string note;
};

struct RunManifest {
  std::uint64_t map_hash = 0;
  std::vector<StageRecord> stages;
  std::vector<FileRecord> files;
  std::optional<std::string> failed_stage;
  std::string error;
};

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"validate", "enumerate", "acip", "lift", "criterion",
                                              "fatness", "transversality", "diagnostics", "figure"};
  return names;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Verdict of a positive sweep indexed by decreasing r: "decreasing" when the
/// log-log slope against r is >= 0.2, "bounded" when the three smallest r stay
/// within the window ratio, else "growing".
inline std::string sweep_verdict(const std::vector<double>& r, const std::vector<double>& v, double window_ratio) {
  std::vector<double> rs, vs;
  for (std::size_t k = 0; k < r.size(); ++k)
    if (v[k] > 0.0) rs.push_back(r[k]), vs.push_back(v[k]);
  if (rs.size() < 2) return rs.empty() ? "decreasing" : "undetermined";
  if (loglog_slope(rs, vs) >= 0.2) return "decreasing";
  std::size_t k = std::min<std::size_t>(3, vs.size());
  auto [mn, mx] = std::minmax_element(vs.end() - static_cast<std::ptrdiff_t>(k), vs.end());
  return *mx / *mn < window_ratio ? "bounded" : "growing";
}

/// Stage executor owning one output directory. Stages pull their inputs from
/// earlier stages in this run or from checkpoints on disk.
class Pipeline {
 public:
  using json = nlohmann::json;

  explicit Pipeline(RunConfig cfg) : cfg_(std::move(cfg)), spec_(build_spec(cfg_)), dir_(cfg_.directory) {
    std::error_code ec;
    std::filesystem::create_directories(dir_ / "cache", ec);
    if (ec) throw ConfigError("output directory '" + cfg_.directory + "' is not writable: " + ec.message());
    manifest_.map_hash = spec_.hash();
  }

  const GhmSpec& spec() const { return spec_; }
  const RunManifest& manifest() const { return manifest_; }

  void run(const std::string& stage) {
    auto t0 = std::chrono::steady_clock::now();
    note_.clear();
    try {
      if (stage == "validate") validate();
      else if (stage == "enumerate") enumerate();
      else if (stage == "acip") acip();
      else if (stage == "lift") lift();
      else if (stage == "criterion") criterion();
      else if (stage == "fatness") fatness();
      else if (stage == "transversality") transversality();
      else if (stage == "diagnostics") diagnostics();
      else if (stage == "figure") figure();
      else throw ConfigError("unknown stage '" + stage + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      manifest_.failed_stage = stage;
      manifest_.error = e.what();
      write_manifest();
      throw StageError(stage, e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest_.stages.push_back({stage, secs, note_});
  }

  /// {fat, transversal_window, I_r_window}; needs the fatness, transversality and criterion stages.
  void write_verdict() {
    json v;
    v["fat"] = fat_->pass;
    v["transversal_window"] = sweep_verdict(cfg_.r_sweep, ntr_values(), cfg_.window_ratio);
    v["I_r_window"] = verdict_name(crit_->verdict);
    emit("verdict.json", v.dump(2) + "\n", "json");
  }

  void write_manifest() {
    json m;
    m["map_hash"] = hex64(manifest_.map_hash);
    m["versions"] = {{"library", library_version},
                     {"cylinder_format", cylinder_format_version},
                     {"srb_format", srb_format_version}};
    m["stages"] = json::array();
    for (const auto& s : manifest_.stages) {
      json js{{"name", s.name}, {"seconds", s.seconds}};
      if (!s.note.empty()) js["note"] = s.note;
      m["stages"].push_back(js);
    }
    auto files = manifest_.files;
    std::sort(files.begin(), files.end(), [](const auto& x, const auto& y) { return x.path < y.path; });
    m["files"] = json::array();
    for (const auto& f : files) m["files"].push_back({{"path", f.path}, {"bytes", f.bytes}, {"fnv1a64", hex64(f.digest)}});
    if (manifest_.failed_stage) {
      m["failed_stage"] = *manifest_.failed_stage;
      m["error"] = manifest_.error;
    }
    std::ofstream(dir_ / "manifest.json", std::ios::binary) << m.dump(2) << "\n";
  }

 private:
  RunConfig cfg_;
  GhmSpec spec_;
  std::filesystem::path dir_;
  RunManifest manifest_;
  std::string note_;

  std::optional<HyperbolicityReport> hyp_;
  std::vector<std::vector<CylinderSummary>> inventories_;
  std::optional<Density1D> acip_;
  std::optional<SrbEstimate> srb_;
  std::optional<CriterionTable> crit_;
  std::optional<FatnessFit> fat_;
  std::optional<NtrSweep> ntr_;

  static std::string num(double v) { return detail::num(v); }

  void record(const std::string& rel) {
    std::ifstream in(dir_ / rel, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (auto& f : manifest_.files)
      if (f.path == rel) {
        f = {rel, bytes.size(), fnv1a(bytes)};
        return;
      }
    manifest_.files.push_back({rel, bytes.size(), fnv1a(bytes)});
  }

  void emit(const std::string& rel, const std::string& content, const std::string& format) {
    if (!cfg_.wants(format)) return;
    std::ofstream out(dir_ / rel, std::ios::binary);
    out << content;
    if (!out) throw Error("cannot write " + (dir_ / rel).string());
    out.close();
    record(rel);
  }

  static json check_json(const BoundCheck& c) {
    return {{"name", c.name}, {"observed", c.observed}, {"bound", c.bound}, {"margin", c.margin}, {"pass", c.pass},
            {"inconclusive", c.inconclusive}, {"witness", {c.witness.x, c.witness.y}}, {"strip", c.strip}};
  }

  void validate() {
    hyp_ = validate_hyperbolicity(spec_, cfg_.validation_grid, cfg_.strict_a4);
    json j;
    j["family"] = spec_.family();
    j["map_hash"] = hex64(spec_.hash());
    j["passed"] = hyp_->passed();
    j["c0"] = hyp_->c0;
    j["c1"] = hyp_->c1;
    j["max_jacobian"] = hyp_->max_jacobian;
    j["grid_resolution"] = hyp_->grid_resolution;
    j["checks"] = json::array();
    for (const BoundCheck* c : hyp_->checks()) j["checks"].push_back(check_json(*c));
    emit("hyperbolicity.json", j.dump(2) + "\n", "json");
  }

  EnumerationOptions enumeration_options() const {
    EnumerationOptions eo;
    eo.x_grid_n = cfg_.x_grid_n;
    eo.max_depth = cfg_.max_depth;
    eo.max_words = cfg_.max_words;
    eo.workers = cfg_.workers;
    return eo;
  }

  void enumerate() {
    inventories_.clear();
    std::ostringstream csv;
    csv << "r,words,sum_base_length,max_length\n";
    std::size_t reused = 0;
    for (std::size_t k = 0; k < cfg_.r_sweep.size(); ++k) {
      double r = cfg_.r_sweep[k];
      std::string rel = "cache/M_" + std::to_string(k) + ".bin";
      std::optional<CylinderInventory> inv;
      if (std::filesystem::exists(dir_ / rel)) {
        try {
          auto got = load_cylinders((dir_ / rel).string(), spec_.hash());
          if (got.r == r && got.x_grid_n == cfg_.x_grid_n) inv = std::move(got), ++reused;
        } catch (const CacheError&) {
        }
      }
      if (!inv) {
        inv = CylinderInventory{spec_.hash(), cfg_.x_grid_n, r, enumerate_cylinders(spec_, r, enumeration_options())};
        save_cylinders((dir_ / rel).string(), *inv);
      }
      record(rel);
      CompensatedSum s;
      std::size_t longest = 0;
      for (const auto& c : inv->cylinders) {
        s.add(c.base.length());
        longest = std::max(longest, c.word.size());
      }
      csv << num(r) << ',' << inv->cylinders.size() << ',' << num(s.value()) << ',' << longest << '\n';
      inventories_.push_back(std::move(inv->cylinders));
    }
    if (reused) note_ = "reused " + std::to_string(reused) + " cached inventories";
    emit("enumeration.csv", csv.str(), "csv");
  }

  void acip() {
    acip_ = ulam_acip(spec_, cfg_.acip_bins, cfg_.acip_tol);
    std::ostringstream csv;
    csv << "x,density\n";
    for (std::size_t j = 0; j < acip_->bins; ++j)
      csv << num((static_cast<double>(j) + 0.5) / static_cast<double>(acip_->bins)) << ',' << num(acip_->density(j)) << '\n';
    emit("acip.csv", csv.str(), "csv");
    json js{{"bins", acip_->bins}, {"sweeps", acip_->sweeps}, {"residual", acip_->residual},
            {"density_lower", acip_->l_bound}, {"density_upper", acip_->L_bound}};
    emit("acip.json", js.dump(2) + "\n", "json");
  }

  std::size_t iterations() const {
    if (cfg_.iterations) return cfg_.iterations;
    return suggested_iterations(spec_, 0.25 * spec_.fiber().length() / static_cast<double>(cfg_.y_bins));
  }

  void lift() {
    if (!acip_) acip();
    const std::string rel = "cache/srb.bin";
    std::size_t n_iter = iterations();
    srb_.reset();
    if (std::filesystem::exists(dir_ / rel)) {
      try {
        auto got = load_srb((dir_ / rel).string(), spec_.hash());
        if (got.seed == *cfg_.seed && got.requested == cfg_.samples && got.iterations_used == n_iter &&
            got.fiber_bins == cfg_.fiber_bins && got.y_bins == cfg_.y_bins && !got.samples.empty()) {
          srb_ = std::move(got);
          note_ = "reused SRB checkpoint";
        }
      } catch (const CacheError&) {
      }
    }
    if (!srb_) {
      SrbOptions so;
      so.fiber_bins = cfg_.fiber_bins;
      so.y_bins = cfg_.y_bins;
      so.workers = cfg_.workers;
      srb_ = lift_srb(spec_, *acip_, n_iter, cfg_.samples, *cfg_.seed, so);
      save_srb((dir_ / rel).string(), *srb_);
    }
    record(rel);
    json js{{"seed", srb_->seed}, {"iterations", srb_->iterations_used}, {"requested", srb_->requested},
            {"kept", srb_->kept}, {"discarded", srb_->discarded}, {"jittered", srb_->jittered},
            {"contraction_bound", srb_->contraction_bound}, {"fiber_bins", srb_->fiber_bins}, {"y_bins", srb_->y_bins}};
    emit("srb.json", js.dump(2) + "\n", "json");
    std::size_t g = cfg_.density_grid_n;
    Grid2D grid = density_grid(*srb_, g, g);
    std::ostringstream csv;
    csv << "x,y,density\n";
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < g; ++j)
        csv << num((static_cast<double>(i) + 0.5) / static_cast<double>(g)) << ','
            << num((static_cast<double>(j) + 0.5) / static_cast<double>(g)) << ',' << num(grid.at(i, j)) << '\n';
    emit("density_grid.csv", csv.str(), "csv");
  }

  void criterion() {
    if (!srb_) lift();
    crit_ = tsujii_criterion(*srb_, cfg_.r_list, cfg_.window_ratio, std::nullopt, cfg_.workers);
    std::ostringstream csv;
    csv << "r,I_r\n";
    for (std::size_t k = 0; k < crit_->r_values.size(); ++k) csv << num(crit_->r_values[k]) << ',' << num(crit_->i_of_r[k]) << '\n';
    emit("criterion.csv", csv.str(), "csv");
    json js{{"r", crit_->r_values}, {"I_r", crit_->i_of_r}, {"loglog_slope", crit_->loglog_slope},
            {"tail_ratio", crit_->tail_ratio}, {"window_ratio", crit_->window_ratio}, {"verdict", verdict_name(crit_->verdict)}};
    emit("criterion.json", js.dump(2) + "\n", "json");
  }

  void fatness() {
    FatnessOptions fo;
    fo.x_grid_n = cfg_.x_grid_n;
    fo.workers = cfg_.workers;
    fat_ = fatness_fit(spec_, cfg_.fatness_depth, fo);
    json js{{"pass", fat_->pass}, {"epsilon", fat_->epsilon}, {"k1", fat_->k1}, {"per_word_slack", fat_->per_word_slack},
            {"words_used", fat_->words_used}, {"depth_used", fat_->depth_used}, {"anchor_depth", fat_->anchor_depth},
            {"partial", fat_->partial}};
    emit("fatness.json", js.dump(2) + "\n", "json");
  }

  double delta() const { return cfg_.delta.value_or(default_delta(spec_)); }

  std::vector<double> ntr_values() const {
    std::vector<double> v;
    for (const auto& rep : ntr_->reports) v.push_back(rep.sum_value);
    return v;
  }

  void transversality() {
    if (inventories_.size() != cfg_.r_sweep.size()) enumerate();
    NtrOptions no;
    no.x_grid_n = cfg_.x_grid_n;
    no.tail_depth = cfg_.tail_depth;
    no.pair_budget = cfg_.pair_budget;
    no.sample_pairs = cfg_.sample_pairs;
    no.seed = *cfg_.seed;
    no.workers = cfg_.workers;
    no.enumeration = enumeration_options();
    const double d = delta();
    NtrSweep sweep;
    std::vector<double> rs, vs;
    for (std::size_t k = 0; k < cfg_.r_sweep.size(); ++k) {
      sweep.reports.push_back(ntr_sum(spec_, inventories_[k], cfg_.r_sweep[k], d, no));
      if (sweep.reports.back().sum_value > 0.0) rs.push_back(cfg_.r_sweep[k]), vs.push_back(sweep.reports.back().sum_value);
    }
    sweep.exponent = rs.size() >= 2 ? loglog_slope(rs, vs) : 0.0;
    ntr_ = std::move(sweep);

    std::ostringstream csv;
    csv << "r,words,pairs,charged_pairs,ntr_sum,distinct_sum,std_error,sampled,max_vol_ratio\n";
    json reports = json::array();
    for (const auto& rep : ntr_->reports) {
      csv << num(rep.r) << ',' << rep.words << ',' << num(rep.pair_count) << ',' << num(rep.charged_pairs) << ','
          << num(rep.sum_value) << ',' << num(rep.distinct_sum) << ',' << num(rep.std_error) << ',' << (rep.sampled ? 1 : 0) << ',' << num(rep.max_vol_ratio) << '\n';
      reports.push_back({{"r", rep.r}, {"words", rep.words}, {"pairs", rep.pair_count}, {"charged_pairs", rep.charged_pairs},
                         {"transversal_pairs", rep.transversal_pairs}, {"ntr_sum", rep.sum_value}, {"distinct_sum", rep.distinct_sum}, {"std_error", rep.std_error},
                         {"sampled", rep.sampled}, {"evaluated_pairs", rep.evaluated_pairs}, {"max_vol_ratio", rep.max_vol_ratio}});
    }
    emit("ntr.csv", csv.str(), "csv");

    TransversalityOptions to;
    to.tail_depth = cfg_.tail_depth;
    json symbols = json::array();
    for (std::size_t i = 0; i < spec_.strip_count(); ++i)
      for (std::size_t j = i + 1; j < spec_.strip_count(); ++j) {
        auto v = classify_transversal(spec_, {static_cast<Symbol>(i)}, {static_cast<Symbol>(j)}, d, to);
        symbols.push_back({{"a", word_text(v.a)}, {"b", word_text(v.b)}, {"status", status_name(v.status)},
                           {"witness_x", v.witness_x}, {"position_gap", v.position_gap}, {"slope_gap", v.slope_gap},
                           {"tail_a", word_text(v.tail_a)}, {"tail_b", word_text(v.tail_b)}});
      }
    json js{{"delta", d}, {"exponent", ntr_->exponent}, {"reports", reports}, {"symbol_pairs", symbols},
            {"window", sweep_verdict(cfg_.r_sweep, ntr_values(), cfg_.window_ratio)}};
    emit("transversality.json", js.dump(2) + "\n", "json");
  }

  void diagnostics() {
    DiagnosticsOptions d;
    d.lattice_n = cfg_.lattice_n;
    d.word_depth = cfg_.word_depth;
    d.x_grid_n = cfg_.x_grid_n;
    d.seed = *cfg_.seed;
    d.workers = cfg_.workers;
    auto r = compute_diagnostics(spec_, d);
    json js{{"k_stable", r.k_stable}, {"k2", r.k2}, {"k3", r.k3}, {"k4", r.k4}, {"c2", r.c2}, {"c3", r.c3}, {"c4", r.c4},
            {"eq12_max_ratio", r.eq12_max_ratio}, {"eq12_bound", r.eq12_bound}, {"eq12_margin", r.eq12_margin},
            {"max_g1y_at_z", r.max_g1y_at_z}, {"c4_k0_feasible", r.c4_k0_feasible}, {"lattice_points", r.lattice_points},
            {"words_used", r.words_used}, {"corollary_samples", r.corollary_samples},
            {"corollary_violations", r.corollary_violations}, {"samples_used", r.samples_used}};
    emit("diagnostics.json", js.dump(2) + "\n", "json");
  }

  void figure() {
    for (std::size_t n : cfg_.figure_n) {
      auto fig = emit_strip_polygons(spec_, n, cfg_.figure_x_grid);
      std::string stem = "strips_n" + std::to_string(n);
      emit(stem + ".svg", strip_svg(fig), "svg");
      emit(stem + ".csv", strip_csv(fig), "csv");
    }
  }
};

/// Runs `stages` in order (all of them when empty) and writes manifest.json;
/// the verdict is written when the full pipeline ran.
inline RunManifest run_pipeline(const RunConfig& cfg, const std::vector<std::string>& stages = {}) {
  Pipeline p(cfg);
  const auto& todo = stages.empty() ? stage_names() : stages;
  for (const auto& s : todo) p.run(s);
  if (stages.empty()) p.write_verdict();
  p.write_manifest();
  return p.manifest();
}

}  // namespace ghm

#endif  // GHM_RUNNER_HPP

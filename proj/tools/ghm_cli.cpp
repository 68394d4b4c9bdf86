// ghm: run the horseshoe SRB pipeline or one of its stages.
// Exit codes: 0 success, 2 configuration error, 3 stage failure.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ghm/runner.hpp"

using nlohmann::json;

namespace {

struct Flag {
  CLI::Option* opt;
  std::function<void(json&)> put;
};

template <class T>
void add_flag(CLI::App& app, std::vector<Flag>& flags, std::shared_ptr<T> store, const std::string& name,
              const std::string& section, const std::string& key, const std::string& help) {
  CLI::Option* o = app.add_option(name, *store, help);
  flags.push_back({o, [store, section, key](json& j) {
                     if (section.empty())
                       j[key] = *store;
                     else
                       j[section][key] = *store;
                   }});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical SRB measures of generalized horseshoe maps"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON run configuration (overrides flags)")->check(CLI::ExistingFile);

  std::vector<Flag> flags;
  auto S = [](auto v) { return std::make_shared<decltype(v)>(v); };
  add_flag(app, flags, S(std::string{}), "--family", "map", "family", "baker | affine");
  add_flag(app, flags, S(0.0), "--lambda", "map", "lambda", "baker contraction");
  add_flag(app, flags, S(0.0), "--a", "map", "a", "affine example slope at x = 0");
  add_flag(app, flags, S(0.0), "--b", "map", "b", "affine example slope at x = 1");
  add_flag(app, flags, S(0.0), "--alpha", "map", "alpha", "cone aperture");
  add_flag(app, flags, S(std::size_t{}), "--grid-n", "validation", "grid_n", "hyperbolicity lattice size");
  add_flag(app, flags, S(false), "--strict-a4", "validation", "strict_a4", "treat A4 as a hard check");
  add_flag(app, flags, S(std::vector<double>{}), "--r-sweep", "enumeration", "r_sweep", "M(r) radii, strictly decreasing");
  add_flag(app, flags, S(std::size_t{}), "--x-grid-n", "enumeration", "x_grid_n", "base grid for diameters");
  add_flag(app, flags, S(std::size_t{}), "--max-depth", "enumeration", "max_depth", "word length cap");
  add_flag(app, flags, S(std::size_t{}), "--max-words", "enumeration", "max_words", "word count cap");
  add_flag(app, flags, S(std::size_t{}), "--bins", "measure", "bins", "Ulam bins (power of two)");
  add_flag(app, flags, S(0.0), "--tol", "measure", "tol", "Ulam residual tolerance");
  add_flag(app, flags, S(std::size_t{}), "--samples", "measure", "samples", "SRB sample count");
  add_flag(app, flags, S(std::size_t{}), "--iterations", "measure", "iterations", "forward iterations (0: automatic)");
  add_flag(app, flags, S(std::uint64_t{}), "--seed", "measure", "seed", "random seed (mandatory)");
  add_flag(app, flags, S(std::vector<double>{}), "--r-list", "measure", "r_list", "criterion radii, strictly decreasing");
  add_flag(app, flags, S(std::size_t{}), "--fiber-bins", "measure", "fiber_bins", "x-bins of the fiber histograms");
  add_flag(app, flags, S(std::size_t{}), "--y-bins", "measure", "y_bins", "y-bins of the fiber histograms");
  add_flag(app, flags, S(0.0), "--window-ratio", "measure", "window_ratio", "bounded-window ratio");
  add_flag(app, flags, S(0.0), "--delta", "conditions", "delta", "transversality threshold");
  add_flag(app, flags, S(std::size_t{}), "--fatness-depth", "conditions", "fatness_depth", "fatness word depth");
  add_flag(app, flags, S(std::size_t{}), "--tail-depth", "conditions", "tail_depth", "tail cone depth");
  add_flag(app, flags, S(std::size_t{}), "--pair-budget", "conditions", "pair_budget", "exact pair budget");
  add_flag(app, flags, S(std::size_t{}), "--sample-pairs", "conditions", "sample_pairs", "pairs drawn over budget");
  add_flag(app, flags, S(std::size_t{}), "--lattice-n", "diagnostics", "lattice_n", "diagnostics lattice size");
  add_flag(app, flags, S(std::size_t{}), "--word-depth", "diagnostics", "word_depth", "diagnostics word depth");
  add_flag(app, flags, S(std::vector<std::size_t>{}), "--figure-n", "figure", "n", "iterate counts for strip figures");
  add_flag(app, flags, S(std::string{}), "-o,--out", "output", "directory", "output directory");
  add_flag(app, flags, S(std::vector<std::string>{}), "--formats", "output", "formats", "csv json svg");
  add_flag(app, flags, S(0u), "-j,--workers", "", "workers", "worker threads (0: hardware)");

  std::string chosen;
  for (const auto& name : ghm::stage_names())
    app.add_subcommand(name, "run the " + name + " stage")->callback([&chosen, name] { chosen = name; });
  app.add_subcommand("all", "run every stage and write the verdict")->callback([&chosen] { chosen = "all"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ghm::RunConfig cfg;
  try {
    json j = json::object();
    for (const auto& f : flags)
      if (f.opt->count()) f.put(j);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      json file;
      try {
        file = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ghm::ConfigError(config_path + ": " + e.what());
      }
      j.merge_patch(file);
    }
    cfg = ghm::parse_config(j);
  } catch (const ghm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    ghm::RunManifest m;
    if (chosen == "all")
      m = ghm::run_pipeline(cfg);
    else
      m = ghm::run_pipeline(cfg, {chosen});
    for (const auto& s : m.stages) std::cerr << s.name << ": " << s.seconds << " s" << (s.note.empty() ? "" : " (" + s.note + ")") << "\n";
    std::cout << cfg.directory << "\n";
  } catch (const ghm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ghm::StageError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

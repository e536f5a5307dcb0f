// urbanprop: generate random cities, trace attenuation maps, fit path-loss
// exponents. Exit codes: 0 ok, 1 config error, 2 I/O error, 3 validation
// failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "urbanprop/io.hpp"
#include "urbanprop/pipeline.hpp"

namespace fs = std::filesystem;
using namespace urbanprop;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kIoError = 2, kValidationFailure = 3 };

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config cfg;
  if (!path.empty()) cfg = Config::parse(io::read_file(path));
  std::string text;
  for (const auto& o : overrides) text += o + "\n";
  cfg.apply(text);
  cfg.validate();
  return cfg;
}

void print_fit(const pipeline::FitOutput& out) {
  std::printf("alpha = %.4f  A = %.6g  R2 = %.6f  (%zu cities, %zu points in [%g, %g] m)\n", out.fit.alpha,
              out.fit.a, out.fit.r_squared, out.ensemble.n_cities, out.fit.points, out.fit.d_min, out.fit.d_max);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Urban path-loss simulation on random tessellation cities"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  unsigned workers = pipeline::default_workers();
  bool quiet = false;
  app.add_option("-c,--config", config_path, "key = value configuration file");
  app.add_option("-s,--set", overrides, "override one key, e.g. --set n_rays=1e6");
  app.add_option("-w,--workers", workers, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "no progress log");

  auto* show = app.add_subcommand("config", "print the effective configuration");

  std::string gen_out = "scenes";
  auto* gen = app.add_subcommand("generate", "write n_cities scene files");
  gen->add_option("-o,--out", gen_out, "output directory");

  std::string scene_path;
  std::string map_out;
  auto* trace = app.add_subcommand("trace", "trace one scene into an attenuation map");
  trace->add_option("scene", scene_path, "scene GeoJSON")->required();
  trace->add_option("-o,--out", map_out, "map CSV (default: scene name with .csv)");

  std::vector<std::string> map_paths;
  std::string fit_prefix = "ensemble";
  bool fit_svg = false;
  auto* fit = app.add_subcommand("fit", "ensemble-average maps and fit A / d^alpha");
  fit->add_option("maps", map_paths, "map CSV files (sidecar JSON alongside)")->required();
  fit->add_option("-o,--out", fit_prefix, "output prefix");
  fit->add_flag("--svg", fit_svg, "also write a log-log plot");

  std::string run_out = "run";
  bool run_svg = false;
  auto* run = app.add_subcommand("pipeline", "generate, trace and fit");
  run->add_option("-o,--out", run_out, "output directory");
  run->add_flag("--svg", run_svg, "also write a log-log plot");

  auto* validate = app.add_subcommand("validate", "free-space estimator checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  std::ostream* log = quiet ? nullptr : &std::cerr;
  try {
    const Config cfg = load_config(config_path, overrides);
    if (*show) {
      std::cout << cfg.serialize();
    } else if (*gen) {
      pipeline::run_generate(cfg, gen_out, workers, log);
    } else if (*trace) {
      if (map_out.empty()) map_out = fs::path(scene_path).replace_extension(".csv").string();
      pipeline::run_trace(cfg, scene_path, map_out, workers, log);
    } else if (*fit) {
      std::vector<fs::path> paths(map_paths.begin(), map_paths.end());
      print_fit(pipeline::run_fit(cfg, paths, fit_prefix, fit_svg));
    } else if (*run) {
      print_fit(pipeline::run_pipeline(cfg, run_out, workers, run_svg, log));
    } else if (*validate) {
      bool ok = true;
      for (const auto& c : pipeline::run_validate(cfg, workers, log)) {
        std::printf("%-30s %s  value %.6g  range [%g, %g]\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.value,
                    c.lo, c.hi);
        ok = ok && c.pass;
      }
      if (!ok) return kValidationFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const io::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const io::FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}

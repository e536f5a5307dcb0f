#pragma once

// Batch orchestration: deterministic seeding, parallel tracing, the
// generate / trace / fit / validate steps and their file artifacts.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "urbanprop/analysis.hpp"
#include "urbanprop/config.hpp"
#include "urbanprop/io.hpp"

namespace urbanprop::pipeline {

/// Number of ray blocks per map. Block b always uses substream b of the
/// trace seed, so results do not depend on the worker count.
inline constexpr std::size_t kChunks = 64;

unsigned default_workers();

/// Runs fn(0..n-1) on up to `workers` threads; indices are claimed in order.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

std::uint64_t city_seed(std::uint64_t master, std::uint64_t index);
std::uint64_t trace_seed(std::uint64_t city_seed);

/// City `index` of the ensemble described by the config.
io::SceneFile make_city(const Config& cfg, std::uint64_t index);

/// Scene with no blocks or buildings over the config domain.
city::CityScene ground_only_scene(const Config& cfg, Vec3 antenna);

struct TraceStats {
  double seconds = 0.0;
  std::uint64_t rays = 0;
  std::uint64_t ground_hits = 0;
  std::uint64_t bounces = 0;
  int quadtree_depth = 0;
};

/// Traces cfg.n_rays rays from `src` through the scene and returns the
/// street-masked attenuation map with its street fraction.
pm::AttenuationMap trace_map(const Config& cfg, const city::CityScene& scene, const rt::SourceSpec& src,
                             std::uint64_t seed, unsigned workers, TraceStats* stats = nullptr);

/// Same with the config source placed at the scene antenna.
pm::AttenuationMap trace_map(const Config& cfg, const city::CityScene& scene, std::uint64_t seed,
                             unsigned workers, TraceStats* stats = nullptr);

struct FitOutput {
  analysis::EnsembleResult ensemble;
  analysis::FitResult fit;
};

/// Ensemble average weighted by each map's street fraction, then the fit
/// over [fit_dmin_m, fit_dmax_m].
FitOutput fit_maps(const Config& cfg, std::span<const pm::AttenuationMap> maps);

/// Generates and traces cfg.n_cities cities in memory.
FitOutput simulate_ensemble(const Config& cfg, unsigned workers, std::ostream* log = nullptr);

/// Writes city_NNNN.geojson files; returns their paths.
std::vector<std::filesystem::path> run_generate(const Config& cfg, const std::filesystem::path& out_dir,
                                                unsigned workers, std::ostream* log = nullptr);

/// Traces one scene file into a map CSV and its JSON sidecar.
pm::AttenuationMap run_trace(const Config& cfg, const std::filesystem::path& scene,
                             const std::filesystem::path& out_csv, unsigned workers,
                             std::ostream* log = nullptr);

/// Writes <prefix>_profile.csv, <prefix>_fit.json and optionally
/// <prefix>_fit.svg. Throws io::FormatError naming maps whose grid differs
/// from the first one.
FitOutput run_fit(const Config& cfg, std::span<const std::filesystem::path> maps,
                  const std::filesystem::path& out_prefix, bool svg);

/// generate, trace and fit under out_dir.
FitOutput run_pipeline(const Config& cfg, const std::filesystem::path& out_dir, unsigned workers, bool svg,
                       std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// Free-space checks

/// Relative spread of the flux estimator on probe pixels of roughly equal
/// area: rings of width `ring_width` from the inner to the outer crown
/// radius, each cut into sectors of area close to `pixel_area`.
struct VarianceProbe {
  std::vector<double> r0;
  std::vector<double> r1;
  std::vector<int> sectors;
  std::vector<double> pixel_area;
  std::vector<double> mean_flux;  // per pixel, averaged over replicates
  std::vector<double> sigma_r;    // pooled over the ring's pixels
};

/// Free-space flux of `replicates` independent runs of n_rays each.
VarianceProbe probe_variance(const rt::SourceSpec& src, Sampler sampler, std::uint64_t n_rays,
                             int replicates, double pixel_area, double ring_width, std::uint64_t seed,
                             unsigned workers);

struct Check {
  std::string name;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool pass = false;
};

/// Free-space checks at the config geometry (fs_height_m, fs_inner_m,
/// fs_outer_m) and ray count: fitted exponent near 2, uniform inner-ring
/// spread against its prediction, importance spread flat and on its
/// predicted constant.
std::vector<Check> run_validate(const Config& cfg, unsigned workers, std::ostream* log = nullptr);

}  // namespace urbanprop::pipeline

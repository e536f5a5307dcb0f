#include "urbanprop/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <thread>

#include "urbanprop/rng.hpp"

namespace urbanprop::pipeline {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string city_file_name(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "city_%04llu", static_cast<unsigned long long>(index));
  return buf;
}

rt::Emission sample(Sampler s, const rt::SourceSpec& src, Rng& rng) {
  return s == Sampler::Uniform ? rt::sample_direction_uniform(src, rng) : rt::sample_direction_importance(src, rng);
}

std::uint64_t chunk_begin(std::uint64_t n, std::size_t c) {
  return n / kChunks * c + n % kChunks * c / kChunks;
}

}  // namespace

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t city_seed(std::uint64_t master, std::uint64_t index) { return derive_seed(master, 100, index); }

std::uint64_t trace_seed(std::uint64_t seed) { return derive_seed(seed, 200); }

io::SceneFile make_city(const Config& cfg, std::uint64_t index) {
  const city::CityParams p = cfg.city_params();
  io::SceneFile out;
  out.meta.seed = city_seed(cfg.seed, index);
  out.meta.model = city::model_name(p.model);
  out.meta.lambda = p.lambda();
  out.meta.rho = p.rho;
  out.meta.theta = p.theta;
  out.meta.street_w = p.street_w;
  out.meta.facade_b = p.facade_b;
  out.meta.eta_dil = p.eta_dil;
  out.meta.height_h = p.height_h;
  out.meta.delta_h = p.delta_h;
  out.meta.r_window = p.r_window;
  out.meta.delta_r = p.delta_r;
  out.scene = city::generate_city(p, out.meta.seed);
  return out;
}

city::CityScene ground_only_scene(const Config& cfg, Vec3 antenna) {
  city::CityScene scene = city::assemble_scene({}, {}, cfg.r_window_m + cfg.delta_r_m);
  scene.antenna = antenna;
  scene.antenna_fallback = true;
  return scene;
}

pm::AttenuationMap trace_map(const Config& cfg, const city::CityScene& scene, const rt::SourceSpec& src,
                             std::uint64_t seed, unsigned workers, TraceStats* stats) {
  const auto t0 = std::chrono::steady_clock::now();
  const Sampler sampler = cfg.sampler_kind();
  const rt::TraceLimits limits = cfg.limits();
  const pm::PolarGrid grid = cfg.grid();
  const rt::PrismScene prisms(scene);
  const int depth = cfg.quadtree_depth < 0 ? rt::auto_depth(prisms) : cfg.quadtree_depth;
  std::optional<rt::QuadTreeIndex> index;
  if (prisms.building_count() > 0) index.emplace(prisms, depth);
  const rt::QuadTreeIndex* idx = index ? &*index : nullptr;

  std::vector<std::unique_ptr<pm::Accumulator>> parts(kChunks);
  std::vector<std::uint64_t> hit_counts(kChunks, 0);
  std::vector<std::uint64_t> bounce_counts(kChunks, 0);
  parallel_for(kChunks, workers, [&](std::size_t c) {
    auto acc = std::make_unique<pm::Accumulator>(grid, limits.gamma, cfg.cos_floor);
    Rng rng = make_rng(seed, c);
    std::vector<rt::GroundHit> hits;
    const std::uint64_t end = chunk_begin(cfg.n_rays, c + 1);
    for (std::uint64_t i = chunk_begin(cfg.n_rays, c); i < end; ++i) {
      const rt::Emission e = sample(sampler, src, rng);
      hits.clear();
      const rt::TraceResult r = rt::trace_ray(prisms, idx, src.position, e.direction, e.omega, limits, hits);
      acc->add_all(hits);
      hit_counts[c] += hits.size();
      bounce_counts[c] += static_cast<std::uint64_t>(r.bounces);
    }
    parts[c] = std::move(acc);
  });
  for (std::size_t c = 1; c < kChunks; ++c) parts[0]->merge(*parts[c]);

  const std::vector<std::uint8_t> mask = pm::street_mask(grid, scene.blocks);
  pm::AttenuationMap map = parts[0]->finish(cfg.n_rays, src.p0, &mask);
  map.street_fraction = scene.blocks.empty() ? 1.0 : analysis::street_area_fraction(scene, grid.radius);
  map.meta.seed = seed;
  map.meta.n_rays = cfg.n_rays;
  map.meta.gamma = limits.gamma;
  map.meta.p0 = src.p0;
  map.meta.sampler = cfg.sampler;
  map.meta.source = src.position;
  map.meta.cos_floor = cfg.cos_floor;

  if (stats) {
    stats->seconds = elapsed(t0);
    stats->rays = cfg.n_rays;
    stats->ground_hits = 0;
    stats->bounces = 0;
    for (std::size_t c = 0; c < kChunks; ++c) {
      stats->ground_hits += hit_counts[c];
      stats->bounces += bounce_counts[c];
    }
    stats->quadtree_depth = idx ? depth : 0;
  }
  return map;
}

pm::AttenuationMap trace_map(const Config& cfg, const city::CityScene& scene, std::uint64_t seed,
                             unsigned workers, TraceStats* stats) {
  return trace_map(cfg, scene, cfg.source(scene.antenna), seed, workers, stats);
}

FitOutput fit_maps(const Config& cfg, std::span<const pm::AttenuationMap> maps) {
  std::vector<double> eta;
  eta.reserve(maps.size());
  for (const auto& m : maps) eta.push_back(m.street_fraction);
  FitOutput out;
  out.ensemble = analysis::ensemble_average(maps, eta);
  out.fit = analysis::fit_power_law(out.ensemble.d, out.ensemble.power, cfg.fit_dmin_m, cfg.fit_dmax_m);
  return out;
}

namespace {

void log_trace(std::ostream* log, const std::string& what, const TraceStats& s) {
  if (!log) return;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: %llu rays in %.2f s (%.0f rays/s, depth %d, %.2f bounces/ray)\n",
                what.c_str(), static_cast<unsigned long long>(s.rays), s.seconds,
                s.seconds > 0.0 ? static_cast<double>(s.rays) / s.seconds : 0.0, s.quadtree_depth,
                s.rays ? static_cast<double>(s.bounces) / static_cast<double>(s.rays) : 0.0);
  *log << buf << std::flush;
}

}  // namespace

FitOutput simulate_ensemble(const Config& cfg, unsigned workers, std::ostream* log) {
  cfg.validate();
  std::vector<pm::AttenuationMap> maps;
  maps.reserve(cfg.n_cities);
  for (std::uint64_t i = 0; i < cfg.n_cities; ++i) {
    const io::SceneFile city = make_city(cfg, i);
    TraceStats stats;
    maps.push_back(trace_map(cfg, city.scene, trace_seed(city.meta.seed), workers, &stats));
    log_trace(log, city_file_name(i), stats);
  }
  return fit_maps(cfg, maps);
}

std::vector<std::filesystem::path> run_generate(const Config& cfg, const std::filesystem::path& out_dir,
                                                unsigned workers, std::ostream* log) {
  cfg.validate();
  std::vector<std::filesystem::path> paths(cfg.n_cities);
  std::vector<std::size_t> buildings(cfg.n_cities, 0);
  parallel_for(cfg.n_cities, workers, [&](std::size_t i) {
    const io::SceneFile city = make_city(cfg, i);
    paths[i] = out_dir / (city_file_name(i) + ".geojson");
    io::write_file(paths[i], io::scene_geojson(city.scene, city.meta));
    buildings[i] = city.scene.buildings.size();
  });
  if (log) {
    for (std::size_t i = 0; i < paths.size(); ++i) {
      *log << paths[i].string() << ": " << buildings[i] << " buildings\n";
    }
  }
  return paths;
}

pm::AttenuationMap run_trace(const Config& cfg, const std::filesystem::path& scene_path,
                             const std::filesystem::path& out_csv, unsigned workers, std::ostream* log) {
  cfg.validate();
  io::SceneFile file;
  try {
    file = io::parse_scene_geojson(io::read_file(scene_path));
  } catch (const io::FormatError& e) {
    throw io::FormatError(scene_path.string() + ": " + e.what());
  }
  TraceStats stats;
  pm::AttenuationMap map = trace_map(cfg, file.scene, trace_seed(file.meta.seed), workers, &stats);
  io::save_map(map, out_csv);
  log_trace(log, scene_path.string(), stats);
  return map;
}

FitOutput run_fit(const Config& cfg, std::span<const std::filesystem::path> map_paths,
                  const std::filesystem::path& out_prefix, bool svg) {
  cfg.validate();
  if (map_paths.empty()) throw io::IoError("no map files given");
  std::vector<pm::AttenuationMap> maps;
  maps.reserve(map_paths.size());
  for (const auto& p : map_paths) maps.push_back(io::load_map(p));
  std::string offenders;
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (!(maps[i].grid == maps[0].grid)) offenders += (offenders.empty() ? "" : ", ") + map_paths[i].string();
  }
  if (!offenders.empty()) {
    throw io::FormatError("grid differs from " + map_paths[0].string() + ": " + offenders);
  }
  FitOutput out = fit_maps(cfg, maps);
  const std::string prefix = out_prefix.string();
  io::write_file(prefix + "_profile.csv", io::profile_csv(out.ensemble));
  io::write_file(prefix + "_fit.json", io::fit_json(out.fit, maps.size(), cfg.model, cfg.rho));
  if (svg) io::write_file(prefix + "_fit.svg", io::fit_svg(out.ensemble, out.fit));
  return out;
}

FitOutput run_pipeline(const Config& cfg, const std::filesystem::path& out_dir, unsigned workers, bool svg,
                       std::ostream* log) {
  const auto scenes = run_generate(cfg, out_dir / "scenes", workers, log);
  std::vector<std::filesystem::path> maps;
  for (const auto& s : scenes) {
    maps.push_back(out_dir / "maps" / (s.stem().string() + ".csv"));
    run_trace(cfg, s, maps.back(), workers, log);
  }
  return run_fit(cfg, maps, out_dir / "ensemble", svg);
}

// ---------------------------------------------------------------------------
// Free-space checks

VarianceProbe probe_variance(const rt::SourceSpec& src, Sampler sampler, std::uint64_t n_rays, int replicates,
                             double pixel_area, double ring_width, std::uint64_t seed, unsigned workers) {
  if (replicates < 2) throw std::invalid_argument("need at least two replicates");
  if (!(pixel_area > 0.0 && ring_width > 0.0)) throw std::invalid_argument("probe sizes must be positive");
  if (src.az_halfwidth < std::numbers::pi) throw std::invalid_argument("probe needs a full azimuth range");
  const double h = src.position.z;
  const double r_in = pm::crown_inner_radius(src);
  const double r_out = pm::crown_outer_radius(src);
  if (!std::isfinite(r_out)) throw std::invalid_argument("probe needs a bounded crown");

  VarianceProbe probe;
  const auto rings = static_cast<std::size_t>(std::floor((r_out - r_in) / ring_width + 1e-9));
  std::vector<std::size_t> offset{0};
  for (std::size_t i = 0; i < rings; ++i) {
    const double a = r_in + ring_width * static_cast<double>(i);
    const double b = a + ring_width;
    const double area = std::numbers::pi * (b * b - a * a);
    const int n = std::max(1, static_cast<int>(std::lround(area / pixel_area)));
    probe.r0.push_back(a);
    probe.r1.push_back(b);
    probe.sectors.push_back(n);
    probe.pixel_area.push_back(area / n);
    offset.push_back(offset.back() + static_cast<std::size_t>(n));
  }
  const std::size_t pixels = offset.back();

  // Per replicate flux estimate of every pixel.
  std::vector<std::vector<double>> flux(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    const std::uint64_t rseed = derive_seed(seed, 300, static_cast<std::uint64_t>(r));
    std::vector<std::vector<double>> parts(kChunks);
    parallel_for(kChunks, workers, [&](std::size_t c) {
      std::vector<double> sum(pixels, 0.0);
      Rng rng = make_rng(rseed, c);
      const std::uint64_t end = chunk_begin(n_rays, c + 1);
      for (std::uint64_t i = chunk_begin(n_rays, c); i < end; ++i) {
        const rt::Emission e = sample(sampler, src, rng);
        const geom::Point2 p = rt::ground_hit_point(h, e.azimuth, e.elevation);
        const double rad = std::hypot(p.x, p.y);
        const double ring = std::floor((rad - r_in) / ring_width);
        if (!(ring >= 0.0) || ring >= static_cast<double>(rings)) continue;
        const auto ri = static_cast<std::size_t>(ring);
        double ang = std::atan2(p.y, p.x);
        if (ang < 0.0) ang += kTwoPi;
        const int n = probe.sectors[ri];
        const int k = std::min(n - 1, static_cast<int>(ang / kTwoPi * n));
        sum[offset[ri] + static_cast<std::size_t>(k)] += e.omega;
      }
      parts[c] = std::move(sum);
    });
    auto& f = flux[static_cast<std::size_t>(r)];
    f.assign(pixels, 0.0);
    for (const auto& part : parts) {
      for (std::size_t p = 0; p < pixels; ++p) f[p] += part[p];
    }
    for (double& v : f) v /= static_cast<double>(n_rays);
  }

  const double reps = replicates;
  for (std::size_t i = 0; i < rings; ++i) {
    double mean_sum = 0.0;
    double var_sum = 0.0;
    for (std::size_t p = offset[i]; p < offset[i + 1]; ++p) {
      double m = 0.0;
      for (const auto& f : flux) m += f[p];
      m /= reps;
      double v = 0.0;
      for (const auto& f : flux) v += (f[p] - m) * (f[p] - m);
      mean_sum += m;
      var_sum += v / (reps - 1.0);
    }
    const double n = static_cast<double>(offset[i + 1] - offset[i]);
    const double mean = mean_sum / n;
    probe.mean_flux.push_back(mean);
    probe.sigma_r.push_back(mean > 0.0 ? std::sqrt(var_sum / n) / mean : std::numeric_limits<double>::infinity());
  }
  return probe;
}

namespace {

Check make_check(std::string name, double value, double lo, double hi) {
  return {std::move(name), value, lo, hi, value >= lo && value <= hi};
}

}  // namespace

std::vector<Check> run_validate(const Config& cfg, unsigned workers, std::ostream* log) {
  cfg.validate();
  constexpr int kReplicates = 8;
  constexpr double kProbeArea = 100.0;
  const double ring_width = cfg.pixel_dd_m;
  std::vector<Check> checks;
  rt::SourceSpec src = cfg.free_space_source();
  const double n = static_cast<double>(cfg.n_rays);

  // Path loss over a bare ground plane.
  {
    Config fs = cfg;
    fs.fit_dmin_m = 10.0 * cfg.fs_height_m;
    fs.fit_dmax_m = std::min(cfg.fs_outer_m, cfg.r_window_m);
    const city::CityScene ground = ground_only_scene(cfg, src.position);
    const pm::AttenuationMap map = trace_map(fs, ground, src, derive_seed(cfg.seed, 400), workers);
    const FitOutput fit = fit_maps(fs, std::span(&map, 1));
    checks.push_back(make_check("free_space_alpha", fit.fit.alpha, 1.95, 2.05));
  }

  // Uniform sampling: innermost ring against sqrt((1 - phi) / (N phi)).
  {
    const VarianceProbe p = probe_variance(src, Sampler::Uniform, cfg.n_rays, kReplicates, kProbeArea, ring_width,
                                           derive_seed(cfg.seed, 401), workers);
    const double phi = pm::free_space_flux(src, p.r0[0], p.r1[0], 0.0, kTwoPi / p.sectors[0]);
    const double predicted = pm::predicted_sigma_uniform(phi, n);
    checks.push_back(make_check("uniform_inner_sigma_ratio", p.sigma_r[0] / predicted, 1.0 / 1.5, 1.5));
    if (log) *log << "uniform: inner sigma_r " << p.sigma_r[0] << " predicted " << predicted << "\n";
  }

  // Importance sampling: flat spread at sqrt(crown area / (N V)).
  {
    const VarianceProbe p = probe_variance(src, Sampler::Importance, cfg.n_rays, kReplicates, kProbeArea,
                                           ring_width, derive_seed(cfg.seed, 402), workers);
    const double r_in = pm::crown_inner_radius(src);
    const double r_out = pm::crown_outer_radius(src);
    const double crown = std::numbers::pi * (r_out * r_out - r_in * r_in);
    const auto [lo, hi] = std::minmax_element(p.sigma_r.begin(), p.sigma_r.end());
    checks.push_back(make_check("importance_sigma_spread", *hi / *lo, 1.0, 2.0));
    double worst = 1.0;
    for (std::size_t i = 0; i < p.sigma_r.size(); ++i) {
      const double ratio = p.sigma_r[i] / pm::predicted_sigma_importance(p.pixel_area[i], n, crown);
      worst = std::max({worst, ratio, 1.0 / ratio});
    }
    checks.push_back(make_check("importance_sigma_worst_ratio", worst, 1.0, 1.3));
    if (log) *log << "importance: sigma_r in [" << *lo << ", " << *hi << "]\n";
  }
  return checks;
}

}  // namespace urbanprop::pipeline

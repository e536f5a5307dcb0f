// Acceptance suite. Usage: urbanprop_acceptance C1|C2|...|C7|all
//
// Each criterion prints its individual checks, then one summary line
// "Cn PASS|FAIL <title>". The exit status is nonzero when any selected
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "urbanprop/analysis.hpp"
#include "urbanprop/citygen.hpp"
#include "urbanprop/config.hpp"
#include "urbanprop/pipeline.hpp"
#include "urbanprop/powermap.hpp"
#include "urbanprop/raytrace.hpp"
#include "urbanprop/tessellation.hpp"

using namespace urbanprop;

namespace {

constexpr double kPi = std::numbers::pi;

class Report {
 public:
  explicit Report(std::string id) : id_(std::move(id)) {}

  void check(const std::string& name, double value, double lo, double hi) {
    const bool pass = value >= lo && value <= hi;
    ok_ = ok_ && pass;
    std::printf("  %s %-44s %s  value %.6g  range [%.6g, %.6g]\n", id_.c_str(), name.c_str(),
                pass ? "PASS" : "FAIL", value, lo, hi);
    std::fflush(stdout);
  }

  void require(const std::string& name, bool pass) {
    ok_ = ok_ && pass;
    std::printf("  %s %-44s %s\n", id_.c_str(), name.c_str(), pass ? "PASS" : "FAIL");
    std::fflush(stdout);
  }

  void info(const std::string& text) {
    std::printf("  %s %s\n", id_.c_str(), text.c_str());
    std::fflush(stdout);
  }

  bool finish(const std::string& title) const {
    std::printf("%s %s %s\n", id_.c_str(), ok_ ? "PASS" : "FAIL", title.c_str());
    std::fflush(stdout);
    return ok_;
  }

 private:
  std::string id_;
  bool ok_ = true;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Composite Simpson rule on [a, b].
double simpson(const std::function<double(double)>& f, double a, double b, int n = 4000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + h * i) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Ordinary least squares slope of log p against log d on [d0, d1].
double loglog_slope(const std::vector<double>& d, const std::vector<double>& p, double d0, double d1) {
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < d0 || d[i] > d1 || !(p[i] > 0.0)) continue;
    const double x = std::log(d[i]);
    const double y = std::log(p[i]);
    n += 1.0;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// C1: closed-form mean values in a unit-area disc.

struct TableRow {
  double l_a, n0, n1, n2, u2;
};

// Mean values per unit area at line intensity l with xi = x.
TableRow table_plt(double l, double x) { return {l, 0.5 * x * l * l, x * l * l, 0.5 * x * l * l, 4.0 / (l * x)}; }
TableRow table_stit(double l, double x) { return {l, x * l * l, 1.5 * x * l * l, 0.5 * x * l * l, 4.0 / (l * x)}; }

constexpr double kTargetU2 = 0.5;  // cells of perimeter 0.5 in a unit-area disc: about 50 cells per window

geom::ConvexPolygon unit_disc() { return geom::ConvexPolygon::regular_with_area({0.0, 0.0}, 1.0, 256); }

tess::EnsembleStats run_windows(tess::Model model, double lambda, std::size_t runs, std::uint64_t seed) {
  const auto window = unit_disc();
  std::vector<tess::TessStats> stats(runs);
  pipeline::parallel_for(runs, pipeline::default_workers(), [&](std::size_t i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(model), i);
    const tess::AnisotropyLaw law{};
    const auto t = model == tess::Model::Plt ? tess::generate_plt(lambda, law, window, rng)
                                             : tess::generate_stit(lambda, 1.0, law, window, rng);
    stats[i] = tess::summarize(t);
  });
  return tess::aggregate(stats);
}

bool c1() {
  Report r("C1");
  const Stopwatch clock;
  const double x = 2.0 / kPi;
  const double lambda = 4.0 / (kTargetU2 * x);
  r.check("calibrated intensity / 4 / (U2 xi)", tess::calibrate_intensity(kTargetU2, tess::xi({})) / lambda,
          1.0 - 1e-12, 1.0 + 1e-12);
  for (const auto model : {tess::Model::Plt, tess::Model::Stit}) {
    const std::string name = city::model_name(model);
    const auto e = run_windows(model, lambda, 500, 1001);
    const TableRow t = model == tess::Model::Plt ? table_plt(lambda, x) : table_stit(lambda, x);
    const auto z = [&](const char* what, const tess::Estimate& est, double expected) {
      r.info(name + " " + what + fmt(": %.5g +- %.3g, table %.5g", est.mean, est.std_error, expected));
      r.check(name + " " + what + " |z|", std::abs(est.mean - expected) / est.std_error, 0.0, 3.0);
    };
    z("L_A", e.l_a, t.l_a);
    z("N0", e.n0, t.n0);
    z("N1", e.n1, t.n1);
    z("N2", e.n2, t.n2);
    z("U2", e.u2, t.u2);
  }
  r.check("runtime seconds", clock.seconds(), 0.0, 120.0);
  return r.finish("closed-form mean values, 500 PLT and 500 STIT windows");
}

// ---------------------------------------------------------------------------
// C2: typical cell perimeter of PLT and STIT at matched L_A.

bool c2() {
  Report r("C2");
  const double lambda = 4.0 / (kTargetU2 * 2.0 / kPi);
  const auto plt = run_windows(tess::Model::Plt, lambda, 500, 2002);
  const auto stit = run_windows(tess::Model::Stit, lambda, 500, 2002);
  r.info(fmt("PLT L_A %.5g +- %.3g", plt.l_a.mean, plt.l_a.std_error));
  r.info(fmt("STIT L_A %.5g +- %.3g", stit.l_a.mean, stit.l_a.std_error));
  r.info(fmt("PLT U2 %.5g +- %.3g", plt.u2.mean, plt.u2.std_error));
  r.info(fmt("STIT U2 %.5g +- %.3g", stit.u2.mean, stit.u2.std_error));
  const auto combined = [](const tess::Estimate& a, const tess::Estimate& b) {
    return std::abs(a.mean - b.mean) / std::hypot(a.std_error, b.std_error);
  };
  r.check("matched L_A |z|", combined(plt.l_a, stit.l_a), 0.0, 3.0);
  r.check("mean cell perimeter |z|", combined(plt.u2, stit.u2), 0.0, 3.0);
  return r.finish("PLT and STIT typical cell perimeters agree at matched L_A, 500 windows each");
}

// ---------------------------------------------------------------------------
// C3: free-space variance predictions.

bool c3() {
  Report r("C3");
  const Stopwatch clock;
  const Config cfg;
  const rt::SourceSpec src = cfg.free_space_source();
  const double h = src.position.z;
  const double r_in = h / std::tan(src.el_max());
  const double r_out = h / std::tan(src.el_min());
  r.check("antenna height m", h, 20.0, 20.0);
  r.check("crown inner radius m", r_in, 50.0 - 1e-9, 50.0 + 1e-9);
  r.check("crown outer radius m", r_out, 1000.0 - 1e-9, 1000.0 + 1e-9);

  constexpr std::uint64_t kRays = 1'000'000;
  constexpr int kReplicates = 8;
  constexpr double kPixel = 100.0;
  const double n = kRays;
  const unsigned workers = pipeline::default_workers();

  // Solid angle of the full-azimuth elevation band, and the probability of a
  // uniform ray landing in a ring sector, both by quadrature.
  const double omega = 2.0 * kPi * simpson([](double t) { return std::cos(t); }, src.el_min(), src.el_max());
  const auto phi = [&](double a, double b, int sectors) {
    const double radial = simpson([&](double s) { return h * s / std::pow(s * s + h * h, 1.5); }, a, b);
    return 2.0 * kPi / sectors * radial / omega;
  };

  const auto uni = pipeline::probe_variance(src, Sampler::Uniform, kRays, kReplicates, kPixel, cfg.pixel_dd_m,
                                            3003, workers);
  const double phi_in = phi(uni.r0.front(), uni.r1.front(), uni.sectors.front());
  const double pred_in = std::sqrt((1.0 - phi_in) / (n * phi_in));
  r.info(fmt("uniform inner ring [%.0f, %.0f) m, pixel %.4g m2", uni.r0.front(), uni.r1.front(),
             uni.pixel_area.front()));
  r.info(fmt("uniform inner sigma_r %.5g, predicted %.5g", uni.sigma_r.front(), pred_in));
  r.check("uniform inner sigma_r / prediction", uni.sigma_r.front() / pred_in, 1.0 / 1.5, 1.5);
  const double phi_out = phi(uni.r0.back(), uni.r1.back(), uni.sectors.back());
  const double pred_out = std::sqrt((1.0 - phi_out) / (n * phi_out));
  r.info(fmt("uniform outer ring [%.0f, %.0f) m, pixel %.4g m2", uni.r0.back(), uni.r1.back(),
             uni.pixel_area.back()));
  r.info(fmt("uniform outer sigma_r %.5g, predicted %.5g", uni.sigma_r.back(), pred_out));

  const auto imp = pipeline::probe_variance(src, Sampler::Importance, kRays, kReplicates, kPixel, cfg.pixel_dd_m,
                                            3004, workers);
  const auto [lo, hi] = std::minmax_element(imp.sigma_r.begin(), imp.sigma_r.end());
  r.info(fmt("importance sigma_r over %.0f rings in [%.5g, %.5g]", static_cast<double>(imp.sigma_r.size()), *lo,
             *hi));
  r.check("importance sigma_r max / min", *hi / *lo, 1.0, 2.0);
  // Importance hits are uniform over the crown: a pixel is hit with
  // probability V / crown area.
  const double crown = kPi * (r_out * r_out - r_in * r_in);
  double worst = 1.0;
  double mean_sigma = 0.0;
  for (std::size_t i = 0; i < imp.sigma_r.size(); ++i) {
    const double p = imp.pixel_area[i] / crown;
    const double ratio = imp.sigma_r[i] / std::sqrt((1.0 - p) / (n * p));
    worst = std::max({worst, ratio, 1.0 / ratio});
    mean_sigma += imp.sigma_r[i] / static_cast<double>(imp.sigma_r.size());
  }
  r.info(fmt("importance constant sqrt(crown / (N V)) at V = 100: %.5g", std::sqrt(crown / (n * kPixel))));
  r.check("importance worst sigma_r / constant", worst, 1.0, 1.3);

  // Reference figures at N = 10^7, compared after sqrt(10) rescaling.
  const double rescale = 1.0 / std::sqrt(10.0);
  r.check("uniform inner sigma_r at 1e7 / 0.4%", uni.sigma_r.front() * rescale / 0.004, 1.0 / 1.5, 1.5);
  r.check("uniform outer sigma_r at 1e7 / 33%", uni.sigma_r.back() * rescale / 0.33, 1.0 / 1.5, 1.5);
  r.check("importance sigma_r at 1e7 / 5%", mean_sigma * rescale / 0.05, 1.0 / 1.5, 1.5);
  r.check("runtime seconds", clock.seconds(), 0.0, 300.0);
  return r.finish("free-space variance predictions at N = 1e6");
}

// ---------------------------------------------------------------------------
// C4: free-space path loss exponent.

bool c4() {
  Report r("C4");
  Config cfg;
  cfg.n_rays = 1'000'000;
  cfg.fit_dmin_m = 200.0;
  cfg.fit_dmax_m = 1000.0;
  const Vec3 antenna{0.0, 0.0, cfg.fs_height_m};
  const auto scene = pipeline::ground_only_scene(cfg, antenna);
  r.require("scene has no buildings", scene.buildings.empty());
  const auto map = pipeline::trace_map(cfg, scene, cfg.source(antenna), 4004, pipeline::default_workers());
  const std::vector<pm::AttenuationMap> maps{map};
  const auto out = pipeline::fit_maps(cfg, maps);
  // Oracle: the same fit on the exact profile 1 / (d^2 + H^2).
  std::vector<double> exact;
  for (double d : out.ensemble.d) exact.push_back(1.0 / (d * d + antenna.z * antenna.z));
  r.info(fmt("exact profile slope over [200, 1000] m: %.5f", loglog_slope(out.ensemble.d, exact, 200.0, 1000.0)));
  r.info(fmt("fit: alpha %.5f, R2 %.6f over %.0f crowns", out.fit.alpha, out.fit.r_squared,
             static_cast<double>(out.fit.points)));
  r.check("alpha", out.fit.alpha, 1.95, 2.05);
  return r.finish("free-space path loss exponent over [200 m, 1 km]");
}

// ---------------------------------------------------------------------------
// C5: quadtree against brute force.

bool inside_footprint(std::span<const geom::Point2> ring, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    if ((ring[i].y > y) != (ring[j].y > y) &&
        x < (ring[j].x - ring[i].x) * (y - ring[i].y) / (ring[j].y - ring[i].y) + ring[i].x) {
      in = !in;
    }
  }
  return in;
}

bool c5() {
  Report r("C5");
  const Config cfg;
  std::size_t rays = 0, agree = 0, building_hits = 0, exceptions = 0;
  double worst_point = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    city::CityParams p = cfg.city_params();
    p.model = s % 2 ? tess::Model::Stit : tess::Model::Plt;
    p.rho = (s / 2) % 3 * 0.5;
    const auto scene = city::generate_city(p, derive_seed(5005, s));
    const rt::PrismScene prisms(scene);
    const int depth = s % 4 == 0 ? rt::auto_depth(prisms) : static_cast<int>(s % 4) * 3;
    const rt::QuadTreeIndex index(prisms, depth);
    Rng rng = make_rng(5005, 1000 + s);
    for (int i = 0; i < 100; ++i) {
      // Origins in the open air above the window, directions uniform on the sphere.
      Vec3 o;
      for (;;) {
        const double rad = cfg.r_window_m * std::sqrt(uniform01(rng));
        const double ang = uniform(rng, 0.0, 2.0 * kPi);
        o = {rad * std::cos(ang), rad * std::sin(ang), uniform(rng, 0.5, 40.0)};
        bool blocked = false;
        for (std::size_t b = 0; b < prisms.building_count() && !blocked; ++b) {
          const auto bb = prisms.bounds(b);
          if (o.x < bb[0] || o.x > bb[2] || o.y < bb[1] || o.y > bb[3] || o.z > prisms.height(b)) continue;
          blocked = inside_footprint(prisms.footprint(b), o.x, o.y);
        }
        if (!blocked) break;
      }
      const double z = uniform(rng, -1.0, 1.0);
      const double az = uniform(rng, 0.0, 2.0 * kPi);
      const double q = std::sqrt(1.0 - z * z);
      const Vec3 d{q * std::cos(az), q * std::sin(az), z};
      ++rays;
      try {
        const auto a = rt::first_hit(prisms, &index, o, d);
        const auto b = rt::first_hit(prisms, nullptr, o, d);
        double dist = 0.0;
        if (a.hit && b.hit) dist = norm(a.point - b.point);
        worst_point = std::max(worst_point, dist);
        if (a.hit == b.hit && a.surface == b.surface && dist <= 1e-9) ++agree;
        building_hits += a.hit && a.surface.building != rt::SurfaceRef::kGround;
      } catch (const std::exception& e) {
        ++exceptions;
        r.info(std::string("exception: ") + e.what());
      }
    }
  }
  r.info(fmt("%.0f rays, %.0f hit a building", static_cast<double>(rays), static_cast<double>(building_hits)));
  r.check("rays agreeing with brute force", static_cast<double>(agree), static_cast<double>(rays),
          static_cast<double>(rays));
  r.check("worst hit point distance m", worst_point, 0.0, 1e-9);
  r.check("exceptions", static_cast<double>(exceptions), 0.0, 0.0);
  r.require("some rays hit buildings", building_hits > 100);
  return r.finish("indexed first hit equals brute force, 100 rays x 20 scenes");
}

// ---------------------------------------------------------------------------
// C6: desk-scale exponents.

bool c6() {
  Report r("C6");
  const Stopwatch clock;
  std::map<std::pair<std::string, double>, analysis::FitResult> fits;
  for (const std::string model : {"plt", "stit"}) {
    for (const double rho : {0.0, 1.0}) {
      Config cfg;
      cfg.model = model;
      cfg.rho = rho;
      cfg.n_cities = 50;
      cfg.n_rays = 1'000'000;
      cfg.validate();
      const Stopwatch t;
      const auto out = pipeline::simulate_ensemble(cfg, pipeline::default_workers());
      fits[{model, rho}] = out.fit;
      r.info(fmt("alpha %.4f  R2 %.5f  (%.0f s)", out.fit.alpha, out.fit.r_squared, t.seconds()) + "  " + model +
             fmt(" rho %.0f", rho));
      for (std::size_t j = 0; j < out.ensemble.d.size(); j += 10) {
        r.info(fmt("    d %6.0f m  P %.4g +- %.2g", out.ensemble.d[j], out.ensemble.power[j], out.ensemble.std_error[j]));
      }
    }
  }
  r.info("reference values at 1000 cities and N = 1e7: alpha 3.7 (PLT), 4.6 (STIT), smallest R2 0.99909");
  for (const double rho : {0.0, 1.0}) {
    const std::string tag = fmt(" rho %.0f", rho);
    r.check("alpha PLT" + tag, fits[{"plt", rho}].alpha, 3.2, 4.2);
    r.check("alpha STIT" + tag, fits[{"stit", rho}].alpha, 4.1, 5.1);
    r.check("alpha STIT - alpha PLT" + tag, fits[{"stit", rho}].alpha - fits[{"plt", rho}].alpha, 0.5, 1e9);
  }
  for (const auto& [key, fit] : fits) {
    r.check("R2 " + key.first + fmt(" rho %.0f", key.second), fit.r_squared, 0.99, 1.0);
  }
  for (const std::string model : {"plt", "stit"}) {
    r.check("|alpha(rho 1) - alpha(rho 0)| " + model, std::abs(fits[{model, 1.0}].alpha - fits[{model, 0.0}].alpha),
            0.0, 0.3);
  }
  r.info(fmt("runtime %.0f s", clock.seconds()));
  return r.finish("desk-scale exponents, 50 cities per class at N = 1e6");
}

// ---------------------------------------------------------------------------
// C7: property suites, run standalone from the unit test binary.

int run(const std::string& cmd, std::string* output) {
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) *output += buf;
  const int status = pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool c7() {
  Report r("C7");
  const std::string bin = URBANPROP_TESTS;
  std::string listing;
  run(bin + " --list-test-cases --test-case='property:*' 2>&1", &listing);
  for (const char* name : {"property: division conserves area", "property: division membership",
                           "property: reflection is an isometry", "property: estimator is linear in the weights",
                           "property: pipeline output does not depend on the worker count"}) {
    r.require(std::string("present: ") + name, listing.find(name) != std::string::npos);
  }
  const Stopwatch clock;
  std::string output;
  const int rc = run(bin + " --test-case='property:*' 2>&1", &output);
  const double seconds = clock.seconds();
  const auto summary = output.find("[doctest] test cases:");
  if (summary != std::string::npos) r.info(output.substr(summary, output.find('\n', summary) - summary));
  if (rc != 0) std::fputs(output.c_str(), stdout);
  r.check("exit status", rc, 0.0, 0.0);
  r.check("runtime seconds", seconds, 0.0, 60.0);
  return r.finish("property suites green in under a minute");
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<bool()>> criteria = {
      {"C1", c1}, {"C2", c2}, {"C3", c3}, {"C4", c4}, {"C5", c5}, {"C6", c6}, {"C7", c7}};
  std::vector<std::string> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "all") {
      for (const auto& [id, fn] : criteria) selected.push_back(id);
    } else if (criteria.count(a)) {
      selected.push_back(a);
    } else {
      std::fprintf(stderr, "unknown criterion '%s'; expected C1..C7 or all\n", a.c_str());
      return 2;
    }
  }
  if (selected.empty()) {
    std::fprintf(stderr, "usage: %s C1|C2|C3|C4|C5|C6|C7|all ...\n", argv[0]);
    return 2;
  }
  bool ok = true;
  for (const auto& id : selected) {
    try {
      ok = criteria.at(id)() && ok;
    } catch (const std::exception& e) {
      std::printf("%s FAIL exception: %s\n", id.c_str(), e.what());
      ok = false;
    }
  }
  return ok ? 0 : 1;
}

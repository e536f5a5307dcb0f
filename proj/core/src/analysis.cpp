#include "urbanprop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace urbanprop::analysis {

double street_area_fraction(const city::CityScene& scene, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  double covered = 0.0;
  for (const auto& b : scene.blocks) covered += geom::intersection_area_with_disc(b.polygon, {0.0, 0.0}, radius);
  return 1.0 - covered / (std::numbers::pi * radius * radius);
}

EnsembleResult ensemble_average(std::span<const pm::AttenuationMap> maps, std::span<const double> eta) {
  if (maps.empty()) throw std::invalid_argument("no maps to average");
  if (eta.size() != maps.size()) throw std::invalid_argument("one street fraction per map is required");
  const pm::PolarGrid& g = maps.front().grid;
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (!(maps[i].grid == g)) throw std::invalid_argument("map " + std::to_string(i) + " has a different grid");
  }
  EnsembleResult r;
  r.n_cities = maps.size();
  r.eta.assign(eta.begin(), eta.end());
  const double n = static_cast<double>(maps.size());
  const double w = g.dalpha / (2.0 * std::numbers::pi);
  for (int j = 0; j < g.n_crowns; ++j) {
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      double crown = 0.0;
      for (int k = 0; k < g.n_sectors; ++k) crown += maps[i].at(j, k);
      crown *= eta[i] * w;
      sum += crown;
      sum2 += crown * crown;
    }
    const double mean = sum / n;
    const double var = maps.size() > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)) : 0.0;
    r.d.push_back(g.center_radius(j));
    r.power.push_back(mean);
    r.std_error.push_back(std::sqrt(var / n));
  }
  return r;
}

FitResult fit_power_law(std::span<const double> d, std::span<const double> p, double d_min, double d_max) {
  if (d.size() != p.size()) throw std::invalid_argument("radii and powers differ in length");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] >= d_min && d[i] <= d_max && d[i] > 0.0 && p[i] > 0.0 && std::isfinite(p[i])) {
      x.push_back(std::log(d[i]));
      y.push_back(std::log(p[i]));
    }
  }
  if (x.size() < 3) throw std::invalid_argument("power-law fit needs at least three positive points in range");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("power-law fit needs distinct radii");
  const double slope = sxy / sxx;
  FitResult f;
  f.alpha = -slope;
  f.a = std::exp(my - slope * mx);
  f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  f.d_min = d_min;
  f.d_max = d_max;
  f.points = x.size();
  return f;
}

}  // namespace urbanprop::analysis

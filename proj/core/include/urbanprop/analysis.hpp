#pragma once

// Ensemble averaging of attenuation maps and power-law fitting.

#include <cstddef>
#include <span>
#include <vector>

#include "urbanprop/citygen.hpp"
#include "urbanprop/powermap.hpp"

namespace urbanprop::analysis {

/// 1 - (block area inside the disc of given radius) / (disc area).
double street_area_fraction(const city::CityScene& scene, double radius);

struct EnsembleResult {
  std::vector<double> d;          // crown centre radii
  std::vector<double> power;      // ensemble mean
  std::vector<double> std_error;  // spread of the per-city crown means
  std::vector<double> eta;        // per-city street fractions
  std::size_t n_cities = 0;
};

/// P(d_j) = sum_k sum_i P_i(d_j, alpha_k) eta_i dalpha / (N_cities 2 pi).
/// Throws std::invalid_argument when the maps do not share one grid or the
/// weights do not match the maps.
EnsembleResult ensemble_average(std::span<const pm::AttenuationMap> maps, std::span<const double> eta);

struct FitResult {
  double a = 0.0;
  double alpha = 0.0;
  double r_squared = 0.0;
  double d_min = 0.0;
  double d_max = 0.0;
  std::size_t points = 0;
};

/// Least squares on (log d, log P) over d in [d_min, d_max]; points with
/// P <= 0 are skipped. Throws std::invalid_argument with fewer than three.
FitResult fit_power_law(std::span<const double> d, std::span<const double> p, double d_min,
                        double d_max);

}  // namespace urbanprop::analysis

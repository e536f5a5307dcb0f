#pragma once

// Flat key = value configuration. Blank lines and lines starting with '#'
// are ignored; unknown keys are rejected.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "urbanprop/citygen.hpp"
#include "urbanprop/powermap.hpp"
#include "urbanprop/raytrace.hpp"

namespace urbanprop {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Sampler { Uniform, Importance };

struct Config {
  // Window
  double r_window_m = 1000.0;
  double delta_r_m = 500.0;
  // Tessellation
  double u2_m = 400.0;
  std::string model = "plt";
  double rho = 0.0;
  double theta_rad = 0.0;
  // Buildings
  double street_w_m = 10.0;
  double facade_b_m = 10.0;
  double height_h_m = 15.0;
  double eta_dil = 0.8;
  // Antenna
  double p0_w = 40.0;
  double freq_hz = 2e9;       // metadata only
  double wavelength_m = 0.15;  // metadata only
  double az_center_rad = 1.5707963267948966;
  double az_halfwidth_rad = 3.141592653589793;
  double el_center_rad = 0.2617993877991494;
  double el_halfwidth_rad = 0.2617993877991494;
  double delta_h_m = 5.0;
  // Rays
  std::uint64_t n_rays = 10'000'000;
  int max_bounces = 64;
  double gamma_db = -3.0102999566398120;
  double power_floor = 1e-6;
  std::string sampler = "uniform";
  int quadtree_depth = -1;  // -1: automatic
  // Statistics
  double pixel_dd_m = 10.0;
  double pixel_dalpha_deg = 2.0;
  double cos_floor = 1e-3;
  double fit_dmin_m = 50.0;
  double fit_dmax_m = 1000.0;
  // Free-space validation geometry
  double fs_height_m = 20.0;
  double fs_inner_m = 50.0;
  double fs_outer_m = 1000.0;
  // Run
  std::uint64_t seed = 1;
  std::uint64_t n_cities = 1;

  static Config parse(std::string_view text);
  /// Overrides the keys present in `text`; a key may appear once.
  void apply(std::string_view text);
  /// Every key, one per line, in a form parse() reads back exactly.
  std::string serialize() const;
  /// Throws ConfigError on any out-of-range value.
  void validate() const;

  double gamma() const;
  Sampler sampler_kind() const;
  tess::Model model_kind() const;
  city::CityParams city_params() const;
  rt::SourceSpec source(Vec3 position) const;
  rt::TraceLimits limits() const;
  pm::PolarGrid grid() const;
  /// Source of the free-space checks: full azimuth, elevations mapping to
  /// the crown [fs_inner_m, fs_outer_m] from height fs_height_m.
  rt::SourceSpec free_space_source() const;
};

}  // namespace urbanprop

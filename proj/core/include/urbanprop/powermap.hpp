#pragma once

// Attenuation maps on a polar pixel grid and free-space variance predictors.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urbanprop/citygen.hpp"
#include "urbanprop/raytrace.hpp"
#include "urbanprop/vec3.hpp"

namespace urbanprop::pm {

/// Crowns of radial length dd around evaluation radii j * dd (crown j spans
/// [(j - 1/2) dd, (j + 1/2) dd), crown 0 is the disc of radius dd / 2, the
/// last crown is truncated at the grid radius) cut into sectors of opening
/// dalpha centred on k * dalpha.
struct PolarGrid {
  double radius = 1000.0;
  double dd = 10.0;
  double dalpha = 2.0 * 3.141592653589793 / 180.0;
  int n_crowns = 0;
  int n_sectors = 0;

  static PolarGrid make(double radius, double dd, double dalpha);

  std::size_t size() const { return static_cast<std::size_t>(n_crowns) * n_sectors; }
  std::size_t index(int j, int k) const { return static_cast<std::size_t>(j) * n_sectors + k; }
  double crown_inner(int j) const;
  double crown_outer(int j) const;
  double center_radius(int j) const { return j * dd; }
  double center_angle(int k) const { return k * dalpha; }
  double pixel_area(int j) const;
  /// Pixel containing (x, y); nullopt beyond the grid radius.
  std::optional<std::size_t> locate(double x, double y) const;

  friend bool operator==(const PolarGrid&, const PolarGrid&) = default;
};

struct MapMetadata {
  std::uint64_t seed = 0;
  std::uint64_t n_rays = 0;
  double gamma = 0.5;
  double p0 = 40.0;
  std::string sampler = "uniform";
  Vec3 source;
  double cos_floor = 1e-3;
};

struct AttenuationMap {
  PolarGrid grid;
  std::vector<double> power;        // W / m^2, row-major (crown, sector)
  std::vector<std::uint8_t> masked;  // 1 where the pixel has no street
  double street_fraction = 1.0;
  MapMetadata meta;

  double at(int j, int k) const { return power[grid.index(j, k)]; }
};

/// Running vector sums of gamma^n omega d / max(|d_z|, cos_floor) per pixel.
class Accumulator {
 public:
  Accumulator(const PolarGrid& grid, double gamma, double cos_floor = 1e-3);

  void add(const rt::GroundHit& hit);
  void add_all(std::span<const rt::GroundHit> hits);
  /// Adds another accumulator on the same grid, pixel by pixel.
  void merge(const Accumulator& other);
  /// Power estimate: norm of the sum times p0 / (n_rays * pixel area).
  /// Pixels flagged in `mask` are skipped (left at zero).
  AttenuationMap finish(std::uint64_t n_rays, double p0,
                        const std::vector<std::uint8_t>* mask = nullptr) const;

  const PolarGrid& grid() const { return grid_; }

 private:
  PolarGrid grid_;
  double gamma_;
  double cos_floor_;
  std::vector<double> gamma_pow_;
  std::vector<Vec3> sum_;
};

/// One-shot accumulation of a hit list.
AttenuationMap accumulate(const PolarGrid& grid, std::span<const rt::GroundHit> hits,
                          std::uint64_t n_rays, double gamma, double p0 = 1.0,
                          double cos_floor = 1e-3,
                          const std::vector<std::uint8_t>* mask = nullptr);

/// 1 for pixels whose 4 x 4 sample points all fall strictly inside blocks.
std::vector<std::uint8_t> street_mask(const PolarGrid& grid, std::span<const city::Block> blocks);

/// Forces masked pixels to zero and records the mask.
void apply_mask(AttenuationMap& map, const std::vector<std::uint8_t>& mask);

double predicted_sigma_uniform(double flux_probability, double n_rays);
double predicted_sigma_importance(double pixel_area, double n_rays, double crown_area);

/// Free-space power density at horizontal distance d from a source at
/// height h: p0 / (solid angle * (d^2 + h^2)).
double free_space_power(const rt::SourceSpec& src, double d);

/// Probability that a uniformly sampled free-space ray lands in the annular
/// sector [r0, r1) x [a0, a1) (angles inside the emission azimuth range).
double free_space_flux(const rt::SourceSpec& src, double r0, double r1, double a0, double a1);

/// Ground radii reached in free space by the elevation range.
double crown_inner_radius(const rt::SourceSpec& src);
double crown_outer_radius(const rt::SourceSpec& src);

}  // namespace urbanprop::pm

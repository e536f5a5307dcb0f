#pragma once

// Monte-Carlo geometric-optics propagation over a ground plane and vertical
// building prisms.
//
// Angle convention: azimuth theta_xy is measured from +x counterclockwise;
// elevation theta_z is measured downward from the horizontal, so a ray
// leaving height H at elevation theta_z meets the ground at horizontal
// distance H / tan(theta_z).

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "urbanprop/citygen.hpp"
#include "urbanprop/rng.hpp"
#include "urbanprop/vec3.hpp"

namespace urbanprop::rt {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A ray went below the ground plane: the scene leaks.
class GeometryLeak : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Source

struct SourceSpec {
  Vec3 position;
  double az_center = 0.5 * 3.141592653589793;
  double az_halfwidth = 3.141592653589793;
  double el_center = 3.141592653589793 / 12.0;
  double el_halfwidth = 3.141592653589793 / 12.0;
  double p0 = 40.0;
  double gamma = 0.5;

  double el_min() const { return el_center - el_halfwidth; }
  double el_max() const { return el_center + el_halfwidth; }
  /// Throws ConfigError on an invalid aperture or gain.
  void validate() const;
};

/// Solid angle of the emission portion, steradians.
double solid_angle(const SourceSpec& src);
/// Normalised sphere measure of the portion (solid angle over 4 pi).
double sphere_measure(const SourceSpec& src);

/// Unit direction for an azimuth and a downward elevation.
Vec3 direction_from_angles(double azimuth, double elevation);

struct Emission {
  Vec3 direction;
  double omega = 1.0;  // importance weight dS/dT
  double azimuth = 0.0;
  double elevation = 0.0;
};

/// Uniform over the portion with respect to solid angle.
Emission sample_direction_uniform(const SourceSpec& src, Rng& rng);

/// Elevation density proportional to cos / sin^3 (uniform ground-hit density
/// in free space), weight omega = dS/dT. Needs el_min() > 0.
Emission sample_direction_importance(const SourceSpec& src, Rng& rng);

/// Importance weight of an elevation under sample_direction_importance.
double importance_weight(const SourceSpec& src, double elevation);

/// F(t) = 1/sin^2(el_min) - 1/sin^2(t); zero at el_min, increasing.
double importance_cdf_numerator(const SourceSpec& src, double elevation);

/// |det J| of the free-space ground-hit map at elevation t, height h.
double ground_map_jacobian(double h, double elevation);

/// Free-space ground point of an emission from height h.
geom::Point2 ground_hit_point(double h, double azimuth, double elevation);

/// Mirror reflection d - 2 <d, n> n. Throws std::domain_error on grazing
/// incidence (|<d, n>| < 1e-12).
Vec3 reflect(Vec3 d, Vec3 n);

// ---------------------------------------------------------------------------
// Scene

/// Identifies a reflecting surface. building == kGround for the ground;
/// face is the footprint edge index, or kRoof.
struct SurfaceRef {
  static constexpr std::int32_t kGround = -1;
  static constexpr std::int32_t kRoof = -1;
  std::int32_t building = kGround;
  std::int32_t face = kRoof;
  friend bool operator==(const SurfaceRef&, const SurfaceRef&) = default;
};

struct FirstHit {
  bool hit = false;
  double t = std::numeric_limits<double>::infinity();  // search bound until hit
  Vec3 point;
  Vec3 normal;
  SurfaceRef surface;
};

/// Flattened prisms ready for intersection tests.
class PrismScene {
 public:
  explicit PrismScene(const city::CityScene& scene);

  std::size_t building_count() const { return heights_.size(); }
  double domain_radius() const { return domain_radius_; }
  double max_height() const { return max_height_; }
  double height(std::size_t b) const { return heights_[b]; }
  /// Axis-aligned footprint bounds (xmin, ymin, xmax, ymax).
  std::array<double, 4> bounds(std::size_t b) const { return bounds_[b]; }
  std::span<const geom::Point2> footprint(std::size_t b) const;
  double mean_diameter() const;

  /// Entry into prism b along o + t d with t in (kMinT, best.t); updates
  /// best when nearer. Returns true when best changed.
  bool intersect(std::size_t b, Vec3 o, Vec3 d, FirstHit& best) const;

  static constexpr double kMinT = 1e-9;

 private:
  struct Plane {
    double nx, ny, c;  // outward normal, n . p <= c inside
  };
  std::vector<std::uint32_t> first_plane_;
  std::vector<Plane> planes_;
  std::vector<double> heights_;
  std::vector<std::array<double, 4>> bounds_;
  std::vector<geom::Point2> points_;
  std::vector<std::uint32_t> first_point_;
  double domain_radius_ = 0.0;
  double max_height_ = 0.0;
};

/// Uniform 2^M x 2^M grid of leaf squares over the domain bounding square:
/// the leaves of a complete quadtree of depth M. Each leaf lists the
/// buildings whose footprint meets it and their maximum height. Keeps a
/// pointer to the scene, which must outlive it.
class QuadTreeIndex {
 public:
  QuadTreeIndex(const PrismScene& scene, int depth);

  int depth() const { return depth_; }
  std::size_t side() const { return side_; }
  std::span<const std::uint32_t> leaf(std::size_t ix, std::size_t iy) const;
  double leaf_max_height(std::size_t ix, std::size_t iy) const { return leaf_height_[iy * side_ + ix]; }
  double leaf_size() const { return cell_; }
  double origin() const { return lo_; }

  /// Nearest building surface hit with t < tmax.
  FirstHit first_building_hit(Vec3 o, Vec3 d, double tmax) const;

 private:
  const PrismScene* scene_;
  int depth_;
  std::size_t side_;
  double lo_;
  double cell_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> items_;
  std::vector<double> leaf_height_;
};

/// Depth giving leaves about twice the mean building diameter.
int auto_depth(const PrismScene& scene);

/// Reference implementation: tests every building.
FirstHit first_building_hit_brute(const PrismScene& scene, Vec3 o, Vec3 d, double tmax);

/// Nearest surface with t < tmax, ground included; `index` may be null
/// (brute force).
FirstHit first_hit(const PrismScene& scene, const QuadTreeIndex* index, Vec3 o, Vec3 d,
                   double tmax = std::numeric_limits<double>::infinity());

// ---------------------------------------------------------------------------
// Tracing

struct GroundHit {
  double x = 0.0;
  double y = 0.0;
  Vec3 direction;  // incoming, z < 0
  int n = 0;       // reflections before this hit
  double omega = 1.0;
};

struct TraceLimits {
  double gamma = 0.5;
  double power_floor = 1e-6;  // stop once gamma^n falls below
  int max_bounces = 64;
};

enum class Termination { ExitedDomain, PowerFloor, MaxBounces, Grazing, Escaped };

struct TraceResult {
  Termination termination = Termination::ExitedDomain;
  int bounces = 0;
};

/// Follows one ray through successive specular reflections, appending each
/// ground crossing to `hits`. Throws GeometryLeak if the ray ends up below
/// the ground.
TraceResult trace_ray(const PrismScene& scene, const QuadTreeIndex* index, Vec3 origin,
                      Vec3 direction, double omega, const TraceLimits& limits,
                      std::vector<GroundHit>& hits);

std::vector<GroundHit> trace_ray(const PrismScene& scene, const QuadTreeIndex* index, Vec3 origin,
                                 Vec3 direction, double omega, const TraceLimits& limits);

}  // namespace urbanprop::rt

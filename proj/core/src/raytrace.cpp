#include "urbanprop/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace urbanprop::rt {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

// ---------------------------------------------------------------------------
// Source

void SourceSpec::validate() const {
  if (!(el_halfwidth > 0.0)) throw ConfigError("elevation half-width must be positive");
  if (!(el_min() >= 0.0) || !(el_max() <= 0.5 * kPi + 1e-12)) {
    throw ConfigError("elevation range must lie within [0, pi/2]");
  }
  if (!(az_halfwidth > 0.0 && az_halfwidth <= kPi + 1e-12)) {
    throw ConfigError("azimuth half-width must lie in (0, pi]");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("reflection gain must lie in (0,1)");
  if (!(p0 > 0.0)) throw ConfigError("source power must be positive");
  if (!(position.z > 0.0)) throw ConfigError("source must be above the ground");
}

double solid_angle(const SourceSpec& src) {
  return 2.0 * src.az_halfwidth * (std::sin(src.el_max()) - std::sin(src.el_min()));
}

double sphere_measure(const SourceSpec& src) { return solid_angle(src) / (4.0 * kPi); }

Vec3 direction_from_angles(double azimuth, double elevation) {
  const double c = std::cos(elevation);
  return {c * std::cos(azimuth), c * std::sin(azimuth), -std::sin(elevation)};
}

Emission sample_direction_uniform(const SourceSpec& src, Rng& rng) {
  const double az = src.az_center + uniform(rng, -src.az_halfwidth, src.az_halfwidth);
  const double sa = std::sin(src.el_min());
  const double sb = std::sin(src.el_max());
  const double el = std::asin(std::clamp(sa + uniform01(rng) * (sb - sa), -1.0, 1.0));
  return {direction_from_angles(az, el), 1.0, az, el};
}

double importance_cdf_numerator(const SourceSpec& src, double elevation) {
  const double sa = std::sin(src.el_min());
  const double st = std::sin(elevation);
  return 1.0 / (sa * sa) - 1.0 / (st * st);
}

double importance_weight(const SourceSpec& src, double elevation) {
  const double sa = std::sin(src.el_min());
  const double sb = std::sin(src.el_max());
  const double st = std::sin(elevation);
  const double span = 1.0 / (sa * sa) - 1.0 / (sb * sb);
  return st * st * st * span / (2.0 * (sb - sa));
}

Emission sample_direction_importance(const SourceSpec& src, Rng& rng) {
  if (!(src.el_min() > 0.0)) {
    throw ConfigError("importance sampling needs a strictly positive minimum elevation");
  }
  const double az = src.az_center + uniform(rng, -src.az_halfwidth, src.az_halfwidth);
  const double sa = std::sin(src.el_min());
  const double sb = std::sin(src.el_max());
  const double ia = 1.0 / (sa * sa);
  const double ib = 1.0 / (sb * sb);
  const double inv_s2 = ia - uniform01(rng) * (ia - ib);
  const double el = std::asin(std::min(1.0, 1.0 / std::sqrt(inv_s2)));
  return {direction_from_angles(az, el), importance_weight(src, el), az, el};
}

double ground_map_jacobian(double h, double elevation) {
  const double s = std::sin(elevation);
  return h * h * std::cos(elevation) / (s * s * s);
}

geom::Point2 ground_hit_point(double h, double azimuth, double elevation) {
  const double r = h / std::tan(elevation);
  return {r * std::cos(azimuth), r * std::sin(azimuth)};
}

Vec3 reflect(Vec3 d, Vec3 n) {
  const double dn = dot(d, n);
  if (std::abs(dn) < 1e-12) throw std::domain_error("grazing incidence");
  Vec3 r = d - (2.0 * dn) * n;
  return (1.0 / norm(r)) * r;
}

// ---------------------------------------------------------------------------
// Scene

PrismScene::PrismScene(const city::CityScene& scene) : domain_radius_(scene.domain_radius) {
  const std::size_t nb = scene.buildings.size();
  first_plane_.reserve(nb + 1);
  first_point_.reserve(nb + 1);
  heights_.reserve(nb);
  bounds_.reserve(nb);
  for (const city::Building& b : scene.buildings) {
    const auto& fp = b.footprint;
    if (fp.size() < 3) throw geom::GeometryError("building footprint needs >= 3 vertices");
    if (!(b.height > 0.0)) throw geom::GeometryError("building height must be positive");
    const bool clockwise = geom::signed_area(std::span<const geom::Point2>(fp)) < 0.0;
    first_plane_.push_back(static_cast<std::uint32_t>(planes_.size()));
    first_point_.push_back(static_cast<std::uint32_t>(points_.size()));
    std::array<double, 4> bb{kInf, kInf, -kInf, -kInf};
    const std::size_t n = fp.size();
    for (std::size_t i = 0; i < n; ++i) {
      // Keep the clockwise order so that face indices match footprint edges.
      const geom::Point2 a = clockwise ? fp[i] : fp[n - 1 - i];
      const geom::Point2 c = clockwise ? fp[(i + 1) % n] : fp[(2 * n - 2 - i) % n];
      const geom::Point2 u = c - a;
      const double len = geom::norm(u);
      if (!(len > 0.0)) throw geom::GeometryError("degenerate footprint edge");
      // Interior on the right: the outward normal is the left normal.
      const double nx = -u.y / len;
      const double ny = u.x / len;
      planes_.push_back({nx, ny, nx * a.x + ny * a.y});
      points_.push_back(a);
      bb = {std::min(bb[0], a.x), std::min(bb[1], a.y), std::max(bb[2], a.x), std::max(bb[3], a.y)};
    }
    heights_.push_back(b.height);
    bounds_.push_back(bb);
    max_height_ = std::max(max_height_, b.height);
  }
  first_plane_.push_back(static_cast<std::uint32_t>(planes_.size()));
  first_point_.push_back(static_cast<std::uint32_t>(points_.size()));
}

std::span<const geom::Point2> PrismScene::footprint(std::size_t b) const {
  return std::span<const geom::Point2>(points_).subspan(first_point_[b],
                                                         first_point_[b + 1] - first_point_[b]);
}

double PrismScene::mean_diameter() const {
  if (bounds_.empty()) return 0.0;
  double s = 0.0;
  for (const auto& bb : bounds_) s += std::hypot(bb[2] - bb[0], bb[3] - bb[1]);
  return s / static_cast<double>(bounds_.size());
}

bool PrismScene::intersect(std::size_t b, Vec3 o, Vec3 d, FirstHit& best) const {
  const double h = heights_[b];
  double t_in = -kInf;
  double t_out = best.t;
  std::int32_t face = SurfaceRef::kRoof;

  if (d.z < 0.0) {
    const double tr = (h - o.z) / d.z;
    if (tr > t_in) t_in = tr;
    t_out = std::min(t_out, -o.z / d.z);
  } else if (d.z > 0.0) {
    t_out = std::min(t_out, (h - o.z) / d.z);
    const double tb = -o.z / d.z;
    if (tb > t_in) t_in = tb;
  } else if (o.z < 0.0 || o.z > h) {
    return false;
  }
  if (t_in > t_out) return false;

  const std::uint32_t p0 = first_plane_[b];
  const std::uint32_t p1 = first_plane_[b + 1];
  for (std::uint32_t i = p0; i < p1; ++i) {
    const Plane& pl = planes_[i];
    const double denom = pl.nx * d.x + pl.ny * d.y;
    const double num = pl.c - (pl.nx * o.x + pl.ny * o.y);
    if (denom == 0.0) {
      if (num < 0.0) return false;
      continue;
    }
    const double t = num / denom;
    if (denom < 0.0) {
      if (t > t_in) {
        t_in = t;
        face = static_cast<std::int32_t>(i - p0);
      }
    } else if (t < t_out) {
      t_out = t;
    }
    if (t_in > t_out) return false;
  }
  if (!(t_in > kMinT)) return false;
  if (!(t_in < best.t)) return false;

  best.hit = true;
  best.t = t_in;
  best.point = o + t_in * d;
  best.surface = {static_cast<std::int32_t>(b), face};
  if (face == SurfaceRef::kRoof) {
    best.normal = {0.0, 0.0, 1.0};
    best.point.z = h;
  } else {
    const Plane& pl = planes_[p0 + static_cast<std::uint32_t>(face)];
    best.normal = {pl.nx, pl.ny, 0.0};
  }
  return true;
}

FirstHit first_building_hit_brute(const PrismScene& scene, Vec3 o, Vec3 d, double tmax) {
  FirstHit best;
  best.t = tmax;
  for (std::size_t b = 0; b < scene.building_count(); ++b) scene.intersect(b, o, d, best);
  return best;
}

FirstHit first_hit(const PrismScene& scene, const QuadTreeIndex* index, Vec3 o, Vec3 d,
                   double tmax) {
  double t_ground = kInf;
  if (d.z < 0.0) t_ground = -o.z / d.z;
  double limit = std::min(tmax, t_ground);
  if (d.z > 0.0) limit = std::min(limit, (scene.max_height() - o.z) / d.z);

  FirstHit h;
  if (limit > PrismScene::kMinT && scene.building_count() > 0 &&
      !(d.z >= 0.0 && o.z >= scene.max_height())) {
    h = index ? index->first_building_hit(o, d, limit) : first_building_hit_brute(scene, o, d, limit);
  }
  if (h.hit) return h;
  if (t_ground < tmax && t_ground > PrismScene::kMinT) {
    h.hit = true;
    h.t = t_ground;
    h.point = o + t_ground * d;
    h.point.z = 0.0;
    h.normal = {0.0, 0.0, 1.0};
    h.surface = {SurfaceRef::kGround, SurfaceRef::kRoof};
  }
  return h;
}

// ---------------------------------------------------------------------------
// Tracing

namespace {

// Parameter at which o + t d leaves the vertical cylinder of radius r.
double cylinder_exit(Vec3 o, Vec3 d, double r) {
  const double a = d.x * d.x + d.y * d.y;
  if (a < 1e-30) return kInf;
  const double b = o.x * d.x + o.y * d.y;
  const double c = o.x * o.x + o.y * o.y - r * r;
  const double disc = b * b - a * c;
  if (disc <= 0.0) return 0.0;
  return (-b + std::sqrt(disc)) / a;
}

}  // namespace

TraceResult trace_ray(const PrismScene& scene, const QuadTreeIndex* index, Vec3 origin,
                      Vec3 direction, double omega, const TraceLimits& limits,
                      std::vector<GroundHit>& hits) {
  Vec3 o = origin;
  Vec3 d = direction;
  double power = 1.0;
  TraceResult result;
  const double r = scene.domain_radius();
  for (int n = 0;; ++n) {
    if (o.z < -1e-6) {
      throw GeometryLeak("ray below the ground at (" + std::to_string(o.x) + ", " +
                         std::to_string(o.y) + ", " + std::to_string(o.z) + ")");
    }
    result.bounces = n;
    if (power < limits.power_floor) {
      result.termination = Termination::PowerFloor;
      return result;
    }
    if (n > limits.max_bounces) {
      result.termination = Termination::MaxBounces;
      return result;
    }
    const double t_exit = cylinder_exit(o, d, r);
    const FirstHit h = first_hit(scene, index, o, d, t_exit);
    if (!h.hit) {
      result.termination = d.z >= 0.0 ? Termination::Escaped : Termination::ExitedDomain;
      return result;
    }
    if (h.surface.building == SurfaceRef::kGround) hits.push_back({h.point.x, h.point.y, d, n, omega});
    if (std::abs(dot(d, h.normal)) < 1e-12) {
      result.termination = Termination::Grazing;
      return result;
    }
    d = reflect(d, h.normal);
    o = h.point;
    power *= limits.gamma;
  }
}

std::vector<GroundHit> trace_ray(const PrismScene& scene, const QuadTreeIndex* index, Vec3 origin,
                                 Vec3 direction, double omega, const TraceLimits& limits) {
  std::vector<GroundHit> hits;
  trace_ray(scene, index, origin, direction, omega, limits, hits);
  return hits;
}

}  // namespace urbanprop::rt

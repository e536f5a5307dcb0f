#include "urbanprop/powermap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace urbanprop::pm {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

PolarGrid PolarGrid::make(double radius, double dd, double dalpha) {
  if (!(radius > 0.0) || !(dd > 0.0) || !(dalpha > 0.0) || dd > radius) {
    throw std::invalid_argument("polar grid needs 0 < dd <= radius and dalpha > 0");
  }
  PolarGrid g;
  g.radius = radius;
  g.dd = dd;
  const long sectors = std::lround(kTwoPi / dalpha);
  if (sectors < 1 || std::abs(sectors * dalpha - kTwoPi) > 1e-6 * kTwoPi) {
    throw std::invalid_argument("dalpha must divide the full turn");
  }
  g.n_sectors = static_cast<int>(sectors);
  g.dalpha = kTwoPi / static_cast<double>(sectors);
  g.n_crowns = static_cast<int>(std::ceil(radius / dd + 0.5));
  return g;
}

double PolarGrid::crown_inner(int j) const { return std::max(0.0, (j - 0.5) * dd); }
double PolarGrid::crown_outer(int j) const { return std::min(radius, (j + 0.5) * dd); }

double PolarGrid::pixel_area(int j) const {
  const double a = crown_inner(j);
  const double b = crown_outer(j);
  return 0.5 * (b * b - a * a) * dalpha;
}

std::optional<std::size_t> PolarGrid::locate(double x, double y) const {
  const double r = std::hypot(x, y);
  if (!(r < radius)) return std::nullopt;
  const int j = std::min(n_crowns - 1, static_cast<int>(std::floor(r / dd + 0.5)));
  double a = std::atan2(y, x);
  if (a < 0.0) a += kTwoPi;
  int k = static_cast<int>(std::floor(a / dalpha + 0.5));
  if (k >= n_sectors) k -= n_sectors;
  return index(j, k);
}

// ---------------------------------------------------------------------------

Accumulator::Accumulator(const PolarGrid& grid, double gamma, double cos_floor)
    : grid_(grid), gamma_(gamma), cos_floor_(cos_floor), sum_(grid.size()) {
  if (!(cos_floor > 0.0)) throw std::invalid_argument("cos floor must be positive");
  gamma_pow_.resize(256);
  double g = 1.0;
  for (double& v : gamma_pow_) {
    v = g;
    g *= gamma;
  }
}

void Accumulator::add(const rt::GroundHit& hit) {
  const auto idx = grid_.locate(hit.x, hit.y);
  if (!idx) return;
  const double gn = hit.n < static_cast<int>(gamma_pow_.size()) ? gamma_pow_[hit.n]
                                                                : std::pow(gamma_, hit.n);
  const double w = gn * hit.omega / std::max(std::abs(hit.direction.z), cos_floor_);
  sum_[*idx] = sum_[*idx] + w * hit.direction;
}

void Accumulator::add_all(std::span<const rt::GroundHit> hits) {
  for (const auto& h : hits) add(h);
}

void Accumulator::merge(const Accumulator& other) {
  if (!(other.grid_ == grid_)) throw std::invalid_argument("cannot merge accumulators on different grids");
  for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] = sum_[i] + other.sum_[i];
}

AttenuationMap Accumulator::finish(std::uint64_t n_rays, double p0,
                                   const std::vector<std::uint8_t>* mask) const {
  if (n_rays == 0) throw std::invalid_argument("ray count must be positive");
  if (mask && mask->size() != grid_.size()) throw std::invalid_argument("mask size mismatch");
  AttenuationMap m;
  m.grid = grid_;
  m.power.assign(grid_.size(), 0.0);
  m.masked.assign(grid_.size(), 0);
  for (int j = 0; j < grid_.n_crowns; ++j) {
    const double scale = p0 / (static_cast<double>(n_rays) * grid_.pixel_area(j));
    for (int k = 0; k < grid_.n_sectors; ++k) {
      const std::size_t i = grid_.index(j, k);
      if (mask && (*mask)[i]) {
        m.masked[i] = 1;
        continue;
      }
      m.power[i] = norm(sum_[i]) * scale;
    }
  }
  m.meta.n_rays = n_rays;
  m.meta.gamma = gamma_;
  m.meta.p0 = p0;
  m.meta.cos_floor = cos_floor_;
  return m;
}

AttenuationMap accumulate(const PolarGrid& grid, std::span<const rt::GroundHit> hits,
                          std::uint64_t n_rays, double gamma, double p0, double cos_floor,
                          const std::vector<std::uint8_t>* mask) {
  Accumulator acc(grid, gamma, cos_floor);
  acc.add_all(hits);
  return acc.finish(n_rays, p0, mask);
}

// ---------------------------------------------------------------------------

namespace {

// Uniform bucket grid over block bounding boxes for point queries.
class BlockLocator {
 public:
  explicit BlockLocator(std::span<const city::Block> blocks) : blocks_(blocks) {
    if (blocks.empty()) return;
    double x0 = std::numeric_limits<double>::infinity();
    double y0 = x0;
    double x1 = -x0;
    double y1 = -x0;
    std::vector<std::array<double, 4>> boxes;
    for (const auto& b : blocks) {
      const double inf = std::numeric_limits<double>::infinity();
      std::array<double, 4> bb{inf, inf, -inf, -inf};
      for (const auto& v : b.polygon.vertices()) {
        bb = {std::min(bb[0], v.x), std::min(bb[1], v.y), std::max(bb[2], v.x), std::max(bb[3], v.y)};
      }
      boxes.push_back(bb);
      x0 = std::min(x0, bb[0]);
      y0 = std::min(y0, bb[1]);
      x1 = std::max(x1, bb[2]);
      y1 = std::max(y1, bb[3]);
    }
    n_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(blocks.size()))));
    x0_ = x0;
    y0_ = y0;
    sx_ = std::max(x1 - x0, 1e-9) / static_cast<double>(n_);
    sy_ = std::max(y1 - y0, 1e-9) / static_cast<double>(n_);
    cells_.resize(n_ * n_);
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const auto [i0, j0] = cell_of(boxes[b][0], boxes[b][1]);
      const auto [i1, j1] = cell_of(boxes[b][2], boxes[b][3]);
      for (std::size_t j = j0; j <= j1; ++j) {
        for (std::size_t i = i0; i <= i1; ++i) cells_[j * n_ + i].push_back(b);
      }
    }
  }

  bool inside_any(geom::Point2 p) const {
    if (cells_.empty()) return false;
    const auto [i, j] = cell_of(p.x, p.y);
    for (std::size_t b : cells_[j * n_ + i]) {
      if (geom::contains(blocks_[b].polygon, p)) return true;
    }
    return false;
  }

 private:
  std::pair<std::size_t, std::size_t> cell_of(double x, double y) const {
    const auto clampi = [&](double f) {
      return static_cast<std::size_t>(std::clamp(std::floor(f), 0.0, static_cast<double>(n_ - 1)));
    };
    return {clampi((x - x0_) / sx_), clampi((y - y0_) / sy_)};
  }

  std::span<const city::Block> blocks_;
  std::size_t n_ = 0;
  double x0_ = 0.0, y0_ = 0.0, sx_ = 1.0, sy_ = 1.0;
  std::vector<std::vector<std::size_t>> cells_;
};

}  // namespace

std::vector<std::uint8_t> street_mask(const PolarGrid& grid, std::span<const city::Block> blocks) {
  std::vector<std::uint8_t> mask(grid.size(), 0);
  if (blocks.empty()) return mask;
  const BlockLocator locator(blocks);
  for (int j = 0; j < grid.n_crowns; ++j) {
    const double r0 = grid.crown_inner(j);
    const double r1 = grid.crown_outer(j);
    for (int k = 0; k < grid.n_sectors; ++k) {
      const double a0 = (k - 0.5) * grid.dalpha;
      bool all_inside = true;
      for (int s = 0; s < 16 && all_inside; ++s) {
        const double r = r0 + (s / 4 + 0.5) * 0.25 * (r1 - r0);
        const double a = a0 + (s % 4 + 0.5) * 0.25 * grid.dalpha;
        all_inside = locator.inside_any({r * std::cos(a), r * std::sin(a)});
      }
      mask[grid.index(j, k)] = all_inside ? 1 : 0;
    }
  }
  return mask;
}

void apply_mask(AttenuationMap& map, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != map.power.size()) throw std::invalid_argument("mask size mismatch");
  map.masked.resize(mask.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      map.power[i] = 0.0;
      map.masked[i] = 1;
    }
  }
}

// ---------------------------------------------------------------------------

double predicted_sigma_uniform(double phi, double n) {
  if (!(phi > 0.0 && phi < 1.0) || !(n > 0.0)) throw std::invalid_argument("need 0 < phi < 1, N > 0");
  return std::sqrt((1.0 - phi) / (n * phi));
}

double predicted_sigma_importance(double pixel_area, double n, double crown_area) {
  if (!(pixel_area > 0.0) || !(n > 0.0) || !(crown_area > 0.0)) {
    throw std::invalid_argument("areas and ray count must be positive");
  }
  return std::sqrt(crown_area / (n * pixel_area));
}

double free_space_power(const rt::SourceSpec& src, double d) {
  const double h = src.position.z;
  return src.p0 / (rt::solid_angle(src) * (d * d + h * h));
}

double free_space_flux(const rt::SourceSpec& src, double r0, double r1, double a0, double a1) {
  const double h = src.position.z;
  const double lo = src.el_min();
  const double hi = src.el_max();
  const auto elev = [&](double r) { return std::clamp(r > 0.0 ? std::atan(h / r) : hi, lo, hi); };
  const double sin_span = std::sin(hi) - std::sin(lo);
  const double radial = (std::sin(elev(r0)) - std::sin(elev(r1))) / sin_span;
  const double angular = std::clamp((a1 - a0) / (2.0 * src.az_halfwidth), 0.0, 1.0);
  return radial * angular;
}

double crown_inner_radius(const rt::SourceSpec& src) {
  return src.position.z / std::tan(src.el_max());
}

double crown_outer_radius(const rt::SourceSpec& src) {
  return src.el_min() > 0.0 ? src.position.z / std::tan(src.el_min())
                            : std::numeric_limits<double>::infinity();
}

}  // namespace urbanprop::pm

#include <algorithm>
#include <cmath>

#include "urbanprop/raytrace.hpp"

namespace urbanprop::rt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTouch = 1e-9;

// Separating-axis test between a convex footprint and an axis-aligned square.
bool footprint_meets_square(std::span<const geom::Point2> fp, const std::array<double, 4>& bb,
                            double x0, double y0, double x1, double y1) {
  if (bb[0] > x1 + kTouch || bb[2] < x0 - kTouch || bb[1] > y1 + kTouch || bb[3] < y0 - kTouch) {
    return false;
  }
  const std::size_t n = fp.size();
  for (std::size_t i = 0; i < n; ++i) {
    const geom::Point2 a = fp[i];
    const geom::Point2 u = fp[(i + 1) % n] - a;
    const geom::Point2 nrm{-u.y, u.x};  // outward for a clockwise ring
    const double c = geom::dot(nrm, a) + kTouch * geom::norm(u);
    const double m = std::min({geom::dot(nrm, {x0, y0}), geom::dot(nrm, {x1, y0}),
                               geom::dot(nrm, {x0, y1}), geom::dot(nrm, {x1, y1})});
    if (m > c) return false;
  }
  return true;
}

}  // namespace

QuadTreeIndex::QuadTreeIndex(const PrismScene& scene, int depth) : scene_(&scene), depth_(depth) {
  if (depth < 0 || depth > 14) throw std::invalid_argument("quadtree depth must lie in [0, 14]");
  side_ = std::size_t{1} << depth;
  const double r = scene.domain_radius();
  lo_ = -r;
  cell_ = 2.0 * r / static_cast<double>(side_);
  const std::size_t leaves = side_ * side_;

  std::vector<std::vector<std::uint32_t>> lists(leaves);
  leaf_height_.assign(leaves, -kInf);
  for (std::size_t b = 0; b < scene.building_count(); ++b) {
    const auto bb = scene.bounds(b);
    const auto clamp_index = [&](double v) {
      const double f = std::floor((v - lo_) / cell_);
      return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(side_ - 1)));
    };
    const std::size_t ix0 = clamp_index(bb[0] - kTouch);
    const std::size_t ix1 = clamp_index(bb[2] + kTouch);
    const std::size_t iy0 = clamp_index(bb[1] - kTouch);
    const std::size_t iy1 = clamp_index(bb[3] + kTouch);
    const auto fp = scene.footprint(b);
    for (std::size_t iy = iy0; iy <= iy1; ++iy) {
      for (std::size_t ix = ix0; ix <= ix1; ++ix) {
        const double x0 = lo_ + cell_ * static_cast<double>(ix);
        const double y0 = lo_ + cell_ * static_cast<double>(iy);
        // The outer ring of leaves extends to infinity so that nothing is lost.
        const double xa = ix == 0 ? -kInf : x0;
        const double xb = ix + 1 == side_ ? kInf : x0 + cell_;
        const double ya = iy == 0 ? -kInf : y0;
        const double yb = iy + 1 == side_ ? kInf : y0 + cell_;
        if (side_ == 1 || footprint_meets_square(fp, bb, std::max(xa, bb[0] - 1.0),
                                                 std::max(ya, bb[1] - 1.0),
                                                 std::min(xb, bb[2] + 1.0),
                                                 std::min(yb, bb[3] + 1.0))) {
          lists[iy * side_ + ix].push_back(static_cast<std::uint32_t>(b));
          leaf_height_[iy * side_ + ix] = std::max(leaf_height_[iy * side_ + ix], scene.height(b));
        }
      }
    }
  }
  offsets_.resize(leaves + 1, 0);
  for (std::size_t i = 0; i < leaves; ++i) {
    offsets_[i + 1] = offsets_[i] + static_cast<std::uint32_t>(lists[i].size());
  }
  items_.reserve(offsets_.back());
  for (const auto& l : lists) items_.insert(items_.end(), l.begin(), l.end());
}

std::span<const std::uint32_t> QuadTreeIndex::leaf(std::size_t ix, std::size_t iy) const {
  const std::size_t i = iy * side_ + ix;
  return std::span<const std::uint32_t>(items_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

FirstHit QuadTreeIndex::first_building_hit(Vec3 o, Vec3 d, double tmax) const {
  FirstHit best;
  best.t = tmax;
  const auto test_leaf = [&](std::size_t ix, std::size_t iy, double ta, double tb) {
    const std::size_t i = iy * side_ + ix;
    if (offsets_[i] == offsets_[i + 1]) return;
    const double za = o.z + d.z * ta;
    const double zb = o.z + d.z * tb;
    if (std::min(za, zb) > leaf_height_[i]) return;
    for (std::uint32_t k = offsets_[i]; k < offsets_[i + 1]; ++k) scene_->intersect(items_[k], o, d, best);
  };
  const auto index_of = [&](double v) {
    const double f = std::floor((v - lo_) / cell_);
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(side_ - 1)));
  };

  if (side_ == 1 || (std::abs(d.x) < 1e-300 && std::abs(d.y) < 1e-300)) {
    test_leaf(index_of(o.x), index_of(o.y), 0.0, std::isfinite(tmax) ? tmax : 0.0);
    return best;
  }

  // Leaves on the border extend to infinity, so the walk starts at t = 0
  // and only the interior lattice lines are crossed.
  std::size_t ix = index_of(o.x);
  std::size_t iy = index_of(o.y);
  const int sx = d.x > 0.0 ? 1 : (d.x < 0.0 ? -1 : 0);
  const int sy = d.y > 0.0 ? 1 : (d.y < 0.0 ? -1 : 0);
  const auto next_boundary = [&](std::size_t i, int s, double oc, double dc) {
    if (s == 0) return kInf;
    if (s > 0 && i + 1 >= side_) return kInf;
    if (s < 0 && i == 0) return kInf;
    const double edge = lo_ + cell_ * static_cast<double>(s > 0 ? i + 1 : i);
    return (edge - oc) / dc;
  };
  double tx = next_boundary(ix, sx, o.x, d.x);
  double ty = next_boundary(iy, sy, o.y, d.y);
  const double dtx = sx != 0 ? cell_ / std::abs(d.x) : kInf;
  const double dty = sy != 0 ? cell_ / std::abs(d.y) : kInf;
  double t = 0.0;
  for (;;) {
    const double t_next = std::min({tx, ty, tmax});
    test_leaf(ix, iy, t, std::isfinite(t_next) ? t_next : t);
    if (best.hit && best.t <= t_next) break;
    if (!(t_next < tmax)) break;
    t = t_next;
    if (tx <= ty) {
      if ((sx > 0 && ix + 1 >= side_) || (sx < 0 && ix == 0)) break;
      ix = static_cast<std::size_t>(static_cast<long long>(ix) + sx);
      tx = (sx > 0 && ix + 1 >= side_) || (sx < 0 && ix == 0) ? kInf : tx + dtx;
    } else {
      if ((sy > 0 && iy + 1 >= side_) || (sy < 0 && iy == 0)) break;
      iy = static_cast<std::size_t>(static_cast<long long>(iy) + sy);
      ty = (sy > 0 && iy + 1 >= side_) || (sy < 0 && iy == 0) ? kInf : ty + dty;
    }
  }
  return best;
}

int auto_depth(const PrismScene& scene) {
  const double diameter = scene.mean_diameter();
  if (scene.building_count() == 0 || !(diameter > 0.0)) return 0;
  const double leaves_per_side = 2.0 * scene.domain_radius() / (2.0 * diameter);
  const int m = static_cast<int>(std::lround(std::log2(std::max(1.0, leaves_per_side))));
  return std::clamp(m, 0, 12);
}

}  // namespace urbanprop::rt

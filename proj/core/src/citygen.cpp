#include "urbanprop/citygen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace urbanprop::city {

using geom::ConvexPolygon;
using geom::Point2;

namespace {

struct KeyHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const {
    return std::hash<std::uint64_t>{}(k.first * 0x9E3779B97F4A7C15ULL ^ k.second);
  }
};

std::pair<std::uint64_t, std::uint64_t> key_of(Point2 p) {
  const double x = p.x == 0.0 ? 0.0 : p.x;
  const double y = p.y == 0.0 ? 0.0 : p.y;
  return {std::bit_cast<std::uint64_t>(x), std::bit_cast<std::uint64_t>(y)};
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<Axis> extract_axes(const tess::Tessellation& t) {
  std::vector<tess::EcId> edges;
  for (tess::EcId ec = 0; ec < t.container_count(); ++ec) {
    const auto& c = t.container(ec);
    if (c.opposite != tess::kNoLink && ec < c.opposite) edges.push_back(ec);
  }
  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::size_t>, KeyHash>
      incident;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = t.container(edges[i]).edge;
    incident[key_of(*e.start())].push_back(i);
    incident[key_of(*e.end())].push_back(i);
  }
  UnionFind uf(edges.size());
  for (const auto& [key, list] : incident) {
    for (std::size_t a = 0; a < list.size(); ++a) {
      for (std::size_t b = a + 1; b < list.size(); ++b) {
        const Point2 ua = t.container(edges[list[a]]).edge.support().direction;
        const Point2 ub = t.container(edges[list[b]]).edge.support().direction;
        if (std::abs(geom::cross(ua, ub)) < 1e-9) uf.unite(list[a], list[b]);
      }
    }
  }
  std::map<std::size_t, Axis> groups;  // keyed by smallest member index
  for (std::size_t i = 0; i < edges.size(); ++i) groups[uf.find(i)].edges.push_back(edges[i]);

  std::vector<Axis> axes;
  axes.reserve(groups.size());
  for (auto& [root, axis] : groups) {
    const geom::DirectedLine& s = t.container(axis.edges.front()).edge.support();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (tess::EcId ec : axis.edges) {
      const auto& e = t.container(ec).edge;
      for (const Point2 p : {*e.start(), *e.end()}) {
        const double u = s.param_of(p);
        if (u < lo) {
          lo = u;
          axis.a = p;
        }
        if (u > hi) {
          hi = u;
          axis.b = p;
        }
      }
    }
    axes.push_back(std::move(axis));
  }
  return axes;
}

std::vector<Block> blocks_from_cells(const tess::Tessellation& t, double street_width) {
  if (!(street_width > 0.0)) throw std::invalid_argument("street width must be positive");
  std::vector<Block> blocks;
  blocks.reserve(t.cell_count());
  for (tess::CellId c = 0; c < t.cell_count(); ++c) {
    if (auto eroded = geom::erode(t.cell_polygon(c), 0.5 * street_width)) {
      blocks.push_back({std::move(*eroded), c});
    }
  }
  return blocks;
}

std::vector<std::vector<Point2>> generate_footprints(const ConvexPolygon& block, double facade_b,
                                                     double eta_dil, Rng& rng) {
  if (!(eta_dil > 0.0 && eta_dil < 1.0)) throw std::invalid_argument("eta_dil must lie in (0,1)");
  if (!(facade_b > 0.0)) throw std::invalid_argument("facade length must be positive");

  const std::vector<Point2> outer = block.vertices();
  const std::size_t n = outer.size();
  const Point2 c = block.centroid();
  std::vector<Point2> inner(n);
  std::vector<double> arc(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) inner[k] = c + eta_dil * (outer[k] - c);
  for (std::size_t k = 0; k < n; ++k) arc[k + 1] = arc[k] + geom::distance(inner[k], inner[(k + 1) % n]);
  const double per = arc[n];

  const std::uint64_t m = poisson(rng, per / (facade_b * eta_dil));
  std::vector<std::vector<Point2>> out;
  if (m < 2) return out;
  std::vector<double> s(m);
  for (double& x : s) x = uniform(rng, 0.0, per);
  std::sort(s.begin(), s.end());

  struct Station {
    Point2 in;
    Point2 out;
  };
  const auto to_outer = [&](Point2 p) { return c + (1.0 / eta_dil) * (p - c); };
  const auto station_at = [&](double u) -> Station {
    u = std::fmod(u, per);
    const std::size_t k = std::min<std::size_t>(
        n - 1, static_cast<std::size_t>(std::upper_bound(arc.begin(), arc.end(), u) - arc.begin()) - 1);
    const double len = arc[k + 1] - arc[k];
    const double f = len > 0.0 ? (u - arc[k]) / len : 0.0;
    const Point2 p = inner[k] + f * (inner[(k + 1) % n] - inner[k]);
    return {p, to_outer(p)};
  };

  std::vector<Station> chain;
  for (std::size_t i = 0; i < m; ++i) {
    const double s0 = s[i];
    const double s1 = i + 1 < m ? s[i + 1] : s[0] + per;
    chain.clear();
    chain.push_back(station_at(s0));
    // Corners strictly between s0 and s1, including those after wrapping.
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const double ak = arc[k % n] + (k >= n ? per : 0.0);
      if (ak > s0 && ak < s1) chain.push_back({inner[k % n], outer[k % n]});
    }
    chain.push_back(station_at(s1));
    for (std::size_t q = 0; q + 1 < chain.size(); ++q) {
      const Station& u = chain[q];
      const Station& w = chain[q + 1];
      if (geom::distance(u.in, w.in) < geom::kTol) continue;
      std::vector<Point2> quad{u.in, u.out, w.out, w.in};
      if (geom::signed_area(std::span<const Point2>(quad)) > 0.0) std::reverse(quad.begin(), quad.end());
      out.push_back(std::move(quad));
    }
  }
  return out;
}

void assign_heights(std::span<Building> buildings, double h_mean, Rng& rng) {
  if (!(h_mean > 0.0)) throw std::invalid_argument("mean height must be positive");
  for (Building& b : buildings) {
    double h = 0.0;
    while (!(h > 0.0)) h = exponential(rng, 1.0 / h_mean);
    b.height = h;
  }
}

CityScene assemble_scene(std::vector<Block> blocks, std::vector<Building> buildings,
                         double domain_radius) {
  if (!(domain_radius > 0.0)) throw std::invalid_argument("domain radius must be positive");
  CityScene s;
  s.blocks = std::move(blocks);
  s.buildings = std::move(buildings);
  s.domain_radius = domain_radius;
  return s;
}

std::size_t reflective_surface_count(const CityScene& scene) {
  std::size_t n = 1;
  for (const Building& b : scene.buildings) n += b.footprint.size() + 1;
  return n;
}

Vec3 place_antenna(CityScene& scene, double delta_h, double fallback_height) {
  if (scene.buildings.empty()) {
    scene.antenna = {0.0, 0.0, fallback_height};
    scene.antenna_fallback = true;
    return scene.antenna;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const Building& b : scene.buildings) {
    const Point2 c = geom::ring_centroid(b.footprint);
    const double d = geom::norm(c);
    if (d < best) {
      best = d;
      scene.antenna = {c.x, c.y, b.height + delta_h};
    }
  }
  scene.antenna_fallback = false;
  return scene.antenna;
}

void CityParams::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(u2, "u2");
  positive(street_w, "street width");
  positive(facade_b, "facade length");
  positive(height_h, "mean height");
  positive(delta_h, "antenna offset");
  positive(r_window, "window radius");
  if (!(delta_r >= 0.0)) throw std::invalid_argument("delta_r must be non-negative");
  if (!(eta_dil > 0.0 && eta_dil < 1.0)) throw std::invalid_argument("eta_dil must lie in (0,1)");
  if (window_sides < 3) throw std::invalid_argument("window needs at least 3 sides");
  tess::AnisotropyLaw{rho, theta}.validate();
}

double CityParams::lambda() const {
  return tess::calibrate_intensity(u2, tess::xi(tess::AnisotropyLaw{rho, theta}));
}

ConvexPolygon city_window(const CityParams& p) {
  const double r = p.domain_radius();
  return ConvexPolygon::regular_with_area({0.0, 0.0}, std::numbers::pi * r * r, p.window_sides);
}

CityScene generate_city(const CityParams& p, std::uint64_t seed) {
  p.validate();
  const ConvexPolygon window = city_window(p);
  const tess::AnisotropyLaw law{p.rho, p.theta};
  const double lambda = p.lambda();

  Rng trng = make_rng(seed, 0);
  const tess::Tessellation t = p.model == tess::Model::Plt
                                   ? tess::generate_plt(lambda, law, window, trng)
                                   : tess::generate_stit(lambda, 1.0, law, window, trng);

  std::vector<Block> blocks = blocks_from_cells(t, p.street_w);
  std::vector<Building> buildings;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Rng brng = make_rng(seed, 1, i);
    const std::size_t first = buildings.size();
    for (auto& fp : generate_footprints(blocks[i].polygon, p.facade_b, p.eta_dil, brng)) {
      buildings.push_back({std::move(fp), 0.0, static_cast<std::uint32_t>(i)});
    }
    assign_heights(std::span(buildings).subspan(first), p.height_h, brng);
  }
  CityScene scene = assemble_scene(std::move(blocks), std::move(buildings), p.domain_radius());
  place_antenna(scene, p.delta_h);
  return scene;
}

std::string model_name(tess::Model model) { return model == tess::Model::Plt ? "plt" : "stit"; }

tess::Model parse_model(const std::string& name) {
  if (name == "plt") return tess::Model::Plt;
  if (name == "stit" || name == "crack") return tess::Model::Stit;
  throw std::invalid_argument("unknown model '" + name + "' (expected plt or stit)");
}

}  // namespace urbanprop::city

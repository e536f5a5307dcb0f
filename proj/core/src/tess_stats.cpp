#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "urbanprop/tessellation.hpp"

namespace urbanprop::tess {

MeanValues analytic_means(Model model, double l_a, double xi_value) {
  MeanValues m;
  const double l2x = l_a * l_a * xi_value;
  m.l_a = l_a;
  if (model == Model::Plt) {
    m.n0 = 0.5 * l2x;
    m.n1 = l2x;
    m.n2 = 0.5 * l2x;
    m.u1 = 1.0 / (l_a * xi_value);
  } else {
    m.n0 = l2x;
    m.n1 = 1.5 * l2x;
    m.n2 = 0.5 * l2x;
    m.u1 = 2.0 / (3.0 * l_a * xi_value);
  }
  m.u2 = 4.0 / (l_a * xi_value);
  m.a2 = 2.0 / l2x;
  return m;
}

namespace {

struct KeyHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const {
    return std::hash<std::uint64_t>{}(k.first * 0x9E3779B97F4A7C15ULL ^ k.second);
  }
};

std::pair<std::uint64_t, std::uint64_t> key_of(geom::Point2 p) {
  // +0.0 and -0.0 must coincide.
  const double x = p.x == 0.0 ? 0.0 : p.x;
  const double y = p.y == 0.0 ? 0.0 : p.y;
  return {std::bit_cast<std::uint64_t>(x), std::bit_cast<std::uint64_t>(y)};
}

struct VertexInfo {
  int degree = 0;
  bool boundary = false;
};

}  // namespace

TessStats summarize(const Tessellation& t) {
  TessStats s;
  s.window_area = t.window().area();
  s.cells = t.cell_count();

  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, VertexInfo, KeyHash> vertices;
  vertices.reserve(t.container_count());
  std::size_t directed_interior = 0;
  double directed_length = 0.0;
  for (const Cell& cell : t.cells()) {
    for (EcId ec : cell.boundary) {
      const EdgeContainer& c = t.container(ec);
      VertexInfo& v = vertices[key_of(*c.edge.start())];
      ++v.degree;
      if (c.opposite == kNoLink) {
        v.boundary = true;
        vertices[key_of(*c.edge.end())].boundary = true;
      } else {
        ++directed_interior;
        directed_length += c.edge.length();
      }
    }
  }
  s.interior_edges = directed_interior / 2;
  s.interior_edge_length = 0.5 * directed_length;
  for (const auto& [key, v] : vertices) {
    if (v.boundary) continue;
    ++s.interior_vertices;
    s.interior_edge_ends += v.degree;
  }
  for (CellId c = 0; c < t.cell_count(); ++c) {
    const auto verts = t.cell_vertices(c);
    const auto lowest = std::min_element(verts.begin(), verts.end(), [](auto a, auto b) {
      return a.y < b.y || (a.y == b.y && a.x < b.x);
    });
    if (!vertices.at(key_of(*lowest)).boundary) ++s.anchored_cells;
  }

  const double a = s.window_area;
  s.l_a = s.interior_edge_length / a;
  s.n0 = static_cast<double>(s.interior_vertices) / a;
  s.n1 = 0.5 * s.interior_edge_ends / a;
  s.n2 = static_cast<double>(s.anchored_cells) / a;
  s.euler = s.n0 - s.n1 + s.n2;
  return s;
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // sample variance
};

template <class F>
Moments moments(std::span<const TessStats> runs, F f) {
  Moments m;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) m.mean += f(r);
  m.mean /= n;
  if (runs.size() > 1) {
    for (const auto& r : runs) m.var += (f(r) - m.mean) * (f(r) - m.mean);
    m.var /= n - 1.0;
  }
  return m;
}

Estimate as_estimate(const Moments& m, std::size_t n) {
  return {m.mean, std::sqrt(m.var / static_cast<double>(n))};
}

// scale * mean(x) / mean(y) with a delta-method standard error.
template <class FX, class FY>
Estimate ratio(std::span<const TessStats> runs, double scale, FX fx, FY fy) {
  const Moments mx = moments(runs, fx);
  const Moments my = moments(runs, fy);
  const double r = mx.mean / my.mean;
  const Moments resid = moments(runs, [&](const TessStats& s) { return fx(s) - r * fy(s); });
  const double se = std::sqrt(resid.var / static_cast<double>(runs.size())) / std::abs(my.mean);
  return {scale * r, std::abs(scale) * se};
}

}  // namespace

EnsembleStats aggregate(std::span<const TessStats> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  EnsembleStats e;
  const std::size_t n = runs.size();
  e.runs = n;
  const auto la = [](const TessStats& s) { return s.l_a; };
  const auto n1 = [](const TessStats& s) { return s.n1; };
  const auto n2 = [](const TessStats& s) { return s.n2; };
  const auto one = [](const TessStats&) { return 1.0; };
  e.l_a = as_estimate(moments(runs, la), n);
  e.n0 = as_estimate(moments(runs, [](const TessStats& s) { return s.n0; }), n);
  e.n1 = as_estimate(moments(runs, n1), n);
  e.n2 = as_estimate(moments(runs, n2), n);
  e.u1 = ratio(runs, 1.0, la, n1);
  e.u2 = ratio(runs, 2.0, la, n2);
  e.a2 = ratio(runs, 1.0, one, n2);
  return e;
}

}  // namespace urbanprop::tess

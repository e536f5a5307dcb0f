#pragma once

// Shared helpers for the unit tests.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "urbanprop/geom.hpp"
#include "urbanprop/rng.hpp"

namespace testing {

using urbanprop::geom::ConvexPolygon;
using urbanprop::geom::Point2;

inline ConvexPolygon square(double x0, double y0, double x1, double y1) {
  const std::vector<Point2> v{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  return *ConvexPolygon::from_vertices(v);
}

inline ConvexPolygon unit_square() { return square(0.0, 0.0, 1.0, 1.0); }

/// Convex polygon from 3 to 12 random points on an ellipse.
inline ConvexPolygon random_convex(urbanprop::Rng& rng) {
  for (;;) {
    const int n = 3 + static_cast<int>(rng() % 10);
    const double a = urbanprop::uniform(rng, 0.5, 5.0);
    const double b = urbanprop::uniform(rng, 0.5, 5.0);
    const Point2 c{urbanprop::uniform(rng, -3.0, 3.0), urbanprop::uniform(rng, -3.0, 3.0)};
    std::vector<double> angles(static_cast<std::size_t>(n));
    for (double& t : angles) t = urbanprop::uniform(rng, 0.0, 2.0 * std::numbers::pi);
    std::sort(angles.begin(), angles.end());
    std::vector<Point2> v;
    for (double t : angles) v.push_back({c.x + a * std::cos(t), c.y + b * std::sin(t)});
    if (auto p = ConvexPolygon::from_vertices(v); p && p->area() > 1e-3) return *p;
  }
}

/// Random line through the box [-8, 8]^2.
inline urbanprop::geom::DirectedLine random_line(urbanprop::Rng& rng) {
  return urbanprop::geom::DirectedLine::from_angle(
      {urbanprop::uniform(rng, -8.0, 8.0), urbanprop::uniform(rng, -8.0, 8.0)},
      urbanprop::uniform(rng, 0.0, 2.0 * std::numbers::pi));
}

inline bool point_in_ring(const std::vector<Point2>& ring, Point2 p) {
  // Even-odd rule.
  bool in = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Point2 a = ring[i];
    const Point2 b = ring[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

}  // namespace testing

#include "urbanprop/geom.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace urbanprop::geom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kParallel = 1e-12;

Side classify(double signed_dist, double tol) {
  if (signed_dist > tol) return Side::Positive;
  if (signed_dist < -tol) return Side::Negative;
  return Side::On;
}

// Point where the segment a->b crosses the line, given the signed distances
// of its endpoints (which must have strictly opposite signs).
Point2 crossing_point(Point2 a, Point2 b, double da, double db) {
  const double t = da / (da - db);
  return a + t * (b - a);
}

// Sutherland-Hodgman style split of a bounded polygon keeping the side
// `keep`. Each output vertex carries the support of the edge that starts at it.
std::optional<ConvexPolygon> keep_side(const std::vector<Point2>& verts,
                                       const std::vector<DirectedLine>& supports,
                                       const std::vector<double>& dist,
                                       const std::vector<Side>& sides, const DirectedLine& line,
                                       Side keep) {
  const std::size_t n = verts.size();
  const DirectedLine bridge = keep == Side::Positive ? line.reversed() : line;
  const auto inside = [keep](Side s) { return s == keep || s == Side::On; };

  std::vector<Point2> out_pts;
  std::vector<DirectedLine> out_sup;
  out_pts.reserve(n + 2);
  out_sup.reserve(n + 2);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const Side si = sides[i];
    const Side sj = sides[j];
    if (inside(si)) {
      out_pts.push_back(verts[i]);
      out_sup.push_back(inside(sj) ? supports[i] : bridge);
      if (si == keep && sj != Side::On && sj != keep) {
        // Leaving the kept side through the interior of edge i.
        out_sup.back() = supports[i];
        out_pts.push_back(crossing_point(verts[i], verts[j], dist[i], dist[j]));
        out_sup.push_back(bridge);
      }
    } else if (sj == keep) {
      // Entering the kept side through the interior of edge i.
      out_pts.push_back(crossing_point(verts[i], verts[j], dist[i], dist[j]));
      out_sup.push_back(supports[i]);
    }
  }

  // Drop vertices that coincide with their successor.
  std::vector<Point2> pts;
  std::vector<DirectedLine> sup;
  for (std::size_t i = 0; i < out_pts.size(); ++i) {
    const Point2 next = out_pts[(i + 1) % out_pts.size()];
    if (distance(out_pts[i], next) <= kTol) continue;
    pts.push_back(out_pts[i]);
    sup.push_back(out_sup[i]);
  }
  if (pts.size() < 3) return std::nullopt;
  if (std::abs(signed_area(pts)) <= kTol * kTol) return std::nullopt;

  std::vector<Edge> edges;
  edges.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    edges.push_back(Edge::segment_on(sup[i], pts[i], pts[(i + 1) % pts.size()]));
  }
  return ConvexPolygon::from_edges(std::move(edges));
}

Division divide_bounded(const ConvexPolygon& polygon, const DirectedLine& line) {
  const std::vector<Point2> verts = polygon.vertices();
  const std::vector<DirectedLine> supports = polygon.supports();
  const std::size_t n = verts.size();
  std::vector<double> dist(n);
  std::vector<Side> sides(n);
  bool any_pos = false;
  bool any_neg = false;
  bool any_on = false;
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = line.signed_distance(verts[i]);
    sides[i] = classify(dist[i], kTol);
    any_pos |= sides[i] == Side::Positive;
    any_neg |= sides[i] == Side::Negative;
    any_on |= sides[i] == Side::On;
  }

  Division result;
  if (!any_neg) {
    result.positive = polygon;
    return result;
  }
  if (!any_pos) {
    result.negative = polygon;
    return result;
  }
  result.vertex_hit = any_on;
  result.positive = keep_side(verts, supports, dist, sides, line, Side::Positive);
  result.negative = keep_side(verts, supports, dist, sides, line, Side::Negative);
  return result;
}

// Orders half-plane-derived edges into a circular clockwise boundary.
std::vector<Edge> chain_edges(std::vector<Edge> edges) {
  std::vector<Edge> ordered;
  ordered.reserve(edges.size());
  std::vector<bool> used(edges.size(), false);

  auto pick_open_start = [&]() -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!used[i] && !edges[i].start()) return i;
    }
    return std::nullopt;
  };

  std::optional<std::size_t> current = pick_open_start();
  if (!current) current = 0;
  while (current) {
    used[*current] = true;
    ordered.push_back(edges[*current]);
    const auto& end = edges[*current].end();
    current.reset();
    if (end) {
      double best = kInf;
      for (std::size_t i = 0; i < edges.size(); ++i) {
        if (used[i] || !edges[i].start()) continue;
        const double d = distance(*end, *edges[i].start());
        if (d < best) {
          best = d;
          current = i;
        }
      }
    } else {
      current = pick_open_start();
    }
  }
  // Anything left over (degenerate input) is appended in its original order.
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!used[i]) ordered.push_back(edges[i]);
  }
  return ordered;
}

}  // namespace

DirectedLine DirectedLine::through(Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len = norm(d);
  if (len == 0.0) throw GeometryError("DirectedLine::through: coincident points");
  return {a, (1.0 / len) * d};
}

DirectedLine DirectedLine::from_angle(Point2 origin, double angle) {
  return {origin, {std::cos(angle), std::sin(angle)}};
}

Side side_of(const DirectedLine& line, Point2 p, double tol) {
  return classify(line.signed_distance(p), tol);
}

// ---------------------------------------------------------------------------
// Edge

Edge Edge::segment(Point2 a, Point2 b) { return Edge(DirectedLine::through(a, b), a, b); }

Edge Edge::segment_on(const DirectedLine& support, Point2 a, Point2 b) {
  return Edge(support, a, b);
}

Edge Edge::half_line_from(const DirectedLine& support, Point2 start) {
  return Edge(support, start, std::nullopt);
}

Edge Edge::half_line_to(const DirectedLine& support, Point2 end) {
  return Edge(support, std::nullopt, end);
}

Edge Edge::line(const DirectedLine& support) { return Edge(support, std::nullopt, std::nullopt); }

EdgeKind Edge::kind() const {
  if (start_ && end_) return EdgeKind::Segment;
  if (start_ || end_) return EdgeKind::HalfLine;
  return EdgeKind::Line;
}

std::pair<double, double> Edge::interval() const {
  return {start_ ? support_.param_of(*start_) : -kInf, end_ ? support_.param_of(*end_) : kInf};
}

double Edge::length() const { return bounded() ? distance(*start_, *end_) : kInf; }

Edge Edge::reversed() const { return Edge(support_.reversed(), end_, start_); }

// ---------------------------------------------------------------------------
// ConvexPolygon

std::optional<ConvexPolygon> ConvexPolygon::from_vertices(std::span<const Point2> vertices) {
  std::vector<Point2> pts;
  pts.reserve(vertices.size());
  for (const Point2& p : vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
    if (!pts.empty() && distance(pts.back(), p) <= kTol) continue;
    pts.push_back(p);
  }
  while (pts.size() > 1 && distance(pts.front(), pts.back()) <= kTol) pts.pop_back();
  if (pts.size() < 3) return std::nullopt;

  const double area2 = geom::signed_area(std::span<const Point2>(pts));
  if (std::abs(area2) <= kTol * kTol) return std::nullopt;
  if (area2 > 0.0) std::reverse(pts.begin(), pts.end());

  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = pts[i];
    const Point2 b = pts[(i + 1) % n];
    const Point2 c = pts[(i + 2) % n];
    // Clockwise boundaries only turn right.
    if (cross(b - a, c - b) > kTol * std::max(1.0, norm(b - a) * norm(c - b))) return std::nullopt;
  }

  std::vector<Edge> edges;
  edges.reserve(n);
  for (std::size_t i = 0; i < n; ++i) edges.push_back(Edge::segment(pts[i], pts[(i + 1) % n]));
  return ConvexPolygon(std::move(edges));
}

std::optional<ConvexPolygon> ConvexPolygon::from_halfplanes(
    std::span<const DirectedLine> boundaries) {
  if (boundaries.empty()) return whole_plane();

  std::vector<Edge> edges;
  const std::size_t n = boundaries.size();
  for (std::size_t i = 0; i < n; ++i) {
    const DirectedLine& li = boundaries[i];
    double lo = -kInf;
    double hi = kInf;
    bool dropped = false;
    for (std::size_t j = 0; j < n && !dropped; ++j) {
      if (j == i) continue;
      const DirectedLine& lj = boundaries[j];
      // Signed distance of li(t) to lj is c + k t; the kept side is <= 0.
      const double c = lj.signed_distance(li.origin);
      const double k = cross(lj.direction, li.direction);
      if (std::abs(k) < kParallel) {
        if (c > kTol) {
          dropped = true;
        } else if (std::abs(c) <= kTol) {
          if (dot(li.direction, lj.direction) > 0.0) {
            dropped = j < i;  // duplicate boundary: keep the first copy
          } else {
            return std::nullopt;  // opposite coincident half-planes: zero width
          }
        }
        continue;
      }
      const double t = -c / k;
      if (k > 0.0) {
        hi = std::min(hi, t);
      } else {
        lo = std::max(lo, t);
      }
      if (hi - lo <= kTol) dropped = true;
    }
    if (dropped || hi - lo <= kTol) continue;

    if (std::isinf(lo) && std::isinf(hi)) {
      edges.push_back(Edge::line(li));
    } else if (std::isinf(lo)) {
      edges.push_back(Edge::half_line_to(li, li.at(hi)));
    } else if (std::isinf(hi)) {
      edges.push_back(Edge::half_line_from(li, li.at(lo)));
    } else {
      edges.push_back(Edge::segment_on(li, li.at(lo), li.at(hi)));
    }
  }
  if (edges.empty()) return std::nullopt;

  ConvexPolygon result(chain_edges(std::move(edges)));
  if (result.bounded()) {
    if (result.size() < 3 || result.area() <= kTol * kTol) return std::nullopt;
  }
  return result;
}

ConvexPolygon ConvexPolygon::from_edges(std::vector<Edge> edges) {
  return ConvexPolygon(std::move(edges));
}

ConvexPolygon ConvexPolygon::regular(Point2 center, double radius, int sides, double phase) {
  if (sides < 3 || !(radius > 0.0)) throw GeometryError("regular polygon needs >= 3 sides");
  std::vector<Point2> pts(static_cast<std::size_t>(sides));
  for (int i = 0; i < sides; ++i) {
    // Decreasing angle gives a clockwise ring.
    const double a = phase - 2.0 * std::numbers::pi * i / sides;
    pts[static_cast<std::size_t>(i)] = {center.x + radius * std::cos(a),
                                        center.y + radius * std::sin(a)};
  }
  return *from_vertices(pts);
}

ConvexPolygon ConvexPolygon::regular_with_area(Point2 center, double area, int sides) {
  const double radius = std::sqrt(2.0 * area / (sides * std::sin(2.0 * std::numbers::pi / sides)));
  return regular(center, radius, sides);
}

bool ConvexPolygon::bounded() const {
  if (edges_.empty()) return false;
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.bounded(); });
}

std::vector<Point2> ConvexPolygon::vertices() const {
  std::vector<Point2> out;
  out.reserve(edges_.size());
  for (const Edge& e : edges_) {
    if (e.start()) out.push_back(*e.start());
  }
  return out;
}

std::vector<DirectedLine> ConvexPolygon::supports() const {
  std::vector<DirectedLine> out;
  out.reserve(edges_.size());
  for (const Edge& e : edges_) out.push_back(e.support());
  return out;
}

double ConvexPolygon::signed_area() const {
  if (!bounded()) return -kInf;
  const auto v = vertices();
  return geom::signed_area(v);
}

double ConvexPolygon::area() const { return std::abs(signed_area()); }

double ConvexPolygon::perimeter() const {
  double p = 0.0;
  for (const Edge& e : edges_) p += e.length();
  return edges_.empty() ? kInf : p;
}

Point2 ConvexPolygon::centroid() const {
  if (!bounded()) throw GeometryError("centroid of an unbounded polygon");
  const auto v = vertices();
  return ring_centroid(v);
}

bool ConvexPolygon::is_valid(double tol) const {
  const std::size_t n = edges_.size();
  if (n == 0) return true;
  for (std::size_t i = 0; i < n; ++i) {
    const Edge& e = edges_[i];
    if (std::abs(norm(e.support().direction) - 1.0) > 1e-12) return false;
    if (e.bounded()) {
      const Point2 d = *e.end() - *e.start();
      if (dot(d, e.support().direction) <= 0.0) return false;
    }
    if (e.start() && std::abs(e.support().signed_distance(*e.start())) > tol) return false;
    if (e.end() && std::abs(e.support().signed_distance(*e.end())) > tol) return false;
    const Edge& next = edges_[(i + 1) % n];
    if (e.end().has_value() != next.start().has_value()) {
      // A finite end must be followed by the edge starting there; an open end
      // is followed by an edge coming from infinity.
      return false;
    }
    if (e.end() && distance(*e.end(), *next.start()) > tol) return false;
  }
  // Every finite vertex lies on the kept (right) side of every support.
  for (const Edge& e : edges_) {
    for (const Edge& f : edges_) {
      for (const auto& p : {f.start(), f.end()}) {
        if (p && e.support().signed_distance(*p) > tol) return false;
      }
    }
  }
  if (bounded() && signed_area() >= 0.0) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Operations

Division divide_polygon(const ConvexPolygon& polygon, const DirectedLine& line) {
  if (polygon.bounded()) return divide_bounded(polygon, line);

  // Unbounded polygons (including the whole plane) go through the half-plane
  // representation.
  std::vector<DirectedLine> planes = polygon.supports();
  Division result;
  planes.push_back(line.reversed());
  result.positive = ConvexPolygon::from_halfplanes(planes);
  planes.back() = line;
  result.negative = ConvexPolygon::from_halfplanes(planes);
  for (const Edge& e : polygon.edges()) {
    for (const auto& p : {e.start(), e.end()}) {
      if (p && side_of(line, *p) == Side::On) result.vertex_hit = true;
    }
  }
  if (!result.positive || !result.negative) result.vertex_hit = false;
  return result;
}

std::optional<ConvexPolygon> erode(const ConvexPolygon& polygon, double eps) {
  std::vector<DirectedLine> planes = polygon.supports();
  for (DirectedLine& l : planes) l.origin = l.origin + eps * right_normal(l.direction);
  return ConvexPolygon::from_halfplanes(planes);
}

ConvexPolygon dilate_about_centroid(const ConvexPolygon& polygon, double ratio) {
  if (!polygon.bounded()) throw GeometryError("dilate_about_centroid needs a bounded polygon");
  const Point2 c = polygon.centroid();
  const auto map = [&](Point2 p) { return c + ratio * (p - c); };
  std::vector<Edge> edges;
  edges.reserve(polygon.size());
  for (const Edge& e : polygon.edges()) {
    const DirectedLine support{map(e.support().origin), e.support().direction};
    edges.push_back(Edge::segment_on(support, map(*e.start()), map(*e.end())));
  }
  return ConvexPolygon::from_edges(std::move(edges));
}

Point2 project_onto_boundary(const ConvexPolygon& polygon, Point2 p) {
  if (polygon.is_whole_plane()) throw GeometryError("the whole plane has no boundary");
  double best = kInf;
  Point2 best_point = p;
  for (const Edge& e : polygon.edges()) {
    const auto [lo, hi] = e.interval();
    const double t = std::clamp(e.support().param_of(p), lo, hi);
    Point2 q = e.support().at(t);
    if (t == lo && e.start()) q = *e.start();
    if (t == hi && e.end()) q = *e.end();
    const double d = distance(p, q);
    if (d < best) {
      best = d;
      best_point = q;
    }
  }
  return best_point;
}

bool contains(const ConvexPolygon& polygon, Point2 p) {
  for (const Edge& e : polygon.edges()) {
    if (!(e.support().signed_distance(p) < -kTol)) return false;
  }
  return true;
}

double signed_area(std::span<const Point2> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  // Shift to the first vertex to limit cancellation far from the origin.
  const Point2 o = ring[0];
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) s += cross(ring[i] - o, ring[i + 1] - o);
  return 0.5 * s;
}

Point2 ring_centroid(std::span<const Point2> ring) {
  const std::size_t n = ring.size();
  if (n == 0) throw GeometryError("centroid of an empty ring");
  const Point2 o = ring[0];
  double a = 0.0;
  Point2 acc{};
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Point2 p = ring[i] - o;
    const Point2 q = ring[i + 1] - o;
    const double w = cross(p, q);
    a += w;
    acc = acc + (w / 3.0) * (p + q);
  }
  if (a == 0.0) {
    Point2 mean{};
    for (const Point2& p : ring) mean = mean + p;
    return (1.0 / static_cast<double>(n)) * mean;
  }
  return o + (1.0 / a) * acc;
}

namespace {

// Signed area of triangle (0, a, b) intersected with the disc of radius r at 0.
double triangle_disc_area(Point2 a, Point2 b, double r) {
  const double r2 = r * r;
  const Point2 d = b - a;
  const double qa = dot(d, d);
  if (qa == 0.0) return 0.0;
  const double qb = 2.0 * dot(a, d);
  const double qc = dot(a, a) - r2;
  std::vector<double> ts{0.0};
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc > 0.0) {
    const double s = std::sqrt(disc);
    for (double t : {(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)}) {
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  ts.push_back(1.0);
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const Point2 p = a + ts[i] * d;
    const Point2 q = a + ts[i + 1] * d;
    const Point2 mid = 0.5 * (p + q);
    if (dot(mid, mid) <= r2) {
      area += 0.5 * cross(p, q);
    } else {
      area += 0.5 * r2 * std::atan2(cross(p, q), dot(p, q));
    }
  }
  return area;
}

}  // namespace

double intersection_area_with_disc(const ConvexPolygon& polygon, Point2 center, double radius) {
  if (!polygon.bounded()) throw GeometryError("disc intersection needs a bounded polygon");
  const auto v = polygon.vertices();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += triangle_disc_area(v[i] - center, v[(i + 1) % v.size()] - center, radius);
  }
  return std::abs(s);
}

Circle circumscribing_circle(const ConvexPolygon& polygon) {
  if (!polygon.bounded()) throw GeometryError("circumscribing circle of an unbounded polygon");
  const auto v = polygon.vertices();
  Point2 c{};
  for (const Point2& p : v) c = c + p;
  c = (1.0 / static_cast<double>(v.size())) * c;
  double r = 0.0;
  for (const Point2& p : v) r = std::max(r, distance(c, p));
  return {c, r};
}

}  // namespace urbanprop::geom

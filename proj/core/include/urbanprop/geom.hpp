#pragma once

// Planar geometry kernel: directed lines, edges (segment / half-line / line),
// convex polygons stored as clockwise circular edge lists, half-plane division,
// inward offset and homothety.
//
// Orientation convention, used everywhere in this library: polygon boundaries
// run clockwise, so the interior lies on the right of every edge, i.e. on the
// side where cross(direction, p - origin) < 0. Bounded polygons therefore have
// a negative shoelace area; area() returns the absolute value.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace urbanprop::geom {

/// Absolute coincidence tolerance, in meters.
inline constexpr double kTol = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator-(Point2 a) { return {-a.x, -a.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 3D cross product; det(a, b).
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }
/// Right-hand normal (rotated -90 degrees). Points into a clockwise polygon.
constexpr Point2 right_normal(Point2 u) { return {u.y, -u.x}; }

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Side { Negative = -1, On = 0, Positive = 1 };

struct DirectedLine {
  Point2 origin;
  Point2 direction;  // unit length

  /// Line through a and b, oriented a -> b. Throws if a == b.
  static DirectedLine through(Point2 a, Point2 b);
  /// Line through origin with direction (cos angle, sin angle).
  static DirectedLine from_angle(Point2 origin, double angle);

  Point2 at(double t) const { return origin + t * direction; }
  double param_of(Point2 p) const { return dot(p - origin, direction); }
  /// det(direction, p - origin); positive on the left.
  double signed_distance(Point2 p) const { return cross(direction, p - origin); }
  DirectedLine reversed() const { return {origin, -direction}; }
};

/// Side of p relative to the line, with absolute tolerance tol.
Side side_of(const DirectedLine& line, Point2 p, double tol = kTol);

enum class EdgeKind { Segment, HalfLine, Line };

/// An oriented piece of a support line. Endpoints are stored explicitly so
/// that shared vertices keep their exact value; a missing endpoint means the
/// edge extends to infinity in that direction.
class Edge {
 public:
  static Edge segment(Point2 a, Point2 b);
  static Edge segment_on(const DirectedLine& support, Point2 a, Point2 b);
  static Edge half_line_from(const DirectedLine& support, Point2 start);
  static Edge half_line_to(const DirectedLine& support, Point2 end);
  static Edge line(const DirectedLine& support);

  EdgeKind kind() const;
  bool bounded() const { return start_.has_value() && end_.has_value(); }
  const DirectedLine& support() const { return support_; }
  const std::optional<Point2>& start() const { return start_; }
  const std::optional<Point2>& end() const { return end_; }
  /// Parameter interval on the support; +/-infinity for open ends.
  std::pair<double, double> interval() const;
  double length() const;
  /// Same support, opposite orientation.
  Edge reversed() const;

 private:
  Edge(const DirectedLine& support, std::optional<Point2> start, std::optional<Point2> end)
      : support_(support), start_(start), end_(end) {}

  DirectedLine support_;
  std::optional<Point2> start_;
  std::optional<Point2> end_;
};

class ConvexPolygon {
 public:
  /// The whole plane (no edges).
  static ConvexPolygon whole_plane() { return ConvexPolygon{}; }
  /// Builds a bounded polygon from its vertices in either orientation.
  /// Returns nullopt if fewer than three non-collinear vertices or not convex.
  static std::optional<ConvexPolygon> from_vertices(std::span<const Point2> vertices);
  /// Intersection of closed half-planes, each given by a boundary line whose
  /// right side is kept. Returns nullopt when the intersection has no interior.
  static std::optional<ConvexPolygon> from_halfplanes(std::span<const DirectedLine> boundaries);
  /// Takes an already consistent clockwise edge list as is.
  static ConvexPolygon from_edges(std::vector<Edge> edges);
  /// Regular n-gon inscribed in the circle (center, radius).
  static ConvexPolygon regular(Point2 center, double radius, int sides, double phase = 0.0);
  /// Regular n-gon centred at center whose area equals `area`.
  static ConvexPolygon regular_with_area(Point2 center, double area, int sides);

  bool is_whole_plane() const { return edges_.empty(); }
  bool bounded() const;
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }

  /// Start point of each edge, in boundary order. Bounded polygons only.
  std::vector<Point2> vertices() const;
  std::vector<DirectedLine> supports() const;

  double area() const;
  double signed_area() const;
  double perimeter() const;
  Point2 centroid() const;

  /// Checks orientation, chaining, and convexity within tol.
  bool is_valid(double tol = 1e-7) const;

 private:
  ConvexPolygon() = default;
  explicit ConvexPolygon(std::vector<Edge> edges) : edges_(std::move(edges)) {}

  std::vector<Edge> edges_;
};

struct Division {
  std::optional<ConvexPolygon> positive;  // C intersected with the left side
  std::optional<ConvexPolygon> negative;  // C intersected with the right side
  bool vertex_hit = false;                // the line passed within tol of a vertex
};

/// Splits a convex polygon by a directed line.
Division divide_polygon(const ConvexPolygon& polygon, const DirectedLine& line);

/// Inward offset by distance eps; nullopt if nothing with positive area is left.
std::optional<ConvexPolygon> erode(const ConvexPolygon& polygon, double eps);

/// Homothety about the area centroid. Bounded polygons only.
ConvexPolygon dilate_about_centroid(const ConvexPolygon& polygon, double ratio);

/// Nearest point of the boundary; ties go to the first edge in boundary order.
Point2 project_onto_boundary(const ConvexPolygon& polygon, Point2 p);

/// Strict containment: p lies more than kTol inside every edge.
bool contains(const ConvexPolygon& polygon, Point2 p);

/// Shoelace signed area of a closed ring (last vertex connects to first).
double signed_area(std::span<const Point2> ring);
/// Area centroid of a simple ring.
Point2 ring_centroid(std::span<const Point2> ring);

/// Area of the intersection of a bounded convex polygon with a disc.
double intersection_area_with_disc(const ConvexPolygon& polygon, Point2 center, double radius);

/// Circle centred at the vertex centroid that encloses every vertex. Used as
/// the rejection circle for random lines; not the minimal enclosing circle.
struct Circle {
  Point2 center;
  double radius = 0.0;
};
Circle circumscribing_circle(const ConvexPolygon& polygon);

}  // namespace urbanprop::geom

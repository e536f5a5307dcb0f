#include "urbanprop/tessellation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace urbanprop::tess {

using geom::ConvexPolygon;
using geom::DirectedLine;
using geom::Edge;
using geom::Point2;
using geom::Side;

namespace {

constexpr double kPi = std::numbers::pi;

double width_across(const ConvexPolygon& polygon, double line_angle) {
  const Point2 n{-std::sin(line_angle), std::cos(line_angle)};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Point2& v : polygon.vertices()) {
    const double s = geom::dot(v, n);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return hi - lo;
}

bool crosses_points(std::span<const Point2> pts, const DirectedLine& line) {
  bool pos = false;
  bool neg = false;
  for (const Point2& p : pts) {
    const Side s = geom::side_of(line, p);
    pos |= s == Side::Positive;
    neg |= s == Side::Negative;
    if (pos && neg) return true;
  }
  return false;
}

Side opposite(Side s) {
  return s == Side::Positive ? Side::Negative : (s == Side::Negative ? Side::Positive : Side::On);
}

}  // namespace

// ---------------------------------------------------------------------------
// Anisotropy

void AnisotropyLaw::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("anisotropy rho must lie in [0,1]");
  if (!std::isfinite(theta)) throw std::invalid_argument("anisotropy theta must be finite");
}

double AnisotropyLaw::sample_angle(Rng& rng) const {
  if (rho > 0.0 && uniform01(rng) < rho) {
    const double a = uniform01(rng) < 0.5 ? theta : theta + 0.5 * kPi;
    double r = std::fmod(a, kPi);
    if (r < 0.0) r += kPi;
    return r;
  }
  return uniform(rng, 0.0, kPi);
}

double AnisotropyLaw::hitting_measure(const ConvexPolygon& polygon) const {
  // Cauchy: the mean width over uniform directions is perimeter / pi.
  const double isotropic = polygon.perimeter() / kPi;
  if (rho == 0.0) return isotropic;
  const double atoms = 0.5 * (width_across(polygon, theta) + width_across(polygon, theta + 0.5 * kPi));
  return (1.0 - rho) * isotropic + rho * atoms;
}

double xi(const AnisotropyLaw& law) {
  return law.rho * law.rho * (0.5 - 2.0 / kPi) + 2.0 / kPi;
}

double calibrate_intensity(double target_u2, double xi_value) {
  if (!(target_u2 > 0.0) || !(xi_value > 0.0)) {
    throw std::invalid_argument("calibrate_intensity: U2 and xi must be positive");
  }
  return 4.0 / (target_u2 * xi_value);
}

bool line_crosses(const ConvexPolygon& polygon, const DirectedLine& line) {
  const auto v = polygon.vertices();
  return crosses_points(v, line);
}

namespace {

DirectedLine line_in_circle(const geom::Circle& circle, const AnisotropyLaw& law, Rng& rng) {
  const double offset = uniform(rng, -circle.radius, circle.radius);
  const double angle = law.sample_angle(rng);
  const Point2 u{std::cos(angle), std::sin(angle)};
  const Point2 n{-u.y, u.x};
  return {circle.center + offset * n, u};
}

}  // namespace

DirectedLine sample_random_line(const ConvexPolygon& window, const AnisotropyLaw& law, Rng& rng) {
  const geom::Circle circle = geom::circumscribing_circle(window);
  const auto verts = window.vertices();
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    const DirectedLine line = line_in_circle(circle, law, rng);
    if (crosses_points(verts, line)) return line;
  }
  throw geom::GeometryError("sample_random_line: no hit after 10^6 draws (degenerate window)");
}

// ---------------------------------------------------------------------------
// Tessellation

Tessellation::Tessellation(const ConvexPolygon& window) : window_(window) {
  if (!window.bounded()) throw std::invalid_argument("tessellation window must be bounded");
  cells_.emplace_back();
  for (const Edge& e : window.edges()) cells_[0].boundary.push_back(new_container(e, 0, -1));
}

EcId Tessellation::new_container(const Edge& edge, CellId left, int line_id) {
  containers_.push_back(EdgeContainer{edge, kNoLink, left, line_id});
  return static_cast<EcId>(containers_.size() - 1);
}

int Tessellation::add_line(const DirectedLine& line) {
  lines_.push_back(line);
  return static_cast<int>(lines_.size() - 1);
}

std::vector<Point2> Tessellation::cell_vertices(CellId id) const {
  const Cell& c = cells_.at(id);
  std::vector<Point2> out;
  out.reserve(c.boundary.size());
  for (EcId ec : c.boundary) out.push_back(*containers_[ec].edge.start());
  return out;
}

ConvexPolygon Tessellation::cell_polygon(CellId id) const {
  const Cell& c = cells_.at(id);
  std::vector<Edge> edges;
  edges.reserve(c.boundary.size());
  for (EcId ec : c.boundary) edges.push_back(containers_[ec].edge);
  return ConvexPolygon::from_edges(std::move(edges));
}

std::pair<EcId, EcId> Tessellation::cut(EcId ec, Point2 p) {
  const Edge edge = containers_[ec].edge;
  const DirectedLine support = edge.support();
  const Point2 s = *edge.start();
  const Point2 t = *edge.end();
  const int line_id = containers_[ec].line_id;
  const CellId left = containers_[ec].left;
  const EcId opp = containers_[ec].opposite;

  containers_[ec].edge = Edge::segment_on(support, s, p);
  const EcId second = new_container(Edge::segment_on(support, p, t), left, line_id);

  if (opp != kNoLink) {
    // The neighbour holds t -> s; it becomes t -> p followed by p -> s.
    const Edge oedge = containers_[opp].edge;
    const DirectedLine osupport = oedge.support();
    const CellId nb = containers_[opp].left;
    containers_[opp].edge = Edge::segment_on(osupport, t, p);
    const EcId osecond = new_container(Edge::segment_on(osupport, p, s), nb,
                                       containers_[opp].line_id);
    auto& nbd = cells_[nb].boundary;
    const auto it = std::find(nbd.begin(), nbd.end(), opp);
    if (it == nbd.end()) throw StructuralError("opposite container missing from its cell");
    nbd.insert(it + 1, osecond);

    containers_[ec].opposite = osecond;
    containers_[osecond].opposite = ec;
    containers_[second].opposite = opp;
    containers_[opp].opposite = second;
  }
  return {ec, second};
}

CellSplit Tessellation::divide_cell(CellId id, int line_id) {
  CellSplit result;
  const DirectedLine line = lines_.at(static_cast<std::size_t>(line_id));
  const std::vector<EcId> bd = cells_.at(id).boundary;
  const std::size_t n = bd.size();

  std::vector<Point2> v(n);
  std::vector<double> d(n);
  std::vector<Side> s(n);
  bool pos = false;
  bool neg = false;
  bool on = false;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = *containers_[bd[i]].edge.start();
    d[i] = line.signed_distance(v[i]);
    s[i] = geom::side_of(line, v[i]);
    pos |= s[i] == Side::Positive;
    neg |= s[i] == Side::Negative;
    on |= s[i] == Side::On;
  }
  if (!pos || !neg) return result;

  // Plan: each boundary edge is either kept whole with a side tag or cut in
  // two at a strict sign change.
  struct Plan {
    bool cut = false;
    Side tag = Side::On;
  };
  std::vector<Plan> plan(n);
  std::vector<Side> tags;
  tags.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (s[i] != Side::On && s[j] == opposite(s[i])) {
      plan[i].cut = true;
      tags.push_back(s[i]);
      tags.push_back(s[j]);
    } else {
      Side tag = s[i] != Side::On ? s[i] : s[j];
      if (tag == Side::On) {
        tag = line.signed_distance(0.5 * (v[i] + v[j])) >= 0.0 ? Side::Positive : Side::Negative;
      }
      plan[i].tag = tag;
      tags.push_back(tag);
    }
  }
  std::size_t transitions = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] != tags[(i + 1) % tags.size()]) ++transitions;
  }
  if (transitions != 2) {
    // Numerically degenerate configuration; leave the cell untouched.
    result.vertex_hit = true;
    ++vertex_hits_;
    return result;
  }

  struct Item {
    EcId ec;
    Side tag;
  };
  std::vector<Item> items;
  items.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (plan[i].cut) {
      const std::size_t j = (i + 1) % n;
      const Point2 p = v[i] + (d[i] / (d[i] - d[j])) * (v[j] - v[i]);
      const EcId opp = containers_[bd[i]].opposite;
      const auto [first, second] = cut(bd[i], p);
      items.push_back({first, s[i]});
      items.push_back({second, s[j]});
      if (opp != kNoLink) result.touched_neighbours.push_back(containers_[opp].left);
    } else {
      items.push_back({bd[i], plan[i].tag});
    }
  }

  const std::size_t m = items.size();
  std::size_t enter_pos = m;  // first positive item after a negative one
  std::size_t enter_neg = m;
  for (std::size_t i = 0; i < m; ++i) {
    const Side prev = items[(i + m - 1) % m].tag;
    if (items[i].tag == Side::Positive && prev == Side::Negative) enter_pos = i;
    if (items[i].tag == Side::Negative && prev == Side::Positive) enter_neg = i;
  }
  // X: where the boundary leaves the positive side; E: where it re-enters.
  const Point2 x_point = *containers_[items[enter_neg].ec].edge.start();
  const Point2 e_point = *containers_[items[enter_pos].ec].edge.start();

  const CellId pos_id = id;
  const CellId neg_id = static_cast<CellId>(cells_.size());
  cells_.emplace_back();

  const EcId bridge_pos = new_container(Edge::segment_on(line.reversed(), x_point, e_point), pos_id,
                                        line_id);
  const EcId bridge_neg = new_container(Edge::segment_on(line, e_point, x_point), neg_id, line_id);
  containers_[bridge_pos].opposite = bridge_neg;
  containers_[bridge_neg].opposite = bridge_pos;

  std::vector<EcId> pos_bd;
  std::vector<EcId> neg_bd;
  for (std::size_t k = 0; k < m; ++k) {
    const Item& it = items[(enter_pos + k) % m];
    if (it.tag != Side::Positive) break;
    pos_bd.push_back(it.ec);
  }
  pos_bd.push_back(bridge_pos);
  for (std::size_t k = 0; k < m; ++k) {
    const Item& it = items[(enter_neg + k) % m];
    if (it.tag != Side::Negative) break;
    neg_bd.push_back(it.ec);
  }
  neg_bd.push_back(bridge_neg);

  for (EcId ec : pos_bd) containers_[ec].left = pos_id;
  for (EcId ec : neg_bd) containers_[ec].left = neg_id;
  cells_[pos_id].boundary = std::move(pos_bd);
  cells_[neg_id].boundary = std::move(neg_bd);

  result.divided = true;
  result.positive = pos_id;
  result.negative = neg_id;
  result.vertex_hit = on;
  if (on) ++vertex_hits_;
  return result;
}

std::size_t Tessellation::divide(const DirectedLine& line) {
  const int line_id = add_line(line);
  std::size_t divided = 0;
  bool degenerate = false;

  std::vector<CellId> stack;
  const auto propagate = [&](CellId start) {
    stack.assign(1, start);
    while (!stack.empty()) {
      const CellId c = stack.back();
      stack.pop_back();
      CellSplit r = divide_cell(c, line_id);
      if (!r.divided) {
        degenerate |= r.vertex_hit;
        continue;
      }
      ++divided;
      degenerate |= r.vertex_hit;
      for (CellId nb : r.touched_neighbours) stack.push_back(nb);
    }
  };

  for (CellId c = 0; c < cells_.size(); ++c) {
    if (crosses_points(cell_vertices(c), line)) {
      propagate(c);
      break;
    }
  }
  if (degenerate) {
    // The walk stops where the line passes through an existing vertex; pick
    // up any crossed cell it could not reach through an edge.
    for (CellId c = 0; c < cells_.size(); ++c) {
      if (crosses_points(cell_vertices(c), line)) propagate(c);
    }
  }
  return divided;
}

void Tessellation::check_links() const {
  std::vector<int> owner_count(containers_.size(), 0);
  for (CellId c = 0; c < cells_.size(); ++c) {
    const auto& bd = cells_[c].boundary;
    if (bd.size() < 3) throw StructuralError("cell " + std::to_string(c) + " has < 3 edges");
    for (std::size_t i = 0; i < bd.size(); ++i) {
      const EcId ec = bd[i];
      if (ec >= containers_.size()) throw StructuralError("container id out of range");
      ++owner_count[ec];
      const EdgeContainer& e = containers_[ec];
      if (e.left != c) throw StructuralError("left link does not point to owning cell");
      const EdgeContainer& next = containers_[bd[(i + 1) % bd.size()]];
      if (!(*e.edge.end() == *next.edge.start())) {
        throw StructuralError("cell " + std::to_string(c) + " boundary is not chained");
      }
      if (e.opposite != kNoLink) {
        const EdgeContainer& o = containers_.at(e.opposite);
        if (o.opposite != ec) throw StructuralError("opposite link is not symmetric");
        if (!(*o.edge.start() == *e.edge.end()) || !(*o.edge.end() == *e.edge.start())) {
          throw StructuralError("opposite edges do not share endpoints");
        }
        const double c1 = geom::cross(o.edge.support().direction, e.edge.support().direction);
        const double c2 = e.edge.support().signed_distance(o.edge.support().origin);
        if (std::abs(c1) > 1e-12 || std::abs(c2) > 1e-7 ||
            geom::dot(o.edge.support().direction, e.edge.support().direction) > 0.0) {
          throw StructuralError("opposite edges do not share a reversed support");
        }
      }
    }
  }
  for (std::size_t i = 0; i < owner_count.size(); ++i) {
    if (owner_count[i] != 1) throw StructuralError("container not owned by exactly one cell");
  }
}

// ---------------------------------------------------------------------------
// Generators

Tessellation generate_plt(double lambda, const AnisotropyLaw& law, const ConvexPolygon& window,
                          Rng& rng) {
  if (!(lambda > 0.0)) throw std::invalid_argument("generate_plt: lambda must be positive");
  law.validate();
  Tessellation t(window);
  const geom::Circle circle = geom::circumscribing_circle(window);
  const auto verts = window.vertices();
  const std::uint64_t candidates = poisson(rng, 2.0 * lambda * circle.radius);
  for (std::uint64_t i = 0; i < candidates; ++i) {
    const DirectedLine line = line_in_circle(circle, law, rng);
    if (crosses_points(verts, line)) t.divide(line);
  }
  return t;
}

Tessellation generate_stit(double lambda, double tau, const AnisotropyLaw& law,
                           const ConvexPolygon& window, Rng& rng) {
  if (!(lambda > 0.0) || !(tau > 0.0)) {
    throw std::invalid_argument("generate_stit: lambda and tau must be positive");
  }
  law.validate();
  Tessellation t(window);
  struct Pending {
    CellId cell;
    double birth;
  };
  std::vector<Pending> stack{{0, 0.0}};
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    const ConvexPolygon poly = t.cell_polygon(p.cell);
    const double death = p.birth + exponential(rng, lambda * law.hitting_measure(poly));
    if (!(death < tau)) continue;

    CellSplit split;
    for (int attempt = 0; attempt < 64 && !split.divided; ++attempt) {
      const DirectedLine line = sample_random_line(poly, law, rng);
      split = t.divide_cell(p.cell, t.add_line(line));
    }
    if (!split.divided) continue;
    // Depth first, positive daughter first.
    stack.push_back({split.negative, death});
    stack.push_back({split.positive, death});
  }
  return t;
}

}  // namespace urbanprop::tess

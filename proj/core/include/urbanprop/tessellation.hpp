#pragma once

// Random tessellations built by iterated line division.
//
// A Tessellation is a list of cells; each cell is a circular list of edge
// containers. An edge container holds one oriented segment, a link to the
// container holding the same segment in the opposite orientation (absent on
// the window boundary) and a link back to its owning cell. Splitting a cell
// inserts the crossing point into the neighbour's boundary at the same time,
// so adjacent cells always share bitwise-identical vertices.

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "urbanprop/geom.hpp"
#include "urbanprop/rng.hpp"

namespace urbanprop::tess {

using CellId = std::uint32_t;
using EcId = std::uint32_t;
inline constexpr std::uint32_t kNoLink = std::numeric_limits<std::uint32_t>::max();

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Anisotropy

/// Orientation law of the lines: with probability 1 - rho a uniform angle on
/// [0, pi), with probability rho one of the two orthogonal directions theta
/// and theta + pi/2 (equally likely). rho = 0 is isotropic, rho = 1 is a pure
/// Manhattan grid.
struct AnisotropyLaw {
  double rho = 0.0;
  double theta = 0.0;

  void validate() const;
  /// Draws a line direction angle in [0, pi).
  double sample_angle(Rng& rng) const;
  /// Measure of lines (unit offset intensity) hitting a bounded convex set:
  /// the law-averaged width of the set across the line direction.
  double hitting_measure(const geom::ConvexPolygon& polygon) const;
};

/// Mean |sin| of the angle between two independent directions of the law.
double xi(const AnisotropyLaw& law);

/// Line intensity giving a mean typical-cell perimeter of target_u2.
double calibrate_intensity(double target_u2, double xi_value);

/// Uniform random line hitting the bounded convex window (rejection from the
/// circumscribing circle). Throws after 10^6 rejections.
geom::DirectedLine sample_random_line(const geom::ConvexPolygon& window, const AnisotropyLaw& law,
                                      Rng& rng);

/// True when the line has vertices of the polygon strictly on both sides.
bool line_crosses(const geom::ConvexPolygon& polygon, const geom::DirectedLine& line);

// ---------------------------------------------------------------------------
// Structure

struct EdgeContainer {
  geom::Edge edge;
  EcId opposite = kNoLink;
  CellId left = kNoLink;
  std::int32_t line_id = -1;  // generating line; -1 on the window boundary
};

struct Cell {
  std::vector<EcId> boundary;  // clockwise
};

struct CellSplit {
  bool divided = false;
  CellId positive = kNoLink;  // reuses the original cell id
  CellId negative = kNoLink;  // appended
  bool vertex_hit = false;
  /// Cells whose shared edge received a new vertex, in crossing order.
  std::vector<CellId> touched_neighbours;
};

class Tessellation {
 public:
  /// One cell covering a bounded convex window.
  explicit Tessellation(const geom::ConvexPolygon& window);

  const geom::ConvexPolygon& window() const { return window_; }
  std::size_t cell_count() const { return cells_.size(); }
  std::span<const Cell> cells() const { return cells_; }
  const Cell& cell(CellId id) const { return cells_.at(id); }
  std::size_t container_count() const { return containers_.size(); }
  const EdgeContainer& container(EcId id) const { return containers_.at(id); }

  std::vector<geom::Point2> cell_vertices(CellId id) const;
  geom::ConvexPolygon cell_polygon(CellId id) const;

  /// Generating lines, indexed by EdgeContainer::line_id.
  std::span<const geom::DirectedLine> lines() const { return lines_; }
  int add_line(const geom::DirectedLine& line);

  /// Splits one cell by a registered line without propagating. Neighbours
  /// sharing a cut edge receive the crossing point as a new vertex.
  CellSplit divide_cell(CellId id, int line_id);

  /// Splits every cell the line crosses, walking from cell to cell across
  /// opposite links. Returns the number of cells divided.
  std::size_t divide(const geom::DirectedLine& line);

  /// Number of divisions that met an existing vertex within tolerance.
  std::size_t vertex_hits() const { return vertex_hits_; }

  /// Throws StructuralError on broken opposite/left links or mismatched
  /// shared edges.
  void check_links() const;

 private:
  EcId new_container(const geom::Edge& edge, CellId left, int line_id);
  // Cuts container `ec` at p; returns the two halves (first keeps the id).
  std::pair<EcId, EcId> cut(EcId ec, geom::Point2 p);

  geom::ConvexPolygon window_;
  std::vector<Cell> cells_;
  std::vector<EdgeContainer> containers_;
  std::vector<geom::DirectedLine> lines_;
  std::size_t vertex_hits_ = 0;
};

// ---------------------------------------------------------------------------
// Generators

/// Poisson line tessellation of intensity lambda clipped to the window.
Tessellation generate_plt(double lambda, const AnisotropyLaw& law,
                          const geom::ConvexPolygon& window, Rng& rng);

/// Crack STIT tessellation of the window at time tau. Each live cell lives an
/// exponential time of rate lambda times its line hitting measure, then is
/// split by a uniform random line through it.
Tessellation generate_stit(double lambda, double tau, const AnisotropyLaw& law,
                           const geom::ConvexPolygon& window, Rng& rng);

// ---------------------------------------------------------------------------
// Statistics

enum class Model { Plt, Stit };

/// Analytic per-unit-area means for a model at line intensity L_A.
struct MeanValues {
  double l_a = 0.0;
  double n0 = 0.0;
  double n1 = 0.0;
  double n2 = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  double a2 = 0.0;
};
MeanValues analytic_means(Model model, double l_a, double xi_value);

/// Statistics of one realisation in its window.
///
/// Raw counts describe the realisation as generated. The per-unit-area
/// estimators correct for the window boundary: vertices on the window
/// boundary are excluded, each edge end at an interior vertex counts one
/// half edge, and a cell is counted when its lowest (then leftmost) vertex is
/// an interior vertex.
struct TessStats {
  double window_area = 0.0;
  std::size_t cells = 0;
  std::size_t interior_edges = 0;     // undirected edges not on the window boundary
  std::size_t interior_vertices = 0;  // graph vertices off the window boundary
  double interior_edge_length = 0.0;

  double interior_edge_ends = 0.0;  // sum of interior vertex degrees
  std::size_t anchored_cells = 0;   // cells with an interior lowest vertex

  double l_a = 0.0;
  double n0 = 0.0;
  double n1 = 0.0;
  double n2 = 0.0;
  double euler = 0.0;  // n0 - n1 + n2
};

TessStats summarize(const Tessellation& tessellation);

/// Ensemble estimate of a mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Aggregates many realisations: per-unit-area means for L_A, N0, N1, N2 and
/// ratio estimators for the typical edge length, cell perimeter and area.
struct EnsembleStats {
  std::size_t runs = 0;
  Estimate l_a, n0, n1, n2, u1, u2, a2;
};
EnsembleStats aggregate(std::span<const TessStats> runs);

}  // namespace urbanprop::tess

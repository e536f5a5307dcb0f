#pragma once

// From a tessellation to a 3D city: street axes, blocks (eroded cells),
// building footprints along block borders, heights and the antenna.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "urbanprop/geom.hpp"
#include "urbanprop/rng.hpp"
#include "urbanprop/tessellation.hpp"
#include "urbanprop/vec3.hpp"

namespace urbanprop::city {

/// Maximal set of aligned, connected tessellation edges.
struct Axis {
  std::vector<tess::EcId> edges;  // one container per undirected edge
  geom::Point2 a;                 // extreme points along the axis
  geom::Point2 b;
  double length() const { return geom::distance(a, b); }
};

/// Union-find over interior edges: two edges are joined when they share an
/// endpoint and their directions are parallel within 1e-9.
std::vector<Axis> extract_axes(const tess::Tessellation& tessellation);

struct Block {
  geom::ConvexPolygon polygon;
  std::uint32_t cell = 0;  // parent cell id
};

/// Erodes every cell by street_width / 2; cells that vanish give no block.
std::vector<Block> blocks_from_cells(const tess::Tessellation& tessellation, double street_width);

struct Building {
  std::vector<geom::Point2> footprint;  // convex, clockwise
  double height = 0.0;
  std::uint32_t block = 0;
};

/// Footprints filling the annulus between the block B and its homothetic
/// copy of ratio eta_dil. Poisson points of intensity 1 / (b * eta_dil) are
/// dropped on the inner border; every consecutive pair (cyclically) bounds
/// one building, split at inner corners. Points map to the outer border by
/// the inverse homothety, so facades stay parallel to the street. Fewer
/// than two points gives no building.
std::vector<std::vector<geom::Point2>> generate_footprints(const geom::ConvexPolygon& block,
                                                           double facade_b, double eta_dil,
                                                           Rng& rng);

/// I.i.d. exponential heights with mean h_mean.
void assign_heights(std::span<Building> buildings, double h_mean, Rng& rng);

struct CityScene {
  std::vector<Block> blocks;
  std::vector<Building> buildings;
  double domain_radius = 0.0;  // R + dR
  Vec3 antenna;
  bool antenna_fallback = false;  // no building: antenna over the ground
};

/// Ground plane plus building prisms in a cylinder of the given radius.
CityScene assemble_scene(std::vector<Block> blocks, std::vector<Building> buildings,
                         double domain_radius);

/// Ground, one facade per footprint edge and one roof per building.
std::size_t reflective_surface_count(const CityScene& scene);

/// Above the centroid of the roof nearest to the origin, delta_h over it.
/// With no building, (0, 0, fallback_height) and the fallback flag is set.
Vec3 place_antenna(CityScene& scene, double delta_h, double fallback_height = 20.0);

struct CityParams {
  tess::Model model = tess::Model::Plt;
  double u2 = 400.0;
  double rho = 0.0;
  double theta = 0.0;
  double street_w = 10.0;
  double facade_b = 10.0;
  double height_h = 15.0;
  double eta_dil = 0.8;
  double delta_h = 5.0;
  double r_window = 1000.0;
  double delta_r = 500.0;
  int window_sides = 256;

  void validate() const;
  double domain_radius() const { return r_window + delta_r; }
  /// Line intensity calibrated to u2 for the anisotropy.
  double lambda() const;
};

/// Full pipeline for one city: window, tessellation, blocks, buildings,
/// heights and antenna. All randomness derives from `seed`.
CityScene generate_city(const CityParams& params, std::uint64_t seed);

/// The generation window: a regular polygon with the disc area.
geom::ConvexPolygon city_window(const CityParams& params);

std::string model_name(tess::Model model);
tess::Model parse_model(const std::string& name);

}  // namespace urbanprop::city

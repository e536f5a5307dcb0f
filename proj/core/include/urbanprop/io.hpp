#pragma once

// File formats: GeoJSON scenes and tessellations, CSV attenuation maps with a
// JSON sidecar, fit reports.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "urbanprop/analysis.hpp"
#include "urbanprop/citygen.hpp"
#include "urbanprop/powermap.hpp"
#include "urbanprop/tessellation.hpp"

namespace urbanprop::io {

/// Malformed input; the message names the offending location.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failure; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

// ---------------------------------------------------------------------------
// GeoJSON

/// GeoJSON Polygon geometry with a closed exterior ring.
std::string polygon_geometry(std::span<const geom::Point2> ring);
/// Exterior ring of a GeoJSON Polygon geometry, without the closing vertex.
std::vector<geom::Point2> parse_polygon_geometry(std::string_view json);

/// FeatureCollection of the cells, one Polygon feature per cell.
std::string tessellation_geojson(const tess::Tessellation& t);

struct SceneMetadata {
  std::uint64_t seed = 0;
  std::string model = "plt";
  double lambda = 0.0;
  double rho = 0.0;
  double theta = 0.0;
  double street_w = 10.0;
  double facade_b = 10.0;
  double eta_dil = 0.8;
  double height_h = 15.0;
  double delta_h = 5.0;
  double r_window = 1000.0;
  double delta_r = 500.0;
};

struct SceneFile {
  city::CityScene scene;
  SceneMetadata meta;
};

/// FeatureCollection with one feature per block and building (properties
/// kind and height_m) and a top-level "metadata" object.
std::string scene_geojson(const city::CityScene& scene, const SceneMetadata& meta);
SceneFile parse_scene_geojson(std::string_view text);

// ---------------------------------------------------------------------------
// Maps

/// CSV with header j,k,d_center_m,alpha_center_rad,power_w_per_m2,masked.
std::string map_csv(const pm::AttenuationMap& map);
/// Sidecar: grid, street fraction and tracing metadata.
std::string map_metadata_json(const pm::AttenuationMap& map);
pm::AttenuationMap parse_map(std::string_view csv, std::string_view metadata_json);

void save_map(const pm::AttenuationMap& map, const std::filesystem::path& csv_path);
/// Reads `csv_path` and its sidecar (same stem, .json).
pm::AttenuationMap load_map(const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

// ---------------------------------------------------------------------------
// Fits

std::string profile_csv(const analysis::EnsembleResult& ensemble);
std::string fit_json(const analysis::FitResult& fit, std::size_t n_cities, const std::string& model,
                     double rho);
/// Log-log plot of the profile with the fitted line.
std::string fit_svg(const analysis::EnsembleResult& ensemble, const analysis::FitResult& fit);

}  // namespace urbanprop::io

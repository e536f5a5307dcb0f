#include <json.hpp>
#include <string>

#include "urbanprop/io.hpp"

namespace urbanprop::io {

using json = nlohmann::ordered_json;
using geom::Point2;

namespace {

json ring_json(std::span<const Point2> ring) {
  json coords = json::array();
  for (const Point2& p : ring) coords.push_back({p.x, p.y});
  if (!ring.empty()) coords.push_back({ring.front().x, ring.front().y});
  return coords;
}

json polygon_json(std::span<const Point2> ring) {
  json g;
  g["type"] = "Polygon";
  g["coordinates"] = json::array({ring_json(ring)});
  return g;
}

std::vector<Point2> ring_from_geometry(const json& g, const std::string& where) {
  if (!g.is_object() || g.value("type", "") != "Polygon") {
    throw FormatError(where + ": expected a Polygon geometry");
  }
  const json& coords = g.at("coordinates");
  if (!coords.is_array() || coords.empty() || !coords[0].is_array()) {
    throw FormatError(where + ": Polygon needs an exterior ring");
  }
  std::vector<Point2> ring;
  for (std::size_t i = 0; i < coords[0].size(); ++i) {
    const json& c = coords[0][i];
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
      throw FormatError(where + ": vertex " + std::to_string(i) + " is not a coordinate pair");
    }
    ring.push_back({c[0].get<double>(), c[1].get<double>()});
  }
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  if (ring.size() < 3) throw FormatError(where + ": ring has fewer than three vertices");
  return ring;
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace

std::string polygon_geometry(std::span<const Point2> ring) { return polygon_json(ring).dump(); }

std::vector<Point2> parse_polygon_geometry(std::string_view text) {
  try {
    return ring_from_geometry(parse_json(text, "geometry"), "geometry");
  } catch (const json::exception& e) {
    throw FormatError(std::string("geometry: ") + e.what());
  }
}

std::string tessellation_geojson(const tess::Tessellation& t) {
  json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = json::array();
  for (tess::CellId c = 0; c < t.cell_count(); ++c) {
    const auto v = t.cell_vertices(c);
    json f;
    f["type"] = "Feature";
    f["properties"] = {{"cell", c}};
    f["geometry"] = polygon_json(v);
    fc["features"].push_back(std::move(f));
  }
  return fc.dump();
}

std::string scene_geojson(const city::CityScene& scene, const SceneMetadata& m) {
  json fc;
  fc["type"] = "FeatureCollection";
  fc["metadata"] = {
      {"seed", m.seed},
      {"model", m.model},
      {"lambda_per_m", m.lambda},
      {"rho", m.rho},
      {"theta_rad", m.theta},
      {"street_w_m", m.street_w},
      {"facade_b_m", m.facade_b},
      {"eta_dil", m.eta_dil},
      {"height_h_m", m.height_h},
      {"delta_h_m", m.delta_h},
      {"r_window_m", m.r_window},
      {"delta_r_m", m.delta_r},
      {"domain_radius_m", scene.domain_radius},
      {"antenna", {scene.antenna.x, scene.antenna.y, scene.antenna.z}},
      {"antenna_fallback", scene.antenna_fallback},
  };
  fc["features"] = json::array();
  for (std::size_t i = 0; i < scene.blocks.size(); ++i) {
    json f;
    f["type"] = "Feature";
    f["properties"] = {{"kind", "block"}, {"index", i}, {"cell", scene.blocks[i].cell}};
    f["geometry"] = polygon_json(scene.blocks[i].polygon.vertices());
    fc["features"].push_back(std::move(f));
  }
  for (const auto& b : scene.buildings) {
    json f;
    f["type"] = "Feature";
    f["properties"] = {{"kind", "building"}, {"height_m", b.height}, {"block", b.block}};
    f["geometry"] = polygon_json(b.footprint);
    fc["features"].push_back(std::move(f));
  }
  return fc.dump();
}

SceneFile parse_scene_geojson(std::string_view text) {
  const json fc = parse_json(text, "scene");
  SceneFile out;
  try {
    if (fc.value("type", "") != "FeatureCollection") throw FormatError("scene: not a FeatureCollection");
    const json& m = fc.at("metadata");
    SceneMetadata& meta = out.meta;
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.model = m.at("model").get<std::string>();
    meta.lambda = m.at("lambda_per_m").get<double>();
    meta.rho = m.at("rho").get<double>();
    meta.theta = m.at("theta_rad").get<double>();
    meta.street_w = m.at("street_w_m").get<double>();
    meta.facade_b = m.at("facade_b_m").get<double>();
    meta.eta_dil = m.at("eta_dil").get<double>();
    meta.height_h = m.at("height_h_m").get<double>();
    meta.delta_h = m.at("delta_h_m").get<double>();
    meta.r_window = m.at("r_window_m").get<double>();
    meta.delta_r = m.at("delta_r_m").get<double>();
    out.scene.domain_radius = m.at("domain_radius_m").get<double>();
    const json& a = m.at("antenna");
    out.scene.antenna = {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
    out.scene.antenna_fallback = m.value("antenna_fallback", false);
  } catch (const json::exception& e) {
    throw FormatError(std::string("scene metadata: ") + e.what());
  }

  const json& features = fc.at("features");
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::string where = "feature " + std::to_string(i);
    try {
      const json& f = features[i];
      const json& props = f.at("properties");
      const std::string kind = props.at("kind").get<std::string>();
      auto ring = ring_from_geometry(f.at("geometry"), where);
      if (kind == "block") {
        auto poly = geom::ConvexPolygon::from_vertices(ring);
        if (!poly) throw FormatError(where + ": block is not a convex polygon");
        out.scene.blocks.push_back({std::move(*poly), props.value("cell", 0u)});
      } else if (kind == "building") {
        const double h = props.at("height_m").get<double>();
        if (!(h > 0.0)) throw FormatError(where + ": building height must be positive");
        out.scene.buildings.push_back({std::move(ring), h, props.value("block", 0u)});
      } else {
        throw FormatError(where + ": unknown kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace urbanprop::io

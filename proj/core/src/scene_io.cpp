#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "urbanprop/io.hpp"

namespace urbanprop::io {

using json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(where + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Maps

std::string map_csv(const pm::AttenuationMap& map) {
  std::string out = "j,k,d_center_m,alpha_center_rad,power_w_per_m2,masked\n";
  const auto& g = map.grid;
  for (int j = 0; j < g.n_crowns; ++j) {
    for (int k = 0; k < g.n_sectors; ++k) {
      const std::size_t i = g.index(j, k);
      out += std::to_string(j) + ',' + std::to_string(k) + ',' + fmt(g.center_radius(j)) + ',' +
             fmt(g.center_angle(k)) + ',' + fmt(map.power[i]) + ',' +
             (i < map.masked.size() && map.masked[i] ? '1' : '0') + '\n';
    }
  }
  return out;
}

std::string map_metadata_json(const pm::AttenuationMap& map) {
  const auto& g = map.grid;
  json j;
  j["grid"] = {{"radius_m", g.radius},
               {"dd_m", g.dd},
               {"dalpha_rad", g.dalpha},
               {"n_crowns", g.n_crowns},
               {"n_sectors", g.n_sectors}};
  j["street_fraction"] = map.street_fraction;
  j["seed"] = map.meta.seed;
  j["n_rays"] = map.meta.n_rays;
  j["gamma"] = map.meta.gamma;
  j["p0_w"] = map.meta.p0;
  j["sampler"] = map.meta.sampler;
  j["source"] = {map.meta.source.x, map.meta.source.y, map.meta.source.z};
  j["cos_floor"] = map.meta.cos_floor;
  return j.dump(2) + "\n";
}

pm::AttenuationMap parse_map(std::string_view csv, std::string_view metadata) {
  pm::AttenuationMap map;
  try {
    const json j = json::parse(metadata.begin(), metadata.end());
    const json& g = j.at("grid");
    map.grid = pm::PolarGrid::make(g.at("radius_m").get<double>(), g.at("dd_m").get<double>(),
                                   g.at("dalpha_rad").get<double>());
    if (map.grid.n_crowns != g.at("n_crowns").get<int>() || map.grid.n_sectors != g.at("n_sectors").get<int>()) {
      throw FormatError("map metadata: grid dimensions are inconsistent");
    }
    map.street_fraction = j.at("street_fraction").get<double>();
    map.meta.seed = j.at("seed").get<std::uint64_t>();
    map.meta.n_rays = j.at("n_rays").get<std::uint64_t>();
    map.meta.gamma = j.at("gamma").get<double>();
    map.meta.p0 = j.at("p0_w").get<double>();
    map.meta.sampler = j.at("sampler").get<std::string>();
    const json& s = j.at("source");
    map.meta.source = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
    map.meta.cos_floor = j.at("cos_floor").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("map metadata: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("map metadata: ") + e.what());
  }

  map.power.assign(map.grid.size(), 0.0);
  map.masked.assign(map.grid.size(), 0);
  std::vector<std::uint8_t> seen(map.grid.size(), 0);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t end = std::min(csv.find('\n', pos), csv.size());
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::string where = "map line " + std::to_string(line_no);
    if (line_no == 1) {
      if (line != "j,k,d_center_m,alpha_center_rad,power_w_per_m2,masked") throw FormatError(where + ": bad header");
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 6) throw FormatError(where + ": expected 6 fields");
    const double jd = parse_double(f[0], where);
    const double kd = parse_double(f[1], where);
    const int j = static_cast<int>(jd);
    const int k = static_cast<int>(kd);
    if (j != jd || k != kd || j < 0 || k < 0 || j >= map.grid.n_crowns || k >= map.grid.n_sectors) {
      throw FormatError(where + ": pixel index out of range");
    }
    const double p = parse_double(f[4], where);
    if (!(p >= 0.0)) throw FormatError(where + ": negative power");
    const std::size_t i = map.grid.index(j, k);
    map.power[i] = p;
    map.masked[i] = f[5] == "1" ? 1 : 0;
    seen[i] = 1;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw FormatError("map: pixel " + std::to_string(i) + " missing");
  }
  return map;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void save_map(const pm::AttenuationMap& map, const std::filesystem::path& csv_path) {
  write_file(csv_path, map_csv(map));
  write_file(sidecar_path(csv_path), map_metadata_json(map));
}

pm::AttenuationMap load_map(const std::filesystem::path& csv_path) {
  const std::string csv = read_file(csv_path);
  const std::string meta = read_file(sidecar_path(csv_path));
  try {
    return parse_map(csv, meta);
  } catch (const FormatError& e) {
    throw FormatError(csv_path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Fits

std::string profile_csv(const analysis::EnsembleResult& e) {
  std::string out = "d_m,power_w_per_m2,std_error\n";
  for (std::size_t j = 0; j < e.d.size(); ++j) {
    out += fmt(e.d[j]) + ',' + fmt(e.power[j]) + ',' + fmt(e.std_error[j]) + '\n';
  }
  return out;
}

std::string fit_json(const analysis::FitResult& fit, std::size_t n_cities, const std::string& model,
                     double rho) {
  json j;
  j["A"] = fit.a;
  j["alpha"] = fit.alpha;
  j["r_squared"] = fit.r_squared;
  j["n_cities"] = n_cities;
  j["model"] = model;
  j["rho"] = rho;
  j["d_min_m"] = fit.d_min;
  j["d_max_m"] = fit.d_max;
  j["points"] = fit.points;
  j["note"] = "unweighted least squares in log-log space; residuals are heteroscedastic";
  return j.dump(2) + "\n";
}

std::string fit_svg(const analysis::EnsembleResult& e, const analysis::FitResult& fit) {
  constexpr double w = 640.0;
  constexpr double h = 480.0;
  constexpr double m = 60.0;
  double x0 = std::log10(fit.d_min);
  double x1 = std::log10(fit.d_max);
  double y0 = 1e300;
  double y1 = -1e300;
  for (std::size_t j = 0; j < e.d.size(); ++j) {
    if (e.d[j] < fit.d_min || e.d[j] > fit.d_max || !(e.power[j] > 0.0)) continue;
    y0 = std::min(y0, std::log10(e.power[j]));
    y1 = std::max(y1, std::log10(e.power[j]));
  }
  if (!(y1 > y0)) {
    y0 = -1.0;
    y1 = 1.0;
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  const auto px = [&](double lx) { return m + (lx - x0) / (x1 - x0) * (w - 2 * m); };
  const auto py = [&](double ly) { return h - m - (ly - y0) / (y1 - y0) * (h - 2 * m); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">log10 d (m)</text>\n";
  s << "<text x=\"15\" y=\"" << h / 2 << "\" transform=\"rotate(-90 15 " << h / 2
    << ")\" text-anchor=\"middle\">log10 P (W/m2)</text>\n";
  for (std::size_t j = 0; j < e.d.size(); ++j) {
    if (e.d[j] < fit.d_min || e.d[j] > fit.d_max || !(e.power[j] > 0.0)) continue;
    s << "<circle cx=\"" << px(std::log10(e.d[j])) << "\" cy=\"" << py(std::log10(e.power[j]))
      << "\" r=\"2\" fill=\"steelblue\"/>\n";
  }
  const auto fit_at = [&](double lx) { return std::log10(fit.a) - fit.alpha * lx; };
  s << "<line x1=\"" << px(x0) << "\" y1=\"" << py(fit_at(x0)) << "\" x2=\"" << px(x1) << "\" y2=\""
    << py(fit_at(x1)) << "\" stroke=\"crimson\"/>\n";
  s << "<text x=\"" << w - m << "\" y=\"" << m << "\" text-anchor=\"end\">alpha = " << fit.alpha
    << ", R2 = " << fit.r_squared << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace urbanprop::io

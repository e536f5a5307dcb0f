#include "urbanprop/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <set>

namespace urbanprop {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view s, const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": '" + std::string(s) + "' is not a finite number");
  }
  return v;
}

std::uint64_t to_u64(std::string_view s, const std::string& key) {
  // Accept plain integers and exact scientific forms such as 1e7.
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  const double d = to_double(s, key);
  if (d < 0.0 || d != std::floor(d) || d > 1.8e19) throw ConfigError(key + ": '" + std::string(s) + "' is not a non-negative integer");
  return static_cast<std::uint64_t>(d);
}

int to_int(std::string_view s, const std::string& key) {
  const double d = to_double(s, key);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(key + ": '" + std::string(s) + "' is not an integer");
  return static_cast<int>(d);
}

struct Field {
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, std::string_view, const std::string&)> set;
};

template <class T>
Field real(T Config::*m) {
  return {[m](const Config& c) { return fmt(c.*m); },
          [m](Config& c, std::string_view v, const std::string& k) { c.*m = to_double(v, k); }};
}

Field u64(std::uint64_t Config::*m) {
  return {[m](const Config& c) { return std::to_string(c.*m); },
          [m](Config& c, std::string_view v, const std::string& k) { c.*m = to_u64(v, k); }};
}

Field integer(int Config::*m) {
  return {[m](const Config& c) { return std::to_string(c.*m); },
          [m](Config& c, std::string_view v, const std::string& k) { c.*m = to_int(v, k); }};
}

Field text(std::string Config::*m) {
  return {[m](const Config& c) { return c.*m; },
          [m](Config& c, std::string_view v, const std::string&) { c.*m = std::string(v); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      {"r_window_m", real(&Config::r_window_m)},
      {"delta_r_m", real(&Config::delta_r_m)},
      {"u2_m", real(&Config::u2_m)},
      {"model", text(&Config::model)},
      {"rho", real(&Config::rho)},
      {"theta_rad", real(&Config::theta_rad)},
      {"street_w_m", real(&Config::street_w_m)},
      {"facade_b_m", real(&Config::facade_b_m)},
      {"height_h_m", real(&Config::height_h_m)},
      {"eta_dil", real(&Config::eta_dil)},
      {"p0_w", real(&Config::p0_w)},
      {"freq_hz", real(&Config::freq_hz)},
      {"wavelength_m", real(&Config::wavelength_m)},
      {"az_center_rad", real(&Config::az_center_rad)},
      {"az_halfwidth_rad", real(&Config::az_halfwidth_rad)},
      {"el_center_rad", real(&Config::el_center_rad)},
      {"el_halfwidth_rad", real(&Config::el_halfwidth_rad)},
      {"delta_h_m", real(&Config::delta_h_m)},
      {"n_rays", u64(&Config::n_rays)},
      {"max_bounces", integer(&Config::max_bounces)},
      {"gamma_db", real(&Config::gamma_db)},
      {"power_floor", real(&Config::power_floor)},
      {"sampler", text(&Config::sampler)},
      {"quadtree_depth",
       {[](const Config& c) { return c.quadtree_depth < 0 ? std::string("auto") : std::to_string(c.quadtree_depth); },
        [](Config& c, std::string_view v, const std::string& k) {
          c.quadtree_depth = v == "auto" ? -1 : to_int(v, k);
        }}},
      {"pixel_dd_m", real(&Config::pixel_dd_m)},
      {"pixel_dalpha_deg", real(&Config::pixel_dalpha_deg)},
      {"cos_floor", real(&Config::cos_floor)},
      {"fit_dmin_m", real(&Config::fit_dmin_m)},
      {"fit_dmax_m", real(&Config::fit_dmax_m)},
      {"fs_height_m", real(&Config::fs_height_m)},
      {"fs_inner_m", real(&Config::fs_inner_m)},
      {"fs_outer_m", real(&Config::fs_outer_m)},
      {"seed", u64(&Config::seed)},
      {"n_cities", u64(&Config::n_cities)},
  };
  return f;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config c;
  c.apply(text);
  return c;
}

void Config::apply(std::string_view text) {
  std::map<std::string, const Field*> by_name;
  for (const auto& [name, f] : fields()) by_name[name] = &f;
  std::set<std::string> seen;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = by_name.find(key);
    if (it == by_name.end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    it->second->set(*this, value, key);
  }
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(*this) + "\n";
  return out;
}

void Config::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(r_window_m, "r_window_m");
  if (!(delta_r_m >= 0.0)) throw ConfigError("delta_r_m must be non-negative");
  positive(u2_m, "u2_m");
  positive(street_w_m, "street_w_m");
  positive(facade_b_m, "facade_b_m");
  positive(height_h_m, "height_h_m");
  positive(p0_w, "p0_w");
  positive(freq_hz, "freq_hz");
  positive(wavelength_m, "wavelength_m");
  positive(delta_h_m, "delta_h_m");
  positive(pixel_dd_m, "pixel_dd_m");
  positive(pixel_dalpha_deg, "pixel_dalpha_deg");
  positive(cos_floor, "cos_floor");
  positive(power_floor, "power_floor");
  positive(fs_height_m, "fs_height_m");
  positive(fs_inner_m, "fs_inner_m");
  if (!(fs_outer_m > fs_inner_m)) throw ConfigError("fs_outer_m must exceed fs_inner_m");
  if (!(fit_dmax_m > fit_dmin_m && fit_dmin_m > 0.0)) throw ConfigError("need 0 < fit_dmin_m < fit_dmax_m");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
  if (!(eta_dil > 0.0 && eta_dil < 1.0)) throw ConfigError("eta_dil must lie in (0, 1)");
  if (!(gamma_db < 0.0)) throw ConfigError("gamma_db must be negative (gain below 1)");
  if (n_rays == 0) throw ConfigError("n_rays must be positive");
  if (n_cities == 0) throw ConfigError("n_cities must be positive");
  if (max_bounces < 0) throw ConfigError("max_bounces must be non-negative");
  if (quadtree_depth < -1 || quadtree_depth > 12) throw ConfigError("quadtree_depth must be auto or in [0, 12]");
  if (pixel_dd_m > r_window_m) throw ConfigError("pixel_dd_m must not exceed r_window_m");
  model_kind();
  sampler_kind();
  try {
    rt::SourceSpec s = source({0.0, 0.0, 1.0});
    s.validate();
    if (sampler_kind() == Sampler::Importance && !(s.el_min() > 0.0)) {
      throw ConfigError("importance sampling needs el_center_rad - el_halfwidth_rad > 0");
    }
    grid();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

double Config::gamma() const { return std::pow(10.0, gamma_db / 10.0); }

Sampler Config::sampler_kind() const {
  if (sampler == "uniform") return Sampler::Uniform;
  if (sampler == "importance") return Sampler::Importance;
  throw ConfigError("sampler must be uniform or importance");
}

tess::Model Config::model_kind() const {
  try {
    return city::parse_model(model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

city::CityParams Config::city_params() const {
  city::CityParams p;
  p.model = model_kind();
  p.u2 = u2_m;
  p.rho = rho;
  p.theta = theta_rad;
  p.street_w = street_w_m;
  p.facade_b = facade_b_m;
  p.height_h = height_h_m;
  p.eta_dil = eta_dil;
  p.delta_h = delta_h_m;
  p.r_window = r_window_m;
  p.delta_r = delta_r_m;
  return p;
}

rt::SourceSpec Config::source(Vec3 position) const {
  rt::SourceSpec s;
  s.position = position;
  s.az_center = az_center_rad;
  s.az_halfwidth = az_halfwidth_rad;
  s.el_center = el_center_rad;
  s.el_halfwidth = el_halfwidth_rad;
  s.p0 = p0_w;
  s.gamma = gamma();
  return s;
}

rt::TraceLimits Config::limits() const { return {gamma(), power_floor, max_bounces}; }

pm::PolarGrid Config::grid() const {
  return pm::PolarGrid::make(r_window_m, pixel_dd_m, pixel_dalpha_deg * std::numbers::pi / 180.0);
}

rt::SourceSpec Config::free_space_source() const {
  rt::SourceSpec s = source({0.0, 0.0, fs_height_m});
  s.az_center = 0.0;
  s.az_halfwidth = std::numbers::pi;
  const double lo = std::atan(fs_height_m / fs_outer_m);
  const double hi = std::atan(fs_height_m / fs_inner_m);
  s.el_center = 0.5 * (lo + hi);
  s.el_halfwidth = 0.5 * (hi - lo);
  return s;
}

}  // namespace urbanprop

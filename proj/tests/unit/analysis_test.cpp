#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "urbanprop/analysis.hpp"
#include "urbanprop/citygen.hpp"

using namespace urbanprop;
using namespace urbanprop::analysis;

namespace {

constexpr double kPi = std::numbers::pi;

pm::AttenuationMap flat_map(double value) {
  pm::AttenuationMap m;
  m.grid = pm::PolarGrid::make(1000.0, 10.0, 2.0 * kPi / 180.0);
  m.power.assign(m.grid.size(), value);
  m.masked.assign(m.grid.size(), 0);
  return m;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("street fraction limits") {
  const auto ground = city::assemble_scene({}, {}, 1500.0);
  CHECK(street_area_fraction(ground, 1000.0) == 1.0);
  const auto cover = testing::square(-2000, -2000, 2000, 2000);
  const auto full = city::assemble_scene({{cover, 0}}, {}, 1500.0);
  CHECK(street_area_fraction(full, 1000.0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("street fraction agrees with point sampling") {
  city::CityParams p;
  const auto scene = city::generate_city(p, 71);
  const double eta = street_area_fraction(scene, 1000.0);
  CHECK(eta > 0.0);
  CHECK(eta < 1.0);
  Rng rng(72);
  const int n = 100000;
  int street = 0;
  for (int i = 0; i < n; ++i) {
    const double r = 1000.0 * std::sqrt(uniform01(rng));
    const double a = uniform(rng, 0.0, 2.0 * kPi);
    const geom::Point2 q{r * std::cos(a), r * std::sin(a)};
    bool inside = false;
    for (const auto& b : scene.blocks) {
      if (geom::contains(b.polygon, q)) {
        inside = true;
        break;
      }
    }
    street += !inside;
  }
  CHECK(double(street) / n == doctest::Approx(eta).epsilon(0.01));
}

TEST_CASE("ensemble of flat maps") {
  const std::vector<pm::AttenuationMap> one{flat_map(3.5)};
  const std::vector<double> w1{1.0};
  const auto e = ensemble_average(one, w1);
  CHECK(e.n_cities == 1);
  for (double p : e.power) CHECK(p == doctest::Approx(3.5));
  const std::vector<pm::AttenuationMap> two{flat_map(3.5), flat_map(3.5)};
  const std::vector<double> w2{1.0, 1.0};
  const auto e2 = ensemble_average(two, w2);
  for (std::size_t j = 0; j < e.power.size(); ++j) CHECK(e2.power[j] == doctest::Approx(e.power[j]));
  // Street fractions weight each map.
  const std::vector<double> wh{0.5};
  CHECK(ensemble_average(one, wh).power[10] == doctest::Approx(1.75));
}

TEST_CASE("ensemble rejects mismatched inputs") {
  auto other = flat_map(1.0);
  other.grid = pm::PolarGrid::make(500.0, 10.0, 2.0 * kPi / 180.0);
  other.power.assign(other.grid.size(), 1.0);
  const std::vector<pm::AttenuationMap> maps{flat_map(1.0), other};
  const std::vector<double> w{1.0, 1.0};
  CHECK_THROWS_AS(ensemble_average(maps, w), std::invalid_argument);
  const std::vector<double> short_w{1.0};
  const std::vector<pm::AttenuationMap> same{flat_map(1.0), flat_map(1.0)};
  CHECK_THROWS_AS(ensemble_average(same, short_w), std::invalid_argument);
}

TEST_CASE("crown averaging divides the pixel error by the root of the sector count") {
  // About 200 sectors give a relative error 14 times smaller.
  CHECK(std::sqrt(200.0) == doctest::Approx(14.0).epsilon(0.02));
  Rng rng(73);
  const int cities = 50;
  const double sigma = 0.3;
  std::vector<pm::AttenuationMap> maps;
  for (int i = 0; i < cities; ++i) {
    auto m = flat_map(1.0);
    for (double& p : m.power) p = 1.0 + sigma * (2.0 * uniform01(rng) - 1.0) * std::sqrt(3.0);
    maps.push_back(std::move(m));
  }
  const std::vector<double> w(cities, 1.0);
  const auto e = ensemble_average(maps, w);
  const double expected = sigma / std::sqrt(180.0 * cities);
  double mean_se = 0.0;
  for (int j = 1; j < 100; ++j) mean_se += e.std_error[j];
  mean_se /= 99.0;
  CHECK(mean_se == doctest::Approx(expected).epsilon(0.1));
}

TEST_CASE("power-law fits") {
  std::vector<double> d;
  std::vector<double> p;
  std::vector<double> fs;
  std::vector<double> flat;
  for (int j = 1; j <= 100; ++j) {
    d.push_back(10.0 * j);
    p.push_back(5.0 / std::pow(10.0 * j, 3.0));
    fs.push_back(1.0 / (100.0 * j * j + 400.0));
    flat.push_back(2.0);
  }
  const auto f = fit_power_law(d, p, 1.0, 1e9);
  CHECK(f.alpha == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.a == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.points == 100);
  const auto g = fit_power_law(d, fs, 200.0, 1000.0);
  CHECK(std::abs(g.alpha - 2.0) <= 0.02);
  CHECK(fit_power_law(d, flat, 1.0, 1e9).alpha == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS_AS(fit_power_law(d, p, 5.0, 25.0), std::invalid_argument);
}

TEST_CASE("property: fits are scale equivariant") {
  Rng rng(74);
  std::vector<double> d;
  std::vector<double> p;
  for (int j = 1; j <= 100; ++j) {
    d.push_back(10.0 * j);
    p.push_back(std::exp(uniform(rng, -1, 1)) / std::pow(10.0 * j, 3.7));
  }
  const auto f = fit_power_law(d, p, 50.0, 1000.0);
  for (double c : {1e-6, 0.5, 3.0, 1e8}) {
    std::vector<double> q = p;
    for (double& v : q) v *= c;
    const auto g = fit_power_law(d, q, 50.0, 1000.0);
    CHECK(g.alpha == doctest::Approx(f.alpha).epsilon(1e-9));
    CHECK(g.r_squared == doctest::Approx(f.r_squared).epsilon(1e-9));
    CHECK(g.a == doctest::Approx(c * f.a).epsilon(1e-9));
  }
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "urbanprop/citygen.hpp"
#include "urbanprop/raytrace.hpp"

using namespace urbanprop;
using namespace urbanprop::rt;
using geom::Point2;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Point2> rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x0, y1}, {x1, y1}, {x1, y0}};
}

city::CityScene scene_of(std::vector<city::Building> buildings, double radius = 1500.0) {
  return city::assemble_scene({}, std::move(buildings), radius);
}

city::CityScene random_scene(Rng& rng) {
  std::vector<city::Building> b;
  const int n = 20 + static_cast<int>(rng() % 60);
  for (int i = 0; i < n; ++i) {
    const double x = uniform(rng, -400, 400);
    const double y = uniform(rng, -400, 400);
    const double w = uniform(rng, 5, 60);
    const double h = uniform(rng, 5, 60);
    b.push_back({rect(x, y, x + w, y + h), uniform(rng, 3, 60), 0});
  }
  return scene_of(std::move(b), 600.0);
}

}  // namespace

TEST_SUITE("raytrace") {

TEST_CASE("source measure of the emission portion") {
  SourceSpec s;
  s.az_halfwidth = 0.7;
  s.el_center = 0.4;
  s.el_halfwidth = 0.1;
  CHECK(sphere_measure(s) == doctest::Approx(0.7 * std::sin(0.1) * std::cos(0.4) / kPi).epsilon(1e-12));
  CHECK(solid_angle(s) == doctest::Approx(4 * kPi * sphere_measure(s)));
}

TEST_CASE("full sphere sampling is symmetric") {
  SourceSpec s;
  s.az_center = 0.0;
  s.az_halfwidth = kPi;
  s.el_center = 0.0;
  s.el_halfwidth = 0.5 * kPi;
  Rng rng(51);
  double z = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) z += sample_direction_uniform(s, rng).direction.z;
  // Var z = 1/3 for the uniform sphere.
  CHECK(std::abs(z / n) < 3.0 * std::sqrt(1.0 / 3.0 / n));
}

TEST_CASE("uniform elevation marginal follows the sine CDF") {
  SourceSpec s;
  Rng rng(52);
  const int n = 100000;
  std::vector<double> el(n);
  for (double& e : el) e = sample_direction_uniform(s, rng).elevation;
  std::sort(el.begin(), el.end());
  const double a = s.el_min();
  const double b = s.el_max();
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = (std::sin(el[i]) - std::sin(a)) / (std::sin(b) - std::sin(a));
    ks = std::max({ks, std::abs(cdf - double(i) / n), std::abs(cdf - double(i + 1) / n)});
  }
  // Kolmogorov critical value at p = 0.01.
  CHECK(ks < 1.628 / std::sqrt(double(n)));
}

TEST_CASE("importance law: CDF numerator, weights and ground density") {
  SourceSpec s;
  s.el_center = 0.5 * (std::atan(20.0 / 1000.0) + std::atan(20.0 / 50.0));
  s.el_halfwidth = 0.5 * (std::atan(20.0 / 50.0) - std::atan(20.0 / 1000.0));
  s.position = {0, 0, 20};
  CHECK(importance_cdf_numerator(s, s.el_min()) == doctest::Approx(0.0));
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = s.el_min() + (s.el_max() - s.el_min()) * i / 100.0;
    const double f = importance_cdf_numerator(s, t);
    CHECK(f > prev);
    prev = f;
  }
  Rng rng(53);
  const int n = 1000000;
  double sw = 0.0;
  double sw2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = sample_direction_importance(s, rng).omega;
    sw += w;
    sw2 += w * w;
  }
  const double mean = sw / n;
  const double sd = std::sqrt(sw2 / n - mean * mean);
  CHECK(std::abs(mean - 1.0) < 3.0 * sd / std::sqrt(double(n)));
}

TEST_CASE("ground map Jacobian") {
  CHECK(ground_map_jacobian(20.0, kPi / 4) == doctest::Approx(800.0));
  // Finite-difference determinant of (azimuth, elevation) -> ground point.
  const double h = 20.0;
  for (double el : {0.1, 0.4, kPi / 4, 1.2}) {
    const double az = 0.3;
    const double e = 1e-6;
    const Point2 px = ground_hit_point(h, az + e, el) - ground_hit_point(h, az - e, el);
    const Point2 pz = ground_hit_point(h, az, el + e) - ground_hit_point(h, az, el - e);
    const double det = std::abs(geom::cross(px, pz)) / (4 * e * e);
    CHECK(det == doctest::Approx(ground_map_jacobian(h, el)).epsilon(1e-6));
  }
}

TEST_CASE("reflection examples") {
  const Vec3 a = reflect({0, 0, -1}, {0, 0, 1});
  CHECK(a.z == doctest::Approx(1.0));
  const double r = 1.0 / std::sqrt(2.0);
  const Vec3 b = reflect({r, 0, -r}, {0, 0, 1});
  CHECK(b.x == doctest::Approx(r));
  CHECK(b.z == doctest::Approx(r));
  CHECK_THROWS_AS(reflect({1, 0, 0}, {0, 0, 1}), std::domain_error);
}

TEST_CASE("property: reflection is an isometry") {
  Rng rng(54);
  for (int i = 0; i < 10000; ++i) {
    Vec3 d{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    Vec3 n{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    d = (1.0 / norm(d)) * d;
    n = (1.0 / norm(n)) * n;
    if (std::abs(dot(d, n)) < 1e-9) continue;
    const Vec3 o = reflect(d, n);
    CHECK(norm(o) == doctest::Approx(1.0).epsilon(1e-12));
    // Mirror: same tangential part, flipped normal part.
    CHECK(dot(o, n) == doctest::Approx(-dot(d, n)).epsilon(1e-12));
    const Vec3 back = reflect(o, n);
    CHECK(norm(back - d) < 1e-12);
  }
}

TEST_CASE("free space: one ground hit at H / tan(elevation)") {
  const auto scene = scene_of({});
  const PrismScene ps(scene);
  const double h = 20.0;
  for (double el : {0.05, 0.2, 0.7, 1.4}) {
    const auto hits = trace_ray(ps, nullptr, {0, 0, h}, direction_from_angles(0.8, el), 1.0, {});
    REQUIRE(hits.size() == 1);
    CHECK(std::hypot(hits[0].x, hits[0].y) == doctest::Approx(h / std::tan(el)));
    CHECK(hits[0].n == 0);
  }
  CHECK(trace_ray(ps, nullptr, {0, 0, h}, direction_from_angles(0.8, -0.1), 1.0, {}).empty());
}

TEST_CASE("property: free-space ground map is invertible") {
  const auto scene = scene_of({}, 1e7);
  const PrismScene ps(scene);
  SourceSpec s;
  s.position = {0, 0, 20};
  s.el_center = 0.3;
  s.el_halfwidth = 0.28;
  Rng rng(55);
  for (int i = 0; i < 10000; ++i) {
    const Emission e = sample_direction_uniform(s, rng);
    const auto hits = trace_ray(ps, nullptr, s.position, e.direction, e.omega, {});
    REQUIRE(hits.size() == 1);
    const double az = std::atan2(hits[0].y, hits[0].x);
    const double el = std::atan2(20.0, std::hypot(hits[0].x, hits[0].y));
    CHECK(std::remainder(az - e.azimuth, 2 * kPi) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(el == doctest::Approx(e.elevation).epsilon(1e-9));
  }
}

TEST_CASE("street canyon matches the unfolded path") {
  // Walls at x = -10 and x = 10, tall enough to never be overflown before
  // the ground hit.
  const auto scene = scene_of({{rect(-30, -1000, -10, 1000), 1000.0, 0}, {rect(10, -1000, 30, 1000), 1000.0, 0}});
  const PrismScene ps(scene);
  const double h = 50.0;
  const double travel = 95.0;  // horizontal distance to the ground
  const double el = std::atan(h / travel);
  const auto hits = trace_ray(ps, nullptr, {0, 0, h}, direction_from_angles(0.0, el), 0.75, {});
  REQUIRE(hits.size() == 1);
  // Unfolded crossings at 10, 30, 50, 70, 90: five wall reflections.
  CHECK(hits[0].n == 5);
  // Folding X = 95 into the strip [-10, 10] with period 40 gives x = 5.
  CHECK(hits[0].x == doctest::Approx(5.0));
  CHECK(hits[0].y == doctest::Approx(0.0));
  CHECK(hits[0].direction.x < 0.0);
  CHECK(hits[0].omega == 0.75);
}

TEST_CASE("quadtree structure") {
  const auto scene = scene_of({{rect(-50, -50, 50, 50), 10.0, 0}, {rect(200, 200, 220, 220), 10.0, 0}}, 500.0);
  const PrismScene ps(scene);
  const QuadTreeIndex root(ps, 0);
  CHECK(root.side() == 1);
  CHECK(root.leaf(0, 0).size() == 2);
  const QuadTreeIndex two(ps, 1);
  // The centred building spans all four leaves.
  int seen = 0;
  for (std::size_t ix = 0; ix < 2; ++ix) {
    for (std::size_t iy = 0; iy < 2; ++iy) {
      for (auto b : two.leaf(ix, iy)) seen += b == 0;
    }
  }
  CHECK(seen == 4);
}

TEST_CASE("property: indexed first hit equals brute force") {
  Rng rng(56);
  for (int s = 0; s < 5; ++s) {
    const auto scene = random_scene(rng);
    const PrismScene ps(scene);
    for (int depth : {0, 2, auto_depth(ps), 7}) {
      const QuadTreeIndex idx(ps, depth);
      for (int i = 0; i < 200; ++i) {
        const Vec3 o{uniform(rng, -500, 500), uniform(rng, -500, 500), uniform(rng, 0.1, 80)};
        Vec3 d{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 0.3)};
        d = (1.0 / norm(d)) * d;
        const FirstHit a = first_hit(ps, &idx, o, d);
        const FirstHit b = first_hit(ps, nullptr, o, d);
        REQUIRE(a.hit == b.hit);
        if (!a.hit) continue;
        CHECK(a.surface == b.surface);
        CHECK(norm(a.point - b.point) <= 1e-9);
      }
    }
  }
}

TEST_CASE("property: tracing is deterministic and weights follow the bounce count") {
  const auto scene = city::generate_city([] {
    city::CityParams p;
    p.r_window = 300;
    p.delta_r = 100;
    return p;
  }(), 57);
  const PrismScene ps(scene);
  const QuadTreeIndex idx(ps, auto_depth(ps));
  SourceSpec s;
  s.position = scene.antenna;
  const auto run = [&](std::uint64_t seed) {
    Rng rng(seed);
    std::vector<GroundHit> all;
    for (int i = 0; i < 2000; ++i) {
      const Emission e = sample_direction_uniform(s, rng);
      trace_ray(ps, &idx, s.position, e.direction, e.omega, {}, all);
    }
    return all;
  };
  const auto a = run(58);
  const auto b = run(58);
  REQUIRE(a.size() == b.size());
  bool reflected = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
    CHECK(a[i].n == b[i].n);
    CHECK(a[i].direction.z < 0.0);
    // 0.5^n must stay above the default power floor.
    CHECK(std::pow(0.5, a[i].n) >= 1e-6);
    reflected = reflected || a[i].n > 0;
  }
  CHECK(reflected);
}

}  // TEST_SUITE

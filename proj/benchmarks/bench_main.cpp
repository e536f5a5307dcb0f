#include <benchmark/benchmark.h>

#include "urbanprop/citygen.hpp"
#include "urbanprop/config.hpp"
#include "urbanprop/pipeline.hpp"
#include "urbanprop/raytrace.hpp"
#include "urbanprop/tessellation.hpp"

using namespace urbanprop;

namespace {

void BM_Tessellation(benchmark::State& state) {
  const auto model = static_cast<tess::Model>(state.range(0));
  const auto window = geom::ConvexPolygon::regular_with_area({0.0, 0.0}, 1.0, 256);
  const double lambda = tess::calibrate_intensity(0.5, tess::xi({}));
  std::uint64_t i = 0;
  for (auto _ : state) {
    Rng rng = make_rng(1, i++);
    auto t = model == tess::Model::Plt ? tess::generate_plt(lambda, {}, window, rng)
                                       : tess::generate_stit(lambda, 1.0, {}, window, rng);
    benchmark::DoNotOptimize(t.cell_count());
  }
  state.SetLabel(city::model_name(model));
}
BENCHMARK(BM_Tessellation)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_City(benchmark::State& state) {
  Config cfg;
  cfg.model = state.range(0) == 0 ? "plt" : "stit";
  std::uint64_t i = 0;
  for (auto _ : state) {
    auto city = pipeline::make_city(cfg, i++);
    benchmark::DoNotOptimize(city.scene.buildings.size());
  }
  state.SetLabel(cfg.model);
}
BENCHMARK(BM_City)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Trace(benchmark::State& state) {
  Config cfg;
  cfg.n_rays = 20000;
  const auto city = pipeline::make_city(cfg, 0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto map = pipeline::trace_map(cfg, city.scene, seed++, 1);
    benchmark::DoNotOptimize(map.power.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.n_rays));
}
BENCHMARK(BM_Trace)->Unit(benchmark::kMillisecond);

// First-hit queries from the antenna: quadtree of depth range(0), or brute
// force for -1.
void BM_FirstHit(benchmark::State& state) {
  const Config cfg;
  const auto city = pipeline::make_city(cfg, 0);
  const rt::PrismScene prisms(city.scene);
  const int depth = static_cast<int>(state.range(0));
  const rt::QuadTreeIndex index(prisms, depth < 0 ? 0 : depth);
  const rt::QuadTreeIndex* used = depth < 0 ? nullptr : &index;
  const rt::SourceSpec src = cfg.source(city.scene.antenna);
  Rng rng = make_rng(2, 0);
  for (auto _ : state) {
    const auto e = rt::sample_direction_uniform(src, rng);
    benchmark::DoNotOptimize(rt::first_hit(prisms, used, city.scene.antenna, e.direction));
  }
  state.SetLabel(depth < 0 ? "brute force" : "depth " + std::to_string(depth));
}
BENCHMARK(BM_FirstHit)->Arg(-1)->Arg(4)->Arg(6)->Arg(8);

}  // namespace

BENCHMARK_MAIN();

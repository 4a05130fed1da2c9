#include <tlsdeform/deform.hpp>
#include <tlsdeform/mesh.hpp>
#include <tlsdeform/spatial.hpp>
#include <tlsdeform/synth.hpp>

#include <benchmark/benchmark.h>

using namespace tlsdeform;

namespace {

PointCloud wall(double length, double spacing, std::uint64_t seed = 1) {
  WallSpec w;
  w.length = length;
  w.height = length / 2.0;
  w.spacing = spacing;
  w.seed = seed;
  return gen_wall(w);
}

void BM_IndexBuild(benchmark::State& state) {
  const PointCloud c = wall(static_cast<double>(state.range(0)), 0.005);
  for (auto _ : state) benchmark::DoNotOptimize(SpatialIndex(c));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.size()));
}
BENCHMARK(BM_IndexBuild)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Nearest(benchmark::State& state) {
  const PointCloud c = wall(2.0, 0.005);
  const SpatialIndex index(c);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.nearest(c[i] + Vector3(0.001, 0.002, 0.001)));
    i = (i + 7919) % c.size();
  }
}
BENCHMARK(BM_Nearest);

void BM_RadiusSearch(benchmark::State& state) {
  const PointCloud c = wall(2.0, 0.005);
  const SpatialIndex index(c);
  const double r = static_cast<double>(state.range(0)) * 1e-3;
  std::vector<std::size_t> out;
  std::size_t i = 0;
  for (auto _ : state) {
    index.radius_search(c[i], r, out);
    benchmark::DoNotOptimize(out.data());
    i = (i + 7919) % c.size();
  }
}
BENCHMARK(BM_RadiusSearch)->Arg(15)->Arg(60);

void BM_Delaunay(benchmark::State& state) {
  const PointCloud c = wall(static_cast<double>(state.range(0)), 0.005);
  const Plane plane(Vector3::UnitY(), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(delaunay_tin(c, plane));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.size()));
}
BENCHMARK(BM_Delaunay)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_PointToMesh(benchmark::State& state) {
  const PointCloud c = wall(2.0, 0.005);
  const TinMesh mesh = delaunay_tin(c, Plane(Vector3::UnitY(), 0.0));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(point_to_mesh_distance(c[i] + Vector3(0.0005, 0.003, 0.0005), mesh));
    i = (i + 7919) % c.size();
  }
}
BENCHMARK(BM_PointToMesh);

void BM_M3C2(benchmark::State& state) {
  const double length = static_cast<double>(state.range(0));
  const PointCloud ref = wall(length, 0.005, 1);
  const PointCloud qry = wall(length, 0.005, 2);
  for (auto _ : state) benchmark::DoNotOptimize(m3c2(ref, qry));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ref.size()));
}
BENCHMARK(BM_M3C2)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

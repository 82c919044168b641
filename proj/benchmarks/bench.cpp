#include <benchmark/benchmark.h>

#include <random>

#include "evfusion/dst.hpp"
#include "evfusion/es_layer.hpp"
#include "evfusion/gradcheck.hpp"
#include "evfusion/loss.hpp"
#include "evfusion/metrics.hpp"
#include "evfusion/mmef.hpp"

using namespace evfusion;

namespace {

GradCheckInstance instance(std::size_t voxels, std::size_t classes, std::size_t sources, std::size_t prototypes) {
  GradCheckShape shape;
  shape.voxels = voxels;
  shape.classes = classes;
  shape.sources = sources;
  shape.prototypes = prototypes;
  shape.dim = 4;
  return random_gradcheck_instance(shape, 1);
}

void BM_EsForward(benchmark::State& state) {
  const auto inst = instance(1, 4, 1, static_cast<std::size_t>(state.range(0)));
  const auto& params = inst.params.sources.front();
  const auto x = inst.batch.sources.front().row(0);
  for (auto _ : state) benchmark::DoNotOptimize(es_forward(x, params));
}
BENCHMARK(BM_EsForward)->Arg(1)->Arg(10)->Arg(40);

void BM_EsContour(benchmark::State& state) {
  const auto inst = instance(1, 4, 1, static_cast<std::size_t>(state.range(0)));
  const ESEvaluator eval(inst.params.sources.front());
  auto ws = eval.make_workspace();
  std::vector<double> pl(4);
  const auto x = inst.batch.sources.front().row(0);
  for (auto _ : state) {
    eval.contour(x, ws, pl);
    benchmark::DoNotOptimize(pl.data());
  }
}
BENCHMARK(BM_EsContour)->Arg(1)->Arg(10)->Arg(40);

void BM_FuseVoxel(benchmark::State& state) {
  const auto sources = static_cast<std::size_t>(state.range(0));
  const auto frame = dst::Frame::indexed(4);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::vector<dst::ContourFunction> pl;
  for (std::size_t h = 0; h < sources; ++h) pl.emplace_back(frame, std::vector<double>{unit(rng), unit(rng), unit(rng), unit(rng)});
  const ReliabilityMatrix r(frame, sources);
  for (auto _ : state) benchmark::DoNotOptimize(fuse_voxel(pl, r));
}
BENCHMARK(BM_FuseVoxel)->Arg(1)->Arg(4)->Arg(16);

void BM_Backward(benchmark::State& state) {
  const auto inst = instance(static_cast<std::size_t>(state.range(0)), 4, 4, 10);
  for (auto _ : state) benchmark::DoNotOptimize(backward(inst.params, inst.batch, inst.gt));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Backward)->Arg(256)->Arg(4096);

void BM_CombineSimple(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  const auto frame = dst::Frame::indexed(4);
  std::vector<dst::SimpleClassMass> masses(count, dst::SimpleClassMass(frame, {0.1, 0.2, 0.1, 0.1}, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(dst::combine_simple(masses));
}
BENCHMARK(BM_CombineSimple)->Arg(10)->Arg(40);

void BM_DempsterChain(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  const auto frame = dst::Frame::indexed(4);
  const auto m = dst::to_mass_function(dst::SimpleClassMass(frame, {0.1, 0.2, 0.1, 0.1}, 0.5));
  for (auto _ : state) {
    auto acc = m;
    for (std::size_t i = 1; i < count; ++i) acc = dst::dempster_combine(acc, m);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_DempsterChain)->Arg(10)->Arg(40);

void BM_Hausdorff(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const GridGeometry grid{{n, n, n}, {1.0, 1.0, 1.0}};
  Mask a(grid.voxels()), b(grid.voxels());
  const double c = static_cast<double>(n) / 2.0;
  for (std::size_t z = 0; z < n; ++z) {
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = static_cast<double>(x) - c, dy = static_cast<double>(y) - c, dz = static_cast<double>(z) - c;
        const double r2 = dx * dx + dy * dy + dz * dz;
        a[(z * n + y) * n + x] = r2 < c * c * 0.4;
        b[(z * n + y) * n + x] = (dx - 1.0) * (dx - 1.0) + dy * dy + dz * dz < c * c * 0.3;
      }
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff(a, b, grid));
}
BENCHMARK(BM_Hausdorff)->Arg(16)->Arg(32);

}  // namespace
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "semsimp/rng.hpp"
#include "semsimp/spatial_index.hpp"

using namespace semsimp;

namespace {

LabeledCloud make_cloud(size_t n) {
    LabeledCloud cloud;
    Rng rng(1);
    for (size_t i = 0; i < n; ++i) {
        cloud.points.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-2, 2)});
        cloud.labels.push_back(0);
    }
    return cloud;
}

}  // namespace

static void BM_BuildIndex(benchmark::State& state) {
    const LabeledCloud cloud = make_cloud(static_cast<size_t>(state.range(0)));
    for (auto _ : state) {
        SpatialIndex index(cloud);
        benchmark::DoNotOptimize(index.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildIndex)->Arg(10000)->Arg(50000);

static void BM_Knn(benchmark::State& state) {
    const LabeledCloud cloud = make_cloud(50000);
    const SpatialIndex index(cloud);
    Rng rng(2);
    for (auto _ : state) {
        const Vec3 q{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-2, 2)};
        benchmark::DoNotOptimize(index.knn(q, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_Knn)->Arg(8)->Arg(32);

static void BM_RadiusSearch(benchmark::State& state) {
    const LabeledCloud cloud = make_cloud(50000);
    const SpatialIndex index(cloud);
    Rng rng(3);
    for (auto _ : state) {
        const Vec3 q{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-2, 2)};
        benchmark::DoNotOptimize(index.radius_search(q, 2.5));
    }
}
BENCHMARK(BM_RadiusSearch);

BENCHMARK_MAIN();

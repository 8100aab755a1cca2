#include <benchmark/benchmark.h>

#include "semsimp/delaunay.hpp"
#include "semsimp/rng.hpp"

using namespace semsimp;

static void BM_BuildDelaunay(benchmark::State& state) {
    Rng rng(7);
    std::vector<Vec3> pts;
    for (int i = 0; i < state.range(0); ++i)
        pts.push_back({rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)});
    for (auto _ : state) {
        const TetMesh mesh = build_delaunay(pts);
        benchmark::DoNotOptimize(mesh.cells().size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildDelaunay)->Arg(1000)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

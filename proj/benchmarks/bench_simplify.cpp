#include <benchmark/benchmark.h>

#include "semsimp/rng.hpp"
#include "semsimp/simplify.hpp"

using namespace semsimp;

namespace {

LabeledCloud plane_cloud(int n) {
    LabeledCloud cloud;
    Rng rng(4);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            cloud.points.push_back({i + rng.uniform(-0.2, 0.2), j + rng.uniform(-0.2, 0.2),
                                    rng.gaussian() * 0.05});
            cloud.labels.push_back(0);
        }
    return cloud;
}

const Palette& palette() {
    static const Palette p({{0, "flat", true}});
    return p;
}

}  // namespace

static void BM_Simplify(benchmark::State& state, Method method) {
    const LabeledCloud cloud = plane_cloud(static_cast<int>(state.range(0)));
    SimplifyConfig config;
    config.method = method;
    config.region = RegionSpec::Radius(2.5);
    for (auto _ : state) {
        const DecimationResult result = simplify_cloud(cloud, palette(), config);
        benchmark::DoNotOptimize(result.kept());
    }
    state.SetItemsProcessed(state.iterations() * cloud.size());
}
BENCHMARK_CAPTURE(BM_Simplify, ls, Method::LS)->Arg(60)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Simplify, acs, Method::ACS)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Simplify, ps, Method::PS)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "semsimp/render.hpp"
#include "semsimp/rng.hpp"

using namespace semsimp;

namespace {

TriMesh random_mesh(int triangles) {
    TriMesh mesh;
    Rng rng(9);
    for (int i = 0; i < triangles; ++i) {
        const Vec3 base{rng.uniform(-10, 10), rng.uniform(-8, 8), rng.uniform(5, 30)};
        mesh.vertices.push_back(base);
        mesh.vertices.push_back(base + Vec3{rng.uniform(0.1, 1), 0, rng.uniform(-0.5, 0.5)});
        mesh.vertices.push_back(base + Vec3{0, rng.uniform(0.1, 1), rng.uniform(-0.5, 0.5)});
        mesh.triangles.push_back({3 * i, 3 * i + 1, 3 * i + 2});
    }
    return mesh;
}

Camera camera() {
    Camera cam;
    cam.fx = cam.fy = 150.0;
    cam.cx = 80;
    cam.cy = 60;
    cam.width = 160;
    cam.height = 120;
    return cam;
}

}  // namespace

static void BM_RenderBvh(benchmark::State& state) {
    const TriMesh mesh = random_mesh(static_cast<int>(state.range(0)));
    const Camera cam = camera();
    for (auto _ : state) {
        const DepthMap depth = render_depth(mesh, cam);
        benchmark::DoNotOptimize(depth.data.data());
    }
}
BENCHMARK(BM_RenderBvh)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);

static void BM_RenderBrute(benchmark::State& state) {
    const TriMesh mesh = random_mesh(static_cast<int>(state.range(0)));
    const Camera cam = camera();
    for (auto _ : state) {
        const DepthMap depth = render_depth_brute(mesh, cam);
        benchmark::DoNotOptimize(depth.data.data());
    }
}
BENCHMARK(BM_RenderBrute)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

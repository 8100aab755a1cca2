#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semsimp/reconstruct.hpp"
#include "semsimp/synthetic.hpp"
#include "test_util.hpp"

using namespace semsimp;

TEST_CASE("visibility weight: zero at the point, half at the half-value distance") {
    CHECK(visibility_weight(0.0, 0.05) == 0.0);
    for (double sigma : {0.05, 0.01, 0.5}) {
        const double d_half = sigma * std::sqrt(2.0 * std::log(2.0));
        CHECK(visibility_weight(d_half, sigma) == doctest::Approx(0.5).epsilon(1e-12));
    }
    CHECK(visibility_weight(1.0, 0.05) == doctest::Approx(1.0));
}

TEST_CASE("trace_ray: ray through the single finite tetrahedron votes exactly that one") {
    // One tetra around the origin; the target point sits past it so the cell
    // is traversed in the middle of the segment.
    std::vector<Vec3> pts{{-1, -1, -0.6}, {1, -1, -0.6}, {0, 1.2, -0.6}, {0, 0.1, 1.1},
                          {0, 0, -3.0}};
    LabeledCloud cloud;
    cloud.points = pts;
    TetMesh mesh = build_delaunay(cloud.points);

    ReconParams params;
    // Camera above: the segment to point 4 (below) passes through the tet.
    trace_ray(mesh, VisibilityRay{{0, 0, 6.0}, 4}, params);

    size_t finite_voted = 0;
    double finite_vote = 0;
    for (const auto& cell : mesh.cells()) {
        if (!mesh.cell_is_finite(cell)) continue;
        if (cell.mu_free > 0) {
            ++finite_voted;
            finite_vote = cell.mu_free;
        }
    }
    CHECK(finite_voted == 1);
    CHECK(finite_vote > 0.9);  // exit facet far from the target -> weight ~ 1
}

TEST_CASE("trace_ray: votes are additive, tracing twice doubles every weight") {
    LabeledCloud cloud;
    Rng rng(3);
    for (int i = 0; i < 40; ++i)
        cloud.points.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
    TetMesh once = build_delaunay(cloud.points);
    TetMesh twice = build_delaunay(cloud.points);
    const VisibilityRay ray{{8, 7, 6}, 5};
    ReconParams params;
    trace_ray(once, ray, params);
    trace_ray(twice, ray, params);
    trace_ray(twice, ray, params);
    for (size_t i = 0; i < once.cells().size(); ++i) {
        CHECK(twice.cells()[i].mu_free == doctest::Approx(2.0 * once.cells()[i].mu_free));
        CHECK(twice.cells()[i].mu_matter == doctest::Approx(2.0 * once.cells()[i].mu_matter));
        CHECK(once.cells()[i].mu_free >= 0.0);
        CHECK(once.cells()[i].mu_matter >= 0.0);
    }
}

TEST_CASE("trace_ray: clipped ray from far outside still carves toward the point") {
    LabeledCloud cloud;
    Rng rng(8);
    for (int i = 0; i < 60; ++i)
        cloud.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    TetMesh mesh = build_delaunay(cloud.points);
    ReconParams params;
    trace_ray(mesh, VisibilityRay{{500, 400, 300}, 0}, params);  // way outside the box
    double total = 0;
    for (const auto& cell : mesh.cells()) total += cell.mu_free;
    CHECK(total > 0.0);
}

TEST_CASE("extract_manifold: a single free tetrahedron yields its closed boundary") {
    std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    TetMesh mesh = build_delaunay(pts);
    for (auto& cell : mesh.cells()) {
        if (mesh.cell_is_finite(cell)) cell.mu_free = 5.0;
    }
    const TriMesh surface = extract_manifold(mesh);
    CHECK(surface.triangles.size() == 4);
    CHECK(surface.vertices.size() == 4);
    const SurfaceCheck check = check_surface(surface);
    CHECK(check.manifold());
    CHECK(check.euler_characteristic() == 2);
}

TEST_CASE("extract_manifold: no free cell produces an empty surface") {
    std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    TetMesh mesh = build_delaunay(pts);
    const TriMesh surface = extract_manifold(mesh);
    CHECK(surface.triangles.empty());
}

TEST_CASE("hollow cube scene: watertight genus-0 surface from input points only") {
    const SyntheticScene scene = make_hollow_cube_scene({});
    TetMesh mesh = build_delaunay(scene.cloud.points);
    accumulate_visibility(mesh, scene.cloud, scene.cameras, {});
    const TriMesh surface = extract_manifold(mesh);
    REQUIRE(!surface.triangles.empty());

    const SurfaceCheck check = check_surface(surface);
    CHECK(check.watertight);
    CHECK(check.oriented);
    CHECK(check.vertex_fans);
    CHECK(check.euler_characteristic() == 2);

    // every output vertex is an input point (never a bounding-box vertex)
    for (const Vec3& v : surface.vertices) {
        bool found = false;
        for (const Vec3& p : scene.cloud.points)
            if (p == v) { found = true; break; }
        CHECK(found);
    }
}

TEST_CASE("check_surface: detects open and non-manifold meshes") {
    TriMesh open_mesh;
    open_mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    open_mesh.triangles = {{0, 1, 2}};
    CHECK(!check_surface(open_mesh).watertight);

    // two tetrahedra sharing exactly one vertex: pinched, not a single fan
    TriMesh pinched;
    pinched.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                        {-1, 0, 0}, {0, -1, 0}, {0, 0, -1}};
    auto add_tet = [&](int a, int b, int c, int d) {
        pinched.triangles.push_back({a, c, b});
        pinched.triangles.push_back({a, b, d});
        pinched.triangles.push_back({a, d, c});
        pinched.triangles.push_back({b, c, d});
    };
    add_tet(0, 1, 2, 3);
    add_tet(0, 4, 5, 6);
    const SurfaceCheck check = check_surface(pinched);
    CHECK(check.watertight);
    CHECK(!check.vertex_fans);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semsimp/eval.hpp"
#include "semsimp/io.hpp"
#include "semsimp/render.hpp"
#include "semsimp/synthetic.hpp"
#include "test_util.hpp"

using namespace semsimp;
using semsimp::test::TempDir;

namespace {

Camera simple_camera(int width = 64, int height = 48, double focal = 40.0) {
    Camera cam;
    cam.id = 0;
    cam.fx = cam.fy = focal;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    return cam;  // identity pose, looking down +z
}

TriMesh random_mesh(size_t triangles, uint64_t seed) {
    TriMesh mesh;
    Rng rng(seed);
    for (size_t i = 0; i < triangles; ++i) {
        const Vec3 base{rng.uniform(-4, 4), rng.uniform(-3, 3), rng.uniform(4, 14)};
        mesh.vertices.push_back(base);
        mesh.vertices.push_back(base + Vec3{rng.uniform(0.2, 2), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        mesh.vertices.push_back(base + Vec3{rng.uniform(-1, 1), rng.uniform(0.2, 2), rng.uniform(-1, 1)});
        const int k = static_cast<int>(3 * i);
        mesh.triangles.push_back({k, k + 1, k + 2});
    }
    return mesh;
}

}  // namespace

TEST_CASE("render: a screen-parallel triangle covering a pixel gives its depth") {
    const Camera cam = simple_camera();
    TriMesh mesh;
    mesh.vertices = {{-0.3, -0.3, 5}, {0.6, -0.3, 5}, {0, 0.6, 5}};
    mesh.triangles = {{0, 1, 2}};
    const DepthMap depth = render_depth(mesh, cam);
    CHECK(depth.at(32, 24) == doctest::Approx(5.0));  // principal-point ray
    // corner pixel whose ray passes far outside the triangle
    CHECK(depth.at(0, 0) == 0.0);
}

TEST_CASE("render: BVH equals brute force bit for bit on a 100-triangle mesh at 64x48") {
    const TriMesh mesh = random_mesh(100, 21);
    const Camera cam = simple_camera();
    const DepthMap fast = render_depth(mesh, cam);
    const DepthMap slow = render_depth_brute(mesh, cam);
    REQUIRE(fast.data.size() == slow.data.size());
    for (size_t i = 0; i < fast.data.size(); ++i) CHECK(fast.data[i] == slow.data[i]);
}

TEST_CASE("render: rigidly moving mesh and camera together leaves the depth unchanged") {
    const TriMesh mesh = random_mesh(40, 5);
    const Camera cam = simple_camera();
    const DepthMap reference = render_depth(mesh, cam);

    const double a = 0.35, b = -0.6;
    const Mat3 rot_z = Mat3::from_rows({std::cos(a), -std::sin(a), 0},
                                       {std::sin(a), std::cos(a), 0}, {0, 0, 1});
    const Mat3 rot_x = Mat3::from_rows({1, 0, 0}, {0, std::cos(b), -std::sin(b)},
                                       {0, std::sin(b), std::cos(b)});
    Mat3 rot;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += rot_z(r, k) * rot_x(k, c);
            rot(r, c) = s;
        }
    const Vec3 shift{3, -7, 2};

    TriMesh moved = mesh;
    for (Vec3& v : moved.vertices) v = rot * v + shift;
    Camera moved_cam = cam;
    // world' = rot * world + shift  =>  R' = R rot^T, t' = t - R rot^T shift
    moved_cam.R = Mat3::from_rows({0, 0, 0}, {0, 0, 0}, {0, 0, 0});
    const Mat3 rt = rot.transposed();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += cam.R(r, k) * rt(k, c);
            moved_cam.R(r, c) = s;
        }
    moved_cam.t = cam.t - (moved_cam.R * shift);

    const DepthMap moved_depth = render_depth(moved, moved_cam);
    size_t both_valid = 0;
    for (size_t i = 0; i < reference.data.size(); ++i) {
        const bool va = reference.data[i] > 0, vb = moved_depth.data[i] > 0;
        CHECK(va == vb);
        if (va && vb) {
            CHECK(moved_depth.data[i] == doctest::Approx(reference.data[i]).epsilon(1e-6));
            ++both_valid;
        }
    }
    CHECK(both_valid > 100);
}

TEST_CASE("depth_rmse: closed forms and masking") {
    DepthMap a, b;
    a.width = b.width = 10;
    a.height = b.height = 10;
    a.data.assign(100, 5.0);
    b.data.assign(100, 5.0);
    CHECK(depth_rmse(a, b).rmse == 0.0);

    for (auto& v : b.data) v = 5.1;
    const RmseResult r = depth_rmse(b, a);
    CHECK(r.rmse == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(r.valid_pixels == 100);

    // symmetric
    CHECK(depth_rmse(a, b).rmse == doctest::Approx(depth_rmse(b, a).rmse));

    // pixels invalid on either side are excluded
    DepthMap truth, rendered;
    truth.width = rendered.width = 2;
    truth.height = rendered.height = 1;
    truth.data = {5.0, 0.0};
    rendered.data = {5.0, 9.0};
    const RmseResult masked = depth_rmse(rendered, truth);
    CHECK(masked.rmse == 0.0);
    CHECK(masked.valid_pixels == 1);

    truth.data = {0.0, 0.0};
    CHECK_THROWS_AS(depth_rmse(rendered, truth), std::runtime_error);

    DepthMap wrong;
    wrong.width = 3;
    wrong.height = 1;
    wrong.data = {1, 2, 3};
    CHECK_THROWS_AS(depth_rmse(rendered, wrong), std::invalid_argument);
}

TEST_CASE("cloud_stats: identity, simple ratio, CSV round-trip") {
    const Palette palette({{1, "ground", true}, {2, "wall", true}});
    LabeledCloud before, after;
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        before.points.push_back({rng.uniform01(), rng.uniform01(), 0});
        before.labels.push_back(1);
    }
    for (int i = 0; i < 50; ++i) {
        before.points.push_back({rng.uniform01(), rng.uniform01(), 1});
        before.labels.push_back(2);
    }
    auto identical = cloud_stats(before, before, palette);
    for (const auto& row : identical) CHECK(row.retention() == 1.0);

    after = before;
    after.points.resize(400);
    after.labels.assign(400, 1);
    const auto rows = cloud_stats(before, after, palette);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].label == 1);
    CHECK(rows[0].before == 1000);
    CHECK(rows[0].after == 400);
    CHECK(rows[0].retention() == doctest::Approx(0.4));
    CHECK(rows[1].after == 0);

    TempDir dir("stats");
    write_stats_csv(rows, dir.file("s.csv"));
    const auto back = read_stats_csv(dir.file("s.csv"));
    REQUIRE(back.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].label == rows[i].label);
        CHECK(back[i].name == rows[i].name);
        CHECK(back[i].before == rows[i].before);
        CHECK(back[i].after == rows[i].after);
    }
}

TEST_CASE("evaluate_depths: pooled rmse over cameras") {
    DepthMap t1, r1, t2, r2;
    t1.width = r1.width = t2.width = r2.width = 4;
    t1.height = r1.height = t2.height = r2.height = 1;
    t1.data = {1, 1, 1, 1};
    r1.data = {1.1, 1.1, 1.1, 1.1};
    t2.data = {2, 2, 0, 0};
    r2.data = {2.2, 2.2, 5, 5};
    const EvalReport report = evaluate_depths({0, 1}, {r1, r2}, {t1, t2});
    REQUIRE(report.per_camera.size() == 2);
    CHECK(report.per_camera[0].rmse == doctest::Approx(0.1));
    CHECK(report.per_camera[1].rmse == doctest::Approx(0.2));
    // pooled: sqrt((4*0.01 + 2*0.04)/6)
    CHECK(report.global_rmse == doctest::Approx(std::sqrt(0.12 / 6.0)));
    CHECK(report.global_valid == 6);
}

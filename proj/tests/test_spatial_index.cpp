#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numbers>

#include "semsimp/spatial_index.hpp"
#include "test_util.hpp"

using namespace semsimp;

namespace {

// Brute-force oracle: sort every point by (squared distance, id).
std::vector<int> brute_knn(const LabeledCloud& cloud, const Vec3& q, int k) {
    std::vector<std::pair<double, int>> all;
    for (size_t i = 0; i < cloud.size(); ++i)
        all.emplace_back((cloud.points[i] - q).norm2(), static_cast<int>(i));
    std::sort(all.begin(), all.end());
    std::vector<int> out;
    for (int i = 0; i < std::min<int>(k, static_cast<int>(all.size())); ++i)
        out.push_back(all[static_cast<size_t>(i)].second);
    return out;
}

std::vector<int> brute_radius(const LabeledCloud& cloud, const Vec3& q, double r) {
    std::vector<std::pair<double, int>> all;
    for (size_t i = 0; i < cloud.size(); ++i) {
        const double d2 = (cloud.points[i] - q).norm2();
        if (d2 <= r * r) all.emplace_back(d2, static_cast<int>(i));
    }
    std::sort(all.begin(), all.end());
    std::vector<int> out;
    for (const auto& e : all) out.push_back(e.second);
    return out;
}

LabeledCloud grid_cloud(int nx, int ny, double spacing, uint8_t label = 0) {
    LabeledCloud cloud;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            cloud.points.push_back({i * spacing, j * spacing, 0.0});
            cloud.labels.push_back(label);
        }
    return cloud;
}

}  // namespace

TEST_CASE("knn: a single point is its own nearest neighbor at distance zero") {
    LabeledCloud cloud;
    cloud.points = {{1, 2, 3}};
    cloud.labels = {0};
    SpatialIndex index(cloud);
    const auto r = index.knn({1, 2, 3}, 1);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == 0);
}

TEST_CASE("radius: 5x5 unit grid, radius 1.01 around the center hits the 4-neighborhood") {
    const LabeledCloud cloud = grid_cloud(5, 5, 1.0);
    SpatialIndex index(cloud);
    const Vec3 center = cloud.points[12];  // (2,2)
    const auto got = index.radius_search(center, 1.01);
    const auto expect = brute_radius(cloud, center, 1.01);
    CHECK(got == expect);
    CHECK(got.size() == 5);
    CHECK(got[0] == 12);  // the center itself first
}

TEST_CASE("queries match the brute-force scan on random clouds") {
    const LabeledCloud cloud = semsimp::test::random_cloud(200, 17);
    SpatialIndex index(cloud);
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 q{rng.uniform(-11, 11), rng.uniform(-11, 11), rng.uniform(-11, 11)};
        const int k = 1 + static_cast<int>(rng.below(30));
        CHECK(index.knn(q, k) == brute_knn(cloud, q, k));
        const double r = rng.uniform(0.1, 8.0);
        CHECK(index.radius_search(q, r) == brute_radius(cloud, q, r));
    }
}

TEST_CASE("queries are deterministic under repetition") {
    const LabeledCloud cloud = semsimp::test::random_cloud(300, 5);
    SpatialIndex index(cloud);
    const Vec3 q{0.5, -0.25, 1.0};
    CHECK(index.knn(q, 17) == index.knn(q, 17));
    CHECK(index.radius_search(q, 3.0) == index.radius_search(q, 3.0));
}

TEST_CASE("region: radius area is the search circle") {
    // 20 points inside radius 1 around the first point.
    LabeledCloud cloud;
    Rng rng(2);
    cloud.points.push_back({0, 0, 0});
    cloud.labels.push_back(0);
    for (int i = 0; i < 19; ++i) {
        const double ang = rng.uniform(0, 2 * std::numbers::pi);
        const double rad = rng.uniform(0.05, 0.9);
        cloud.points.push_back({rad * std::cos(ang), rad * std::sin(ang), 0.0});
        cloud.labels.push_back(0);
    }
    SpatialIndex index(cloud);
    const Region region = extract_region(index, 0, RegionSpec::Radius(1.0));
    REQUIRE(!region.degenerate);
    CHECK(region.member_count() == 20);
    CHECK(region.area == doctest::Approx(std::numbers::pi));
    CHECK(region.density == doctest::Approx(20.0 / std::numbers::pi));
}

TEST_CASE("region: knn area is the largest bounding-box face") {
    // Points spanning a 2 x 3 x 0.1 box; max face area = 6.
    LabeledCloud cloud;
    cloud.points = {{0, 0, 0}, {2, 0, 0}, {0, 3, 0}, {2, 3, 0.1}, {1, 1.5, 0.05}};
    cloud.labels = {0, 0, 0, 0, 0};
    SpatialIndex index(cloud);
    const Region region = extract_region(index, 4, RegionSpec::Knn(5));
    REQUIRE(region.member_count() == 5);
    CHECK(region.area == doctest::Approx(6.0));
}

TEST_CASE("region: class-mix fraction") {
    LabeledCloud cloud = grid_cloud(4, 4, 0.5, 1);
    SpatialIndex index(cloud);
    Region region = extract_region(index, 5, RegionSpec::Radius(2.0));
    CHECK(region.other_class_fraction == 0.0);  // all share the center's label

    cloud.labels[0] = 2;
    cloud.labels[1] = 2;
    SpatialIndex index2(cloud);
    region = extract_region(index2, 5, RegionSpec::Radius(100.0));
    CHECK(region.other_class_fraction == doctest::Approx(2.0 / 16.0));
}

TEST_CASE("region: short clouds and flat neighborhoods are degenerate") {
    LabeledCloud cloud;
    cloud.points = {{0, 0, 0}, {1, 0, 0}};  // collinear pair
    cloud.labels = {0, 0};
    SpatialIndex index(cloud);
    const Region knn_region = extract_region(index, 0, RegionSpec::Knn(5));
    CHECK(knn_region.degenerate);  // fewer than k points in the cloud
    const Region line_region = extract_region(index, 0, RegionSpec::Radius(10.0));
    CHECK(line_region.degenerate);  // zero-area bounding geometry / < 3 members
}

TEST_CASE("class stats: uniform grid has average density equal to every region's") {
    const LabeledCloud cloud = grid_cloud(12, 12, 1.0, 3);
    SpatialIndex index(cloud);
    const RegionSpec spec = RegionSpec::Radius(100.0);  // every region = whole cloud
    const ClassStats stats = class_stats(index, spec, 3);
    const Region any = extract_region(index, 0, spec);
    CHECK(stats.avg_density == doctest::Approx(any.density));
    CHECK(stats.region_count == 144);
}

TEST_CASE("class stats: two separated densities average arithmetically") {
    // Two far-apart patches of one class; radius keeps their regions disjoint.
    LabeledCloud cloud;
    auto patch = [&](double origin_x, double spacing, int n) {
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                cloud.points.push_back({origin_x + i * spacing, j * spacing, 0.0});
                cloud.labels.push_back(1);
            }
    };
    patch(0.0, 0.2, 10);     // dense patch
    patch(1000.0, 0.4, 10);  // sparse patch, same point count
    SpatialIndex index(cloud);
    const RegionSpec spec = RegionSpec::Radius(5.0);

    // Oracle: arithmetic mean over the per-region densities of each patch.
    double d1 = 0, d2 = 0;
    for (int i = 0; i < 100; ++i) d1 += extract_region(index, i, spec).density;
    for (int i = 100; i < 200; ++i) d2 += extract_region(index, i, spec).density;
    d1 /= 100;
    d2 /= 100;

    const ClassStats stats = class_stats(index, spec, 1);
    CHECK(stats.avg_density == doctest::Approx((d1 + d2) / 2.0));
}

TEST_CASE("class stats: a class with no measurable density raises") {
    LabeledCloud cloud;
    cloud.points = {{0, 0, 0}, {5, 5, 5}, {5, 5.5, 5}, {5.5, 5, 5}};
    cloud.labels = {7, 1, 1, 1};
    SpatialIndex index(cloud);
    // label 7 has one isolated point -> single-member degenerate region
    CHECK_THROWS_WITH_AS(class_stats(index, RegionSpec::Radius(0.5), 7),
                         "class has no measurable density", std::runtime_error);
}

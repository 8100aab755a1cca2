#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "semsimp/simplify.hpp"
#include "semsimp/synthetic.hpp"
#include "test_util.hpp"

using namespace semsimp;

namespace {

Palette one_class_palette() { return Palette({{0, "flat", true}}); }

LabeledCloud noisy_plane(int n, double spacing, uint64_t seed, double noise,
                         uint8_t label = 0) {
    LabeledCloud cloud;
    Rng rng(seed);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            cloud.points.push_back({i * spacing + rng.uniform(-0.2, 0.2) * spacing,
                                    j * spacing + rng.uniform(-0.2, 0.2) * spacing,
                                    rng.gaussian() * noise});
            cloud.labels.push_back(label);
        }
    return cloud;
}

size_t count_kept(const DecimationResult& r) { return r.kept(); }

}  // namespace

// --- Formula oracles ---------------------------------------------------------

TEST_CASE("conservation_linear: anchor, direct evaluation, clamping") {
    CHECK(conservation_linear(10.0, 10.0, 0.4) == doctest::Approx(0.4));
    CHECK(conservation_linear(7.0, 7.0, 0.9) == doctest::Approx(0.9));
    // -(10/0.4)*(9.99-10) + 0.4 = 0.25 + 0.4
    CHECK(conservation_linear(9.99, 10.0, 0.4) == doctest::Approx(0.65));
    // raw value -24.6 clamps to 0
    CHECK(conservation_linear(11.0, 10.0, 0.4) == 0.0);
    CHECK_THROWS_AS(conservation_linear(1.0, 0.0, 0.4), std::invalid_argument);
}

TEST_CASE("sigmoid_f: midpoint, quarter points, odd symmetry") {
    CHECK(sigmoid_f(0.0, 1.0) == 0.5);
    CHECK(sigmoid_f(0.0, 17.0) == 0.5);
    CHECK(sigmoid_f(1.0, 1.0) == doctest::Approx(0.75));
    Rng rng(2);
    for (int i = 0; i < 500; ++i) {
        const double x = rng.uniform(-50, 50);
        const double w = rng.uniform(0.01, 10);
        CHECK(sigmoid_f(-x, w) == doctest::Approx(1.0 - sigmoid_f(x, w)).epsilon(1e-12));
        const double f = sigmoid_f(x, w);
        CHECK(f > 0.0);
        CHECK(f < 1.0);
    }
}

TEST_CASE("calibrate_tau: anchor identities") {
    CHECK(calibrate_tau(3.0, 0.5, 1.0) == doctest::Approx(3.0));     // f(0) = 0.5
    CHECK(calibrate_tau(10.0, 0.75, 1.0) == doctest::Approx(9.0));   // f^-1(0.75) = 1
    CHECK_THROWS_AS(calibrate_tau(1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_tau(1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("calibrate_tau: plug-back identity over 1000 random draws") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double dbar = rng.uniform(0.01, 100.0);
        const double cbar = rng.uniform(0.01, 0.99);
        const double w = rng.uniform(0.05, 20.0);
        const double tau = calibrate_tau(dbar, cbar, w);
        CHECK(sigmoid_f(dbar - tau, w) == doctest::Approx(cbar).epsilon(1e-12));
    }
}

TEST_CASE("conservation_adaptive: calibration point and direct evaluations") {
    CHECK(conservation_adaptive(10.0, 10.0, 0.5, 1.0) == doctest::Approx(0.5));
    CHECK(conservation_adaptive(11.0, 10.0, 0.5, 1.0) == doctest::Approx(0.75));
    CHECK(conservation_adaptive(9.0, 10.0, 0.5, 1.0) == doctest::Approx(0.25));
}

TEST_CASE("conservation_adaptive_class: mix boost and saturation") {
    // p=0 reduces to the adaptive factor
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const double d = rng.uniform(0.1, 20), dbar = rng.uniform(0.1, 20);
        const double cbar = rng.uniform(0.05, 0.95), w = rng.uniform(0.1, 5);
        CHECK(conservation_adaptive_class(d, dbar, cbar, w, 0.0) ==
              doctest::Approx(conservation_adaptive(d, dbar, cbar, w)).epsilon(1e-12));
        // non-decreasing in the mix fraction
        double last = 0.0;
        for (double p : {0.0, 0.1, 0.3, 0.5, 0.8, 1.0}) {
            const double c = conservation_adaptive_class(d, dbar, cbar, w, p);
            CHECK(c >= last - 1e-15);
            CHECK(c <= 1.0);
            last = c;
        }
    }
    // f = 0.75 boosted by p=0.5 saturates: 1.125 -> 1
    CHECK(conservation_adaptive_class(11.0, 10.0, 0.5, 1.0, 0.5) == 1.0);
    // f = 0.5 boosted by p=0.5 -> 0.75 (above the plain adaptive value)
    CHECK(conservation_adaptive_class(10.0, 10.0, 0.5, 1.0, 0.5) == doctest::Approx(0.75));
}

TEST_CASE("prob_interior: zero at the center, half at the half-value radius, tail to 1") {
    const Vec2 center{1.0, -2.0};
    CHECK(prob_interior(center, center, 5.0, 5.0, 0.7) == 0.0);
    const double ratio = 2.0, sigma = 0.7;
    const double half_radius = sigma * std::sqrt(2.0 * ratio * std::log(2.0));
    const Vec2 p{center.x + half_radius, center.y};
    CHECK(prob_interior(p, center, 2.0 * 5.0, 5.0, sigma) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(prob_interior({center.x + 1e4, center.y}, center, 5.0, 5.0, sigma) ==
          doctest::Approx(1.0));
}

TEST_CASE("prob_boundary: peak one on the line, half-value distance, monotone decay") {
    CHECK(prob_boundary(0.0, 0.5) == 1.0);
    const double sigma = 0.5;
    CHECK(prob_boundary(sigma * std::sqrt(2.0 * std::log(2.0)), sigma) ==
          doctest::Approx(0.5).epsilon(1e-12));
    double last = 1.0;
    for (double d = 0.1; d < 5.0; d += 0.1) {
        const double p = prob_boundary(d, sigma);
        CHECK(p < last);
        last = p;
    }
}

// --- Ranked decimation --------------------------------------------------------

TEST_CASE("ranked: conservation factor 1 keeps everything") {
    // Checkerboard classes with regions spanning the whole cloud: every
    // region has D == Dbar and mix exactly 0.5, so ACS saturates c at 1.
    LabeledCloud cloud;
    for (int j = 0; j < 10; ++j)
        for (int i = 0; i < 10; ++i) {
            cloud.points.push_back({i * 1.0, j * 1.0, ((i * 31 + j * 17) % 7) * 0.01});
            cloud.labels.push_back(static_cast<uint8_t>((i + j) % 2));
        }
    const Palette palette({{0, "a", true}, {1, "b", true}});
    SimplifyConfig config;
    config.method = Method::ACS;
    config.region = RegionSpec::Radius(100.0);
    config.target_conservation = 0.7;  // (1 + 0.5) * 0.7 saturates to 1
    config.simplifiable_labels = {0, 1};
    const DecimationResult result = simplify_cloud(cloud, palette, config);
    CHECK(count_kept(result) == cloud.size());
    for (const RegionRecord& r : result.regions) {
        REQUIRE(!r.degenerate);
        CHECK(r.conservation == 1.0);
    }
}

TEST_CASE("ranked: a single 10-member region at c=0.65 discards the 3 worst by id-stable order") {
    // 10 coplanar same-class points inside one radius-2 disk; every region
    // equals the whole set, so D == Dbar and LS gives exactly c = cbar.
    LabeledCloud cloud;
    cloud.points = {{0, 0, 0},      {1, 0, 0},   {0, 1, 0},   {1, 1, 0},   {0.5, 0.5, 0},
                    {0.25, 0.7, 0}, {0.7, 0.2, 0}, {0.2, 0.2, 0}, {0.8, 0.8, 0}, {0.4, 0.1, 0}};
    cloud.labels.assign(10, 0);
    SimplifyConfig config;
    config.method = Method::LS;
    config.region = RegionSpec::Radius(2.0);
    config.target_conservation = 0.65;
    config.simplifiable_labels = {0};
    const DecimationResult result = simplify_cloud(cloud, one_class_palette(), config);
    // floor((1-0.65)*10) = 3 discarded; identical ranking score everywhere on
    // an exact plane, so the tie-break discards the highest ids 7, 8, 9.
    CHECK(count_kept(result) == 7);
    CHECK(result.keep == std::vector<uint8_t>{1, 1, 1, 1, 1, 1, 1, 0, 0, 0});
}

TEST_CASE("ranked: LS retains less of a dense patch than of the uniform remainder") {
    // Uniform plane with a 10x denser patch in one corner.
    LabeledCloud cloud = noisy_plane(30, 1.0, 3, 0.02);
    const size_t uniform_count = cloud.size();
    Rng rng(77);
    for (int i = 0; i < 300; ++i) {
        cloud.points.push_back({rng.uniform(2.0, 8.0), rng.uniform(2.0, 8.0),
                                rng.gaussian() * 0.02});
        cloud.labels.push_back(0);
    }
    SimplifyConfig config;
    config.method = Method::LS;
    config.region = RegionSpec::Radius(2.0);
    config.target_conservation = 0.4;
    config.simplifiable_labels = {0};
    const DecimationResult result = simplify_cloud(cloud, one_class_palette(), config);

    size_t patch_before = 0, patch_after = 0, rest_before = 0, rest_after = 0;
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        const bool in_patch = p.x > 2 && p.x < 8 && p.y > 2 && p.y < 8;
        (in_patch ? patch_before : rest_before)++;
        if (result.keep[i]) (in_patch ? patch_after : rest_after)++;
    }
    REQUIRE(patch_before > 0);
    REQUIRE(rest_before > 0);
    const double patch_retention = double(patch_after) / double(patch_before);
    const double rest_retention = double(rest_after) / double(rest_before);
    CHECK(patch_retention < rest_retention);
    (void)uniform_count;
}

TEST_CASE("ranked: deterministic and density-computed on the original cloud") {
    const LabeledCloud cloud = noisy_plane(20, 1.0, 8, 0.05);
    SimplifyConfig config;
    config.method = Method::AS;
    config.region = RegionSpec::Radius(2.5);
    config.simplifiable_labels = {0};
    const DecimationResult a = simplify_cloud(cloud, one_class_palette(), config);
    const DecimationResult b = simplify_cloud(cloud, one_class_palette(), config);
    CHECK(a.keep == b.keep);
    CHECK(count_kept(a) < cloud.size());  // something was discarded
}

TEST_CASE("ranked: non-simplifiable labels and invalid normals are never touched") {
    LabeledCloud cloud = noisy_plane(15, 1.0, 4, 0.05, 1);
    // a far-away lone point of the same class: no normal, must survive
    cloud.points.push_back({500, 500, 0});
    cloud.labels.push_back(1);
    // a second class, not simplifiable
    Rng rng(6);
    for (int i = 0; i < 40; ++i) {
        cloud.points.push_back({rng.uniform(0, 14), rng.uniform(0, 14), rng.uniform(2, 3)});
        cloud.labels.push_back(2);
    }
    const Palette palette({{1, "flat", true}, {2, "detail", false}});
    SimplifyConfig config;
    config.method = Method::LS;
    config.region = RegionSpec::Radius(2.0);
    const DecimationResult result = simplify_cloud(cloud, palette, config);
    for (size_t i = 0; i < cloud.size(); ++i)
        if (cloud.labels[i] == 2) CHECK(result.keep[i] == 1);
    CHECK(result.keep[15 * 15] == 1);  // the lone point
    const LabeledCloud filtered = cloud.filtered(result.keep);
    size_t detail = 0;
    for (size_t i = 0; i < filtered.size(); ++i)
        if (filtered.labels[i] == 2) ++detail;
    CHECK(detail == 40);
}

TEST_CASE("simplify: cloud without labels is rejected up front") {
    LabeledCloud cloud;
    cloud.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    SimplifyConfig config;
    CHECK_THROWS_AS(simplify_cloud(cloud, one_class_palette(), config), ValidationError);
}

// --- Probabilistic decimation ---------------------------------------------------

TEST_CASE("probabilistic: indicator branch selection by mix fraction") {
    // Plane of class 0 with a thin strip of class 1: regions near the strip
    // have mix >= 0.1 and must use the boundary branch; far regions use the
    // interior branch.
    LabeledCloud cloud = noisy_plane(24, 1.0, 10, 0.02, 0);
    for (size_t i = 0; i < cloud.size(); ++i)
        if (cloud.points[i].x > 16.0) cloud.labels[i] = 1;
    const Palette palette({{0, "a", true}, {1, "b", true}});
    SimplifyConfig config;
    config.method = Method::PS;
    config.region = RegionSpec::Radius(3.0);
    config.seed = 20;
    const DecimationResult result = simplify_cloud(cloud, palette, config);

    bool saw_boundary = false, saw_interior = false;
    for (const RegionRecord& r : result.regions) {
        if (r.degenerate) continue;
        if (r.mix_fraction >= kBoundaryMixThreshold) {
            CHECK(r.used_boundary);
            saw_boundary = true;
        } else {
            CHECK(!r.used_boundary);
            saw_interior = true;
        }
    }
    CHECK(saw_boundary);
    CHECK(saw_interior);
}

TEST_CASE("probabilistic: mix of exactly 0.1 uses the boundary branch") {
    // 20 members: 18 of class 0, 2 of class 1 -> mix = 0.1 exactly for
    // class-0 centers.
    LabeledCloud cloud;
    for (int i = 0; i < 20; ++i) {
        cloud.points.push_back({0.1 * i, 0.05 * ((i * 7) % 5), 0.001 * ((i * 3) % 4)});
        cloud.labels.push_back(i < 18 ? 0 : 1);
    }
    const Palette palette({{0, "a", true}, {1, "b", true}});
    SimplifyConfig config;
    config.method = Method::PS;
    config.region = RegionSpec::Radius(10.0);  // every region = whole cloud
    config.sigma = 1.0;
    config.seed = 5;
    const DecimationResult result = simplify_cloud(cloud, palette, config);
    bool checked = false;
    for (const RegionRecord& r : result.regions) {
        if (r.degenerate) continue;
        if (cloud.labels[static_cast<size_t>(r.center)] == 0) {
            CHECK(r.mix_fraction == doctest::Approx(0.1));
            CHECK(r.used_boundary);
            checked = true;
        }
    }
    CHECK(checked);
}

TEST_CASE("probabilistic: same seed reproduces the mask; retention is seed-stable") {
    const LabeledCloud cloud = noisy_plane(40, 1.0, 12, 0.02);
    SimplifyConfig config;
    config.method = Method::PS;
    config.region = RegionSpec::Radius(2.5);
    config.seed = 1234;
    const DecimationResult a = simplify_cloud(cloud, one_class_palette(), config);
    const DecimationResult b = simplify_cloud(cloud, one_class_palette(), config);
    CHECK(a.keep == b.keep);

    // Monte-Carlo oracle: retention varies only a little across seeds.
    std::vector<double> retentions;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        SimplifyConfig c2 = config;
        c2.seed = seed;
        const DecimationResult r = simplify_cloud(cloud, one_class_palette(), c2);
        retentions.push_back(double(count_kept(r)) / double(cloud.size()));
    }
    double mean = 0;
    for (double r : retentions) mean += r;
    mean /= retentions.size();
    for (double r : retentions) CHECK(std::fabs(r - mean) <= 0.05);
}

TEST_CASE("probabilistic: every discarded point lies in a sampled region") {
    const LabeledCloud cloud = noisy_plane(30, 1.0, 9, 0.02);
    SimplifyConfig config;
    config.method = Method::PS;
    config.region = RegionSpec::Radius(2.0);
    config.seed = 3;
    const DecimationResult result = simplify_cloud(cloud, one_class_palette(), config);

    SpatialIndex index(cloud);
    std::set<int> covered;
    for (const RegionRecord& r : result.regions) {
        const Region region = extract_region(index, r.center, config.region);
        for (int id : region.member_indices) covered.insert(id);
    }
    for (size_t i = 0; i < cloud.size(); ++i)
        if (!result.keep[i]) CHECK(covered.count(static_cast<int>(i)) == 1);
}

TEST_CASE("boundary preservation: ACS and PS keep the class boundary denser than the interior") {
    const SyntheticScene scene = make_halfplane_scene({});
    const double sigma = 1.5;  // radius 3 regions, default sigma = radius/2

    auto band_vs_interior = [&](const DecimationResult& result, double band) {
        size_t band_before = 0, band_after = 0, int_before = 0, int_after = 0;
        for (size_t i = 0; i < scene.cloud.size(); ++i) {
            const bool in_band = std::fabs(scene.cloud.points[i].x) <= band;
            (in_band ? band_before : int_before)++;
            if (result.keep[i]) (in_band ? band_after : int_after)++;
        }
        REQUIRE(band_before > 0);
        REQUIRE(int_before > 0);
        return std::pair<double, double>{double(band_after) / double(band_before),
                                         double(int_after) / double(int_before)};
    };

    SimplifyConfig config;
    config.region = RegionSpec::Radius(3.0);
    config.target_conservation = 0.4;
    config.sigma = sigma;

    config.method = Method::ACS;
    const auto [acs_band, acs_interior] =
        band_vs_interior(simplify_cloud(scene.cloud, scene.palette, config), 2.0 * sigma);
    CHECK(acs_band >= acs_interior);

    config.method = Method::PS;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        config.seed = seed;
        const auto [ps_band, ps_interior] =
            band_vs_interior(simplify_cloud(scene.cloud, scene.palette, config), 2.0 * sigma);
        CHECK(ps_band >= ps_interior);
    }
}

TEST_CASE("method names parse and unknown ones fail") {
    Method m;
    CHECK(parse_method("ls", m));
    CHECK(m == Method::LS);
    CHECK(parse_method("ps", m));
    CHECK(!parse_method("xs", m));
}

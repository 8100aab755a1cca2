#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "semsimp/eval.hpp"
#include "semsimp/io.hpp"
#include "semsimp/manifest.hpp"
#include "test_util.hpp"

using namespace semsimp;
using semsimp::test::TempDir;

namespace {

std::string cli_path() {
    const char* env = std::getenv("SEMSIMP_CLI");
    REQUIRE_MESSAGE(env != nullptr, "SEMSIMP_CLI must point at the semsimp binary");
    return env;
}

int run(const std::string& args, std::string* captured_stderr = nullptr) {
    TempDir dir("cli_run");
    const std::string err_file = dir.file("stderr.txt");
    const std::string cmd = cli_path() + " " + args + " 2>" + err_file;
    const int status = std::system(cmd.c_str());
    if (captured_stderr) {
        std::ifstream f(err_file);
        std::stringstream ss;
        ss << f.rdbuf();
        *captured_stderr = ss.str();
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -1;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE_MESSAGE(f.good(), ("missing file: " + path).c_str());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cli: unknown method exits 1 and lists the valid ones") {
    TempDir dir("cli");
    // inputs exist so the validation reaches the method check
    const int gen = run("stats --gen-synthetic --scene halfplane --out " + dir.file("scene"));
    REQUIRE(gen == 0);
    std::string err;
    const int code = run("simplify --cloud " + dir.file("scene/cloud.ply") + " --palette " +
                             dir.file("scene/palette.txt") + " --method xs --out " +
                             dir.file("out.ply"),
                         &err);
    CHECK(code == 1);
    CHECK(err.find("ls") != std::string::npos);
    CHECK(err.find("as") != std::string::npos);
    CHECK(err.find("acs") != std::string::npos);
    CHECK(err.find("ps") != std::string::npos);
}

TEST_CASE("cli: probabilistic simplify twice with one seed is byte-identical") {
    TempDir dir("cli");
    REQUIRE(run("stats --gen-synthetic --scene halfplane --out " + dir.file("scene")) == 0);
    // the halfplane scene ships unlabeled; labels come from the generator, so
    // label it trivially by writing the truth labels through the library
    // (labeling needs cameras, which this scene omits).
    // Instead simplify the urban tiny scene end to end via pipeline below;
    // here, synthesize a labeled cloud directly:
    LabeledCloud cloud = read_ply(dir.file("scene/cloud.ply"));
    cloud.labels.assign(cloud.size(), 0);
    for (size_t i = 0; i < cloud.size(); ++i)
        cloud.labels[i] = cloud.points[i].x < 0 ? 1 : 2;
    write_ply(cloud, dir.file("labeled.ply"));

    const std::string args = "simplify --cloud " + dir.file("labeled.ply") + " --palette " +
                             dir.file("scene/palette.txt") +
                             " --method ps --region radius --radius 3 --target 0.4 ";
    REQUIRE(run(args + "--seed 7 --out " + dir.file("a.ply")) == 0);
    REQUIRE(run(args + "--seed 7 --out " + dir.file("b.ply")) == 0);
    CHECK(slurp(dir.file("a.ply")) == slurp(dir.file("b.ply")));

    // a different seed may differ (not asserted), but must still succeed
    CHECK(run(args + "--seed 8 --out " + dir.file("c.ply")) == 0);
}

TEST_CASE("cli: full pipeline on the tiny urban scene produces every stage output") {
    TempDir dir("cli");
    REQUIRE(run("stats --gen-synthetic --scene urban --scale tiny --seed 11 --out " +
                dir.file("scene")) == 0);
    const int code = run("pipeline --scene-dir " + dir.file("scene") + " --out " +
                         dir.file("run") +
                         " --method ps --region radius --radius 4 --target 0.4 --seed 5");
    REQUIRE(code == 0);
    for (const char* f : {"labeled.ply", "simplified.ply", "mesh.off", "report.txt", "stats.csv",
                          "manifest.json"})
        CHECK(std::filesystem::exists(dir.file(std::string("run/") + f)));
    const std::string report = slurp(dir.file("run/report.txt"));
    CHECK(report.find("global") != std::string::npos);
    CHECK(!read_off(dir.file("run/mesh.off")).triangles.empty());
}

TEST_CASE("cli: rerunning a pipeline stage reproduces identical output hashes") {
    TempDir dir("cli");
    REQUIRE(run("stats --gen-synthetic --scene urban --scale tiny --seed 4 --out " +
                dir.file("scene")) == 0);
    const std::string args = " --scene-dir " + dir.file("scene") +
                             " --method as --region radius --radius 4 --seed 9";
    REQUIRE(run("pipeline" + args + " --out " + dir.file("run1")) == 0);
    REQUIRE(run("pipeline" + args + " --out " + dir.file("run2")) == 0);

    const RunManifest a = read_manifest(dir.file("run1/manifest.json"));
    const RunManifest b = read_manifest(dir.file("run2/manifest.json"));
    REQUIRE(a.outputs.size() == b.outputs.size());
    for (size_t i = 0; i < a.outputs.size(); ++i) {
        CHECK(a.outputs[i].name == b.outputs[i].name);
        CHECK(a.outputs[i].hash == b.outputs[i].hash);
    }
}

TEST_CASE("cli: stats table mode reports retentions") {
    TempDir dir("cli");
    REQUIRE(run("stats --gen-synthetic --scene halfplane --out " + dir.file("scene")) == 0);
    LabeledCloud cloud = read_ply(dir.file("scene/cloud.ply"));
    cloud.labels.assign(cloud.size(), 1);
    write_ply(cloud, dir.file("before.ply"));
    LabeledCloud half = cloud;
    std::vector<uint8_t> keep(cloud.size(), 0);
    for (size_t i = 0; i < keep.size(); i += 2) keep[i] = 1;
    write_ply(cloud.filtered(keep), dir.file("after.ply"));
    const int code = run("stats --before " + dir.file("before.ply") + " --after " +
                         dir.file("after.ply") + " --palette " + dir.file("scene/palette.txt") +
                         " --csv " + dir.file("s.csv"));
    CHECK(code == 0);
    const auto rows = read_stats_csv(dir.file("s.csv"));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].before == cloud.size());
    CHECK(rows[0].after == (cloud.size() + 1) / 2);
}

TEST_CASE("cli: missing required inputs exit with a validation error") {
    std::string err;
    const int code = run("simplify --method ls", &err);
    CHECK(code == 1);
}

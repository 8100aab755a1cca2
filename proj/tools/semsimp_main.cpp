// semsimp command line: label -> simplify -> reconstruct -> render-depth ->
// evaluate, plus cloud statistics and the synthetic scene generator. Each
// stage writes a run manifest (inputs, parameters, seed, output hashes) next
// to its outputs. Logs go to stderr; machine-readable output goes to files.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "semsimp/eval.hpp"
#include "semsimp/io.hpp"
#include "semsimp/labeling.hpp"
#include "semsimp/manifest.hpp"
#include "semsimp/reconstruct.hpp"
#include "semsimp/render.hpp"
#include "semsimp/simplify.hpp"
#include "semsimp/synthetic.hpp"
#include "semsimp/types.hpp"

namespace fs = std::filesystem;
using namespace semsimp;

namespace {

struct SimplifyCliOptions {
    std::string method = "ls";
    std::string region_mode = "radius";
    double radius = 2.5;
    int k = 16;
    double target = 0.4;
    double stretch = 1.0;
    double sigma = 0.0;
    uint64_t seed = 42;
    int ransac_iterations = 256;
    double ransac_threshold = 0.05;
    bool negate_density_axis = false;
    std::vector<int> label_override;

    void attach(CLI::App* cmd) {
        cmd->add_option("--method", method, "Decimation method: ls, as, acs or ps")
            ->capture_default_str();
        cmd->add_option("--region", region_mode, "Region search: radius or knn")
            ->capture_default_str();
        cmd->add_option("--radius", radius, "Region radius in meters (radius mode)")
            ->capture_default_str();
        cmd->add_option("--k", k, "Neighbor count (knn mode)")->capture_default_str();
        cmd->add_option("--target", target, "Target conservation factor in (0,1)")
            ->capture_default_str();
        cmd->add_option("--stretch", stretch, "Sigmoid stretching factor")->capture_default_str();
        cmd->add_option("--sigma", sigma,
                        "Probabilistic kernel std-dev in meters (default: radius/2)");
        cmd->add_option("--seed", seed, "Seed for RANSAC and probabilistic draws")
            ->capture_default_str();
        cmd->add_option("--ransac-iterations", ransac_iterations, "Plane RANSAC iterations")
            ->capture_default_str();
        cmd->add_option("--ransac-threshold", ransac_threshold,
                        "Plane RANSAC inlier threshold in meters")
            ->capture_default_str();
        cmd->add_flag("--negate-density-axis", negate_density_axis,
                      "Mirror the adaptive sigmoid so denser regions get lower conservation");
        cmd->add_option("--labels", label_override,
                        "Simplify only these label ids (default: palette's simplifiable set)");
    }

    SimplifyConfig to_config() const {
        SimplifyConfig config;
        if (!parse_method(method, config.method))
            throw ValidationError("unknown method '" + method +
                                  "': valid methods are ls, as, acs, ps");
        if (region_mode == "radius") config.region = RegionSpec::Radius(radius);
        else if (region_mode == "knn") config.region = RegionSpec::Knn(k);
        else throw ValidationError("unknown region mode '" + region_mode +
                                   "': valid modes are radius, knn");
        config.target_conservation = target;
        config.stretching = stretch;
        config.sigma = sigma;
        config.seed = seed;
        config.ransac.iterations = ransac_iterations;
        config.ransac.inlier_threshold = ransac_threshold;
        config.negate_density_axis = negate_density_axis;
        for (int l : label_override) {
            if (l < 0 || l > 255) throw ValidationError("label id out of range [0,255]");
            config.simplifiable_labels.push_back(static_cast<uint8_t>(l));
        }
        return config;
    }

    void describe(RunManifest& m) const {
        m.params = {{"method", method},
                    {"region", region_mode},
                    {"radius", std::to_string(radius)},
                    {"k", std::to_string(k)},
                    {"target", std::to_string(target)},
                    {"stretch", std::to_string(stretch)},
                    {"sigma", std::to_string(sigma)},
                    {"ransac_iterations", std::to_string(ransac_iterations)},
                    {"ransac_threshold", std::to_string(ransac_threshold)},
                    {"negate_density_axis", negate_density_axis ? "1" : "0"}};
        m.seed = seed;
    }
};

std::map<int, LabelRaster> load_rasters(const CameraSet& cams, const std::string& dir) {
    std::map<int, LabelRaster> rasters;
    for (const Camera& cam : cams.cameras) {
        const std::string path = dir + "/" + std::to_string(cam.id) + ".pgm";
        if (fs::exists(path)) rasters[cam.id] = read_label_raster(path);
    }
    if (rasters.empty())
        throw ValidationError("no '<camera_id>.pgm' rasters found under " + dir);
    return rasters;
}

int run_label(const std::string& cloud_path, const std::string& cameras_path,
              const std::string& rasters_dir, const std::string& palette_path, int fallback,
              const std::string& visibility_path, const std::string& out_path) {
    LabeledCloud cloud = read_ply(cloud_path);
    if (!visibility_path.empty()) read_visibility(cloud, visibility_path);
    const CameraSet cams = read_cameras(cameras_path);
    const Palette palette = read_palette(palette_path);
    const auto rasters = load_rasters(cams, rasters_dir);

    LabelingInput input;
    input.cloud = &cloud;
    input.cameras = &cams;
    input.rasters = &rasters;
    input.palette = &palette;
    input.fallback_label = static_cast<uint8_t>(fallback);
    const LabeledCloud labeled = label_cloud(input);
    write_ply(labeled, out_path);

    RunManifest m;
    m.command = "label";
    m.inputs = {{"cloud", cloud_path},
                {"cameras", cameras_path},
                {"rasters", rasters_dir},
                {"palette", palette_path}};
    if (!visibility_path.empty()) m.inputs.emplace_back("visibility", visibility_path);
    m.params = {{"fallback", std::to_string(fallback)}};
    m.add_output("labeled_cloud", out_path);
    write_manifest(m, out_path + ".manifest.json");
    std::fprintf(stderr, "labeled %zu points -> %s\n", labeled.size(), out_path.c_str());
    return 0;
}

int run_simplify(const std::string& cloud_path, const std::string& palette_path,
                 const SimplifyCliOptions& opts, const std::string& out_path,
                 const std::string& diagnostics_csv) {
    LabeledCloud cloud = read_ply(cloud_path);
    const Palette palette = read_palette(palette_path);
    const SimplifyConfig config = opts.to_config();
    const DecimationResult result = simplify_cloud(cloud, palette, config);
    const LabeledCloud simplified = cloud.filtered(result.keep);
    write_ply(simplified, out_path);

    if (!diagnostics_csv.empty()) {
        std::ofstream f(diagnostics_csv, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + diagnostics_csv);
        f << "center,density,avg_density,mix_fraction,conservation,used_boundary,degenerate,"
             "members,same_class,discarded\n";
        char buf[256];
        for (const RegionRecord& r : result.regions) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%d,%d\n",
                          r.center, r.density, r.avg_density, r.mix_fraction, r.conservation,
                          r.used_boundary ? 1 : 0, r.degenerate ? 1 : 0, r.member_count,
                          r.same_class_count, r.discarded);
            f << buf;
        }
    }

    RunManifest m;
    m.command = "simplify";
    m.inputs = {{"cloud", cloud_path}, {"palette", palette_path}};
    opts.describe(m);
    m.add_output("simplified_cloud", out_path);
    if (!diagnostics_csv.empty()) m.add_output("diagnostics", diagnostics_csv);
    write_manifest(m, out_path + ".manifest.json");
    std::fprintf(stderr, "simplify %s: %zu -> %zu points\n", opts.method.c_str(), cloud.size(),
                 simplified.size());
    return 0;
}

int run_reconstruct(const std::string& cloud_path, const std::string& cameras_path,
                    const std::string& visibility_path, double sigma_free, double sigma_matter,
                    const std::string& out_path) {
    LabeledCloud cloud = read_ply(cloud_path);
    read_visibility(cloud, visibility_path);
    const CameraSet cams = read_cameras(cameras_path);
    ReconParams params;
    params.sigma_free = sigma_free;
    params.sigma_matter = sigma_matter;
    const TriMesh mesh = reconstruct_mesh(cloud, cams, params);
    write_off(mesh, out_path);

    RunManifest m;
    m.command = "reconstruct";
    m.inputs = {{"cloud", cloud_path},
                {"cameras", cameras_path},
                {"visibility", visibility_path}};
    m.params = {{"sigma_free", std::to_string(sigma_free)},
                {"sigma_matter", std::to_string(sigma_matter)}};
    m.add_output("mesh", out_path);
    write_manifest(m, out_path + ".manifest.json");
    std::fprintf(stderr, "reconstructed %zu vertices / %zu triangles -> %s\n",
                 mesh.vertices.size(), mesh.triangles.size(), out_path.c_str());
    return 0;
}

int run_render_depth(const std::string& mesh_path, const std::string& cameras_path,
                     const std::string& out_dir) {
    const TriMesh mesh = read_off(mesh_path);
    const CameraSet cams = read_cameras(cameras_path);
    fs::create_directories(out_dir);
    RunManifest m;
    m.command = "render-depth";
    m.inputs = {{"mesh", mesh_path}, {"cameras", cameras_path}};
    for (const Camera& cam : cams.cameras) {
        const DepthMap depth = render_depth(mesh, cam);
        const std::string path = out_dir + "/" + std::to_string(cam.id) + ".depth";
        write_depth(depth, path);
        m.add_output("depth_" + std::to_string(cam.id), path);
    }
    write_manifest(m, out_dir + "/manifest.json");
    std::fprintf(stderr, "rendered %zu depth maps -> %s\n", cams.size(), out_dir.c_str());
    return 0;
}

int run_evaluate(const std::string& rendered_dir, const std::string& truth_dir,
                 const std::string& cameras_path, const std::string& mesh_path,
                 const std::string& before_path, const std::string& after_path,
                 const std::string& palette_path, const std::string& out_path,
                 const std::string& csv_path) {
    const CameraSet cams = read_cameras(cameras_path);
    std::vector<int> ids;
    std::vector<DepthMap> rendered, truth;
    for (const Camera& cam : cams.cameras) {
        const std::string r = rendered_dir + "/" + std::to_string(cam.id) + ".depth";
        const std::string t = truth_dir + "/" + std::to_string(cam.id) + ".depth";
        if (!fs::exists(r) || !fs::exists(t)) continue;
        ids.push_back(cam.id);
        rendered.push_back(read_depth(r));
        truth.push_back(read_depth(t));
    }
    if (ids.empty()) throw ValidationError("no matching '<camera_id>.depth' pairs to evaluate");
    EvalReport report = evaluate_depths(ids, rendered, truth);

    if (!mesh_path.empty()) {
        const TriMesh mesh = read_off(mesh_path);
        report.mesh_vertices = mesh.vertices.size();
        report.mesh_triangles = mesh.triangles.size();
        report.mesh_file_bytes = static_cast<size_t>(fs::file_size(mesh_path));
    }
    if (!before_path.empty() && !after_path.empty() && !palette_path.empty()) {
        const LabeledCloud before = read_ply(before_path);
        const LabeledCloud after = read_ply(after_path);
        const Palette palette = read_palette(palette_path);
        report.retention = cloud_stats(before, after, palette);
    }

    const std::string text = format_report(report);
    {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + out_path);
        f << text;
    }
    if (!csv_path.empty() && !report.retention.empty())
        write_stats_csv(report.retention, csv_path);

    RunManifest m;
    m.command = "evaluate";
    m.inputs = {{"rendered", rendered_dir}, {"truth", truth_dir}, {"cameras", cameras_path}};
    if (!mesh_path.empty()) m.inputs.emplace_back("mesh", mesh_path);
    m.add_output("report", out_path);
    if (!csv_path.empty() && !report.retention.empty()) m.add_output("stats_csv", csv_path);
    write_manifest(m, out_path + ".manifest.json");
    std::fprintf(stderr, "%s", text.c_str());
    return 0;
}

int run_stats(const std::string& before_path, const std::string& after_path,
              const std::string& palette_path, const std::string& csv_path) {
    const LabeledCloud before = read_ply(before_path);
    const LabeledCloud after = read_ply(after_path);
    const Palette palette = read_palette(palette_path);
    const auto rows = cloud_stats(before, after, palette);
    std::fputs(format_stats_table(rows).c_str(), stdout);
    if (!csv_path.empty()) {
        write_stats_csv(rows, csv_path);
        RunManifest m;
        m.command = "stats";
        m.inputs = {{"before", before_path}, {"after", after_path}, {"palette", palette_path}};
        m.add_output("stats_csv", csv_path);
        write_manifest(m, csv_path + ".manifest.json");
    }
    return 0;
}

int run_gen_synthetic(const std::string& scene, const std::string& out_dir, uint64_t seed,
                      const std::string& scale) {
    SyntheticScene s;
    if (scene == "urban") {
        UrbanSceneParams p;
        p.seed = seed;
        if (scale == "tiny") {
            p.ground_n = 46;
            p.wall_nx = 40;
            p.wall_nz = 8;
            p.sphere_n = 900;
            p.camera_count = 6;
            p.image_width = 64;
            p.image_height = 48;
            p.focal = 55.0;
        }
        s = make_urban_scene(p);
    } else if (scene == "cube") {
        CubeSceneParams p;
        p.seed = seed;
        s = make_hollow_cube_scene(p);
    } else if (scene == "halfplane") {
        HalfPlaneParams p;
        p.seed = seed;
        s = make_halfplane_scene(p);
    } else {
        throw ValidationError("unknown scene '" + scene +
                              "': valid scenes are urban, cube, halfplane");
    }
    const auto files = write_scene(s, out_dir);
    RunManifest m;
    m.command = "stats --gen-synthetic";
    m.params = {{"scene", scene}, {"scale", scale}};
    m.seed = seed;
    for (const std::string& rel : files) m.add_output(rel, out_dir + "/" + rel);
    write_manifest(m, out_dir + "/manifest.json");
    std::fprintf(stderr, "wrote %zu scene files under %s\n", files.size(), out_dir.c_str());
    return 0;
}

int run_pipeline(const std::string& scene_dir, const std::string& out_dir,
                 const SimplifyCliOptions& opts, bool no_simplify, double sigma_free,
                 double sigma_matter, int fallback) {
    fs::create_directories(out_dir);
    const std::string cloud_path = scene_dir + "/cloud.ply";
    const std::string cameras_path = scene_dir + "/cameras.txt";
    const std::string palette_path = scene_dir + "/palette.txt";
    const std::string visibility_path = scene_dir + "/visibility.txt";
    for (const std::string& p : {cloud_path, cameras_path, palette_path, visibility_path})
        if (!fs::exists(p)) throw ValidationError("pipeline: missing input " + p);

    // label
    const std::string labeled_path = out_dir + "/labeled.ply";
    run_label(cloud_path, cameras_path, scene_dir + "/rasters", palette_path, fallback,
              visibility_path, labeled_path);

    // simplify (optional baseline bypass)
    std::string simplified_path = labeled_path;
    if (!no_simplify) {
        simplified_path = out_dir + "/simplified.ply";
        run_simplify(labeled_path, palette_path, opts, simplified_path,
                     out_dir + "/diagnostics.csv");
    }

    // carry visibility through row filtering by matching point identity
    {
        LabeledCloud full = read_ply(labeled_path);
        read_visibility(full, visibility_path);
        LabeledCloud kept = read_ply(simplified_path);
        // map by exact coordinates in order (filtering preserves order)
        kept.visibility.assign(kept.size(), {});
        size_t cursor = 0;
        for (size_t i = 0; i < kept.size(); ++i) {
            while (cursor < full.size() && !(full.points[cursor] == kept.points[i])) ++cursor;
            if (cursor == full.size())
                throw std::runtime_error("pipeline: simplified cloud is not a subsequence");
            kept.visibility[i] = full.visibility[cursor];
            ++cursor;
        }
        write_visibility(kept, out_dir + "/visibility.txt");
    }

    // reconstruct
    const std::string mesh_path = out_dir + "/mesh.off";
    run_reconstruct(simplified_path, cameras_path, out_dir + "/visibility.txt", sigma_free,
                    sigma_matter, mesh_path);

    // render + evaluate
    run_render_depth(mesh_path, cameras_path, out_dir + "/depth");
    run_evaluate(out_dir + "/depth", scene_dir + "/truth", cameras_path, mesh_path, labeled_path,
                 simplified_path, palette_path, out_dir + "/report.txt", out_dir + "/stats.csv");

    // Aggregate manifest over every stage output.
    RunManifest m;
    m.command = "pipeline";
    m.inputs = {{"scene_dir", scene_dir}};
    opts.describe(m);
    m.params.emplace_back("no_simplify", no_simplify ? "1" : "0");
    m.params.emplace_back("sigma_free", std::to_string(sigma_free));
    m.params.emplace_back("sigma_matter", std::to_string(sigma_matter));
    m.add_output("labeled", labeled_path);
    if (!no_simplify) m.add_output("simplified", simplified_path);
    m.add_output("visibility", out_dir + "/visibility.txt");
    m.add_output("mesh", mesh_path);
    m.add_output("report", out_dir + "/report.txt");
    m.add_output("stats", out_dir + "/stats.csv");
    write_manifest(m, out_dir + "/manifest.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic point cloud simplification and Delaunay reconstruction"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value file");

    // label
    auto* label_cmd = app.add_subcommand("label", "Back-project segmentation rasters onto a cloud");
    std::string l_cloud, l_cams, l_rasters, l_palette, l_vis, l_out;
    int l_fallback = 0;
    label_cmd->add_option("--cloud", l_cloud)->required();
    label_cmd->add_option("--cameras", l_cams)->required();
    label_cmd->add_option("--rasters", l_rasters, "Directory with <camera_id>.pgm")->required();
    label_cmd->add_option("--palette", l_palette)->required();
    label_cmd->add_option("--visibility", l_vis, "Visibility file supplying first observers");
    label_cmd->add_option("--fallback", l_fallback, "Label for failed projections")
        ->capture_default_str();
    label_cmd->add_option("--out", l_out)->required();

    // simplify
    auto* simp_cmd = app.add_subcommand("simplify", "Decimate simplifiable classes");
    std::string s_cloud, s_palette, s_out, s_diag;
    SimplifyCliOptions s_opts;
    simp_cmd->add_option("--cloud", s_cloud)->required();
    simp_cmd->add_option("--palette", s_palette)->required();
    s_opts.attach(simp_cmd);
    simp_cmd->add_option("--out", s_out)->required();
    simp_cmd->add_option("--diagnostics", s_diag, "Per-region diagnostics CSV");

    // reconstruct
    auto* rec_cmd = app.add_subcommand("reconstruct", "Delaunay + visibility manifold surface");
    std::string r_cloud, r_cams, r_vis, r_out;
    double r_sigma_free = 0.05, r_sigma_matter = 0.01;
    rec_cmd->add_option("--cloud", r_cloud)->required();
    rec_cmd->add_option("--cameras", r_cams)->required();
    rec_cmd->add_option("--visibility", r_vis)->required();
    rec_cmd->add_option("--sigma-free", r_sigma_free)->capture_default_str();
    rec_cmd->add_option("--sigma-matter", r_sigma_matter)->capture_default_str();
    rec_cmd->add_option("--out", r_out)->required();

    // render-depth
    auto* rend_cmd = app.add_subcommand("render-depth", "Render per-camera depth maps");
    std::string d_mesh, d_cams, d_out;
    rend_cmd->add_option("--mesh", d_mesh)->required();
    rend_cmd->add_option("--cameras", d_cams)->required();
    rend_cmd->add_option("--out", d_out, "Output directory")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Depth RMSE against ground truth");
    std::string e_rendered, e_truth, e_cams, e_mesh, e_before, e_after, e_palette, e_out, e_csv;
    eval_cmd->add_option("--rendered", e_rendered)->required();
    eval_cmd->add_option("--truth", e_truth)->required();
    eval_cmd->add_option("--cameras", e_cams)->required();
    eval_cmd->add_option("--mesh", e_mesh, "Mesh for size statistics");
    eval_cmd->add_option("--cloud-before", e_before);
    eval_cmd->add_option("--cloud-after", e_after);
    eval_cmd->add_option("--palette", e_palette);
    eval_cmd->add_option("--out", e_out, "Report text file")->required();
    eval_cmd->add_option("--csv", e_csv, "Retention CSV");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Cloud statistics / synthetic scene generator");
    std::string t_before, t_after, t_palette, t_csv, t_scene = "urban", t_out, t_scale = "full";
    bool t_gen = false;
    uint64_t t_seed = 42;
    stats_cmd->add_flag("--gen-synthetic", t_gen, "Generate a synthetic scene instead");
    stats_cmd->add_option("--before", t_before);
    stats_cmd->add_option("--after", t_after);
    stats_cmd->add_option("--palette", t_palette);
    stats_cmd->add_option("--csv", t_csv);
    stats_cmd->add_option("--scene", t_scene, "urban, cube or halfplane")->capture_default_str();
    stats_cmd->add_option("--scale", t_scale, "full or tiny (urban only)")->capture_default_str();
    stats_cmd->add_option("--seed", t_seed)->capture_default_str();
    stats_cmd->add_option("--out", t_out, "Scene output directory");

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run label/simplify/reconstruct/render/evaluate");
    std::string p_scene_dir, p_out;
    SimplifyCliOptions p_opts;
    bool p_no_simplify = false;
    double p_sigma_free = 0.05, p_sigma_matter = 0.01;
    int p_fallback = 0;
    pipe_cmd->add_option("--scene-dir", p_scene_dir, "Directory from stats --gen-synthetic")
        ->required();
    pipe_cmd->add_option("--out", p_out)->required();
    p_opts.attach(pipe_cmd);
    pipe_cmd->add_flag("--no-simplify", p_no_simplify, "Baseline: skip the simplify stage");
    pipe_cmd->add_option("--sigma-free", p_sigma_free)->capture_default_str();
    pipe_cmd->add_option("--sigma-matter", p_sigma_matter)->capture_default_str();
    pipe_cmd->add_option("--fallback", p_fallback)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (label_cmd->parsed())
            return run_label(l_cloud, l_cams, l_rasters, l_palette, l_fallback, l_vis, l_out);
        if (simp_cmd->parsed()) return run_simplify(s_cloud, s_palette, s_opts, s_out, s_diag);
        if (rec_cmd->parsed())
            return run_reconstruct(r_cloud, r_cams, r_vis, r_sigma_free, r_sigma_matter, r_out);
        if (rend_cmd->parsed()) return run_render_depth(d_mesh, d_cams, d_out);
        if (eval_cmd->parsed())
            return run_evaluate(e_rendered, e_truth, e_cams, e_mesh, e_before, e_after, e_palette,
                                e_out, e_csv);
        if (stats_cmd->parsed()) {
            if (t_gen) {
                if (t_out.empty()) throw ValidationError("--gen-synthetic needs --out DIR");
                return run_gen_synthetic(t_scene, t_out, t_seed, t_scale);
            }
            if (t_before.empty() || t_after.empty() || t_palette.empty())
                throw ValidationError("stats needs --before, --after and --palette");
            return run_stats(t_before, t_after, t_palette, t_csv);
        }
        if (pipe_cmd->parsed())
            return run_pipeline(p_scene_dir, p_out, p_opts, p_no_simplify, p_sigma_free,
                                p_sigma_matter, p_fallback);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

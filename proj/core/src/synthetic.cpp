#include "semsimp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "semsimp/io.hpp"
#include "semsimp/labeling.hpp"
#include "semsimp/rng.hpp"

namespace semsimp {

namespace {

// Analytic scene primitives. Rectangles are oriented: `normal` marks the
// open side used for facing tests; intersections are two-sided.
struct Rect {
    Vec3 origin;   // one corner
    Vec3 edge_u, edge_v;
    Vec3 normal;
    uint8_t label = 0;
};

struct SphereP {
    Vec3 center;
    double radius = 0.0;
    uint8_t label = 0;
};

struct Scene {
    std::vector<Rect> rects;
    std::vector<SphereP> spheres;
};

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    uint8_t label = 0;
    bool valid() const { return std::isfinite(t); }
};

Hit hit_rect(const Rect& r, const Vec3& o, const Vec3& d) {
    Hit h;
    const double denom = r.normal.dot(d);
    if (std::fabs(denom) < 1e-300) return h;
    const double t = r.normal.dot(r.origin - o) / denom;
    if (!(t > 1e-9)) return h;
    const Vec3 q = o + d * t - r.origin;
    const double lu2 = r.edge_u.norm2(), lv2 = r.edge_v.norm2();
    const double a = q.dot(r.edge_u) / lu2;
    const double b = q.dot(r.edge_v) / lv2;
    if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0) return h;
    h.t = t;
    h.label = r.label;
    return h;
}

Hit hit_sphere(const SphereP& s, const Vec3& o, const Vec3& d) {
    Hit h;
    const Vec3 oc = o - s.center;
    const double a = d.norm2();
    const double bq = 2.0 * oc.dot(d);
    const double c = oc.norm2() - s.radius * s.radius;
    const double disc = bq * bq - 4.0 * a * c;
    if (disc < 0.0) return h;
    const double sq = std::sqrt(disc);
    double t = (-bq - sq) / (2.0 * a);
    if (!(t > 1e-9)) t = (-bq + sq) / (2.0 * a);
    if (!(t > 1e-9)) return h;
    h.t = t;
    h.label = s.label;
    return h;
}

Hit scene_hit(const Scene& scene, const Vec3& o, const Vec3& d) {
    Hit best;
    for (const Rect& r : scene.rects) {
        const Hit h = hit_rect(r, o, d);
        if (h.t < best.t) best = h;
    }
    for (const SphereP& s : scene.spheres) {
        const Hit h = hit_sphere(s, o, d);
        if (h.t < best.t) best = h;
    }
    return best;
}

Camera make_lookat_camera(int id, const Vec3& position, const Vec3& target, double focal,
                          int width, int height) {
    Camera cam;
    cam.id = id;
    cam.fx = cam.fy = focal;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    const Vec3 forward = (target - position).normalized();
    Vec3 up{0, 0, 1};
    if (std::fabs(forward.dot(up)) > 0.99) up = {0, 1, 0};
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right);
    cam.R = Mat3::from_rows(right, down, forward);
    cam.t = -(cam.R * position);
    return cam;
}

// Exact visibility of a surface sample: facing the camera, in front of it,
// inside the image, and not occluded by any primitive (the sample sits on a
// primitive, so the nearest hit along the view ray must be the sample
// itself).
bool sample_visible(const Scene& scene, const Camera& cam, const Vec3& q,
                    const Vec3& surface_normal) {
    const Vec3 c = cam.center();
    if (surface_normal.dot(c - q) <= 0.0) return false;
    const Vec3 pc = cam.to_camera(q);
    if (!(pc.z > 0.0)) return false;
    const double u = cam.fx * pc.x / pc.z + cam.cx;
    const double v = cam.fy * pc.y / pc.z + cam.cy;
    if (u < 0 || u > cam.width - 1 || v < 0 || v > cam.height - 1) return false;
    const Vec3 dir = q - c;
    const Hit h = scene_hit(scene, c, dir);
    return h.valid() && h.t > 1.0 - 1e-6;
}

void rasterize(const Scene& scene, const Camera& cam, LabelRaster& labels, DepthMap& depth) {
    labels.width = cam.width;
    labels.height = cam.height;
    labels.data.assign(static_cast<size_t>(cam.width) * cam.height, 0);
    depth.width = cam.width;
    depth.height = cam.height;
    depth.data.assign(labels.data.size(), 0.0);
    const Mat3 Rt = cam.R.transposed();
    const Vec3 origin = -(Rt * cam.t);
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const Vec3 dir = Rt * Vec3{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
            const Hit h = scene_hit(scene, origin, dir);
            if (!h.valid()) continue;
            labels.data[static_cast<size_t>(v) * cam.width + u] = h.label;
            depth.at(u, v) = h.t;  // dir has camera z = 1, so t is the depth
        }
    }
}

struct SamplePoint {
    Vec3 base;     // on the primitive (drives visibility and truth)
    Vec3 noisy;    // stored in the cloud
    Vec3 normal;   // facing side
    uint8_t label = 0;
};

void fill_visibility(const Scene& scene, const CameraSet& cams,
                     const std::vector<SamplePoint>& samples, LabeledCloud& cloud) {
    cloud.visibility.assign(samples.size(), {});
    cloud.first_observer.assign(samples.size(), -1);
    for (size_t i = 0; i < samples.size(); ++i) {
        for (const Camera& cam : cams.cameras) {
            if (sample_visible(scene, cam, samples[i].base, samples[i].normal))
                cloud.visibility[i].push_back(cam.id);
        }
        if (!cloud.visibility[i].empty()) cloud.first_observer[i] = cloud.visibility[i].front();
    }
}

}  // namespace

SyntheticScene make_urban_scene(const UrbanSceneParams& p) {
    SyntheticScene out;
    out.palette = Palette({{0, "void", false},
                           {1, "ground", true},
                           {2, "wall_a", true},
                           {3, "wall_b", true},
                           {4, "vegetation", false}});

    const double ground_half = 40.0;
    const double wall_top = 10.0;
    Scene scene;
    scene.rects.push_back({{-ground_half, -ground_half, 0.0},
                           {2 * ground_half, 0, 0},
                           {0, 2 * ground_half, 0},
                           {0, 0, 1},
                           1});
    // back wall along y = 25, open side toward -y
    scene.rects.push_back(
        {{-ground_half, 25.0, 0.0}, {2 * ground_half, 0, 0}, {0, 0, wall_top}, {0, -1, 0}, 2});
    // side wall along x = -25, open side toward +x
    scene.rects.push_back(
        {{-25.0, -ground_half, 0.0}, {0, 2 * ground_half, 0}, {0, 0, wall_top}, {1, 0, 0}, 3});
    scene.spheres.push_back({{10.0, -5.0, 6.0}, 6.0, 4});

    Rng rng(p.seed);
    std::vector<SamplePoint> samples;

    auto sample_rect = [&](const Rect& r, int nu, int nv) {
        const Vec3 du = r.edge_u / static_cast<double>(nu);
        const Vec3 dv = r.edge_v / static_cast<double>(nv);
        for (int i = 0; i < nu; ++i) {
            for (int j = 0; j < nv; ++j) {
                const double ju = rng.uniform(0.15, 0.85);
                const double jv = rng.uniform(0.15, 0.85);
                SamplePoint s;
                s.base = r.origin + du * (i + ju) + dv * (j + jv);
                s.noisy = s.base + r.normal * (rng.gaussian() * p.noise_sigma);
                s.normal = r.normal;
                s.label = r.label;
                samples.push_back(s);
            }
        }
    };
    sample_rect(scene.rects[0], p.ground_n, p.ground_n);
    sample_rect(scene.rects[1], p.wall_nx, p.wall_nz);
    sample_rect(scene.rects[2], p.wall_nx, p.wall_nz);

    // Fibonacci sphere with radial noise (also breaks cosphericity).
    const SphereP& sph = scene.spheres[0];
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < p.sphere_n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / p.sphere_n;
        const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = golden * i;
        const Vec3 n{rr * std::cos(th), rr * std::sin(th), z};
        SamplePoint s;
        s.base = sph.center + n * sph.radius;
        if (s.base.z < 0.05) continue;  // keep the sphere above the ground
        s.noisy = sph.center + n * (sph.radius + rng.gaussian() * p.noise_sigma);
        s.normal = n;
        s.label = sph.label;
        samples.push_back(s);
    }

    for (int c = 0; c < p.camera_count; ++c) {
        const double ang = 2.0 * std::numbers::pi * c / p.camera_count;
        const Vec3 pos{60.0 * std::cos(ang), 60.0 * std::sin(ang), 18.0};
        out.cameras.cameras.push_back(
            make_lookat_camera(c, pos, {0, 0, 2}, p.focal, p.image_width, p.image_height));
    }

    out.cloud.points.reserve(samples.size());
    out.cloud.labels.reserve(samples.size());
    for (const SamplePoint& s : samples) {
        out.cloud.points.push_back(s.noisy);
        out.cloud.labels.push_back(s.label);
    }
    fill_visibility(scene, out.cameras, samples, out.cloud);

    out.rasters.resize(out.cameras.size());
    out.truth_depth.resize(out.cameras.size());
    for (size_t c = 0; c < out.cameras.size(); ++c)
        rasterize(scene, out.cameras.cameras[c], out.rasters[c], out.truth_depth[c]);
    return out;
}

SyntheticScene make_hollow_cube_scene(const CubeSceneParams& p) {
    SyntheticScene out;
    out.palette = Palette({{0, "void", false}, {1, "cube", false}});

    Rng rng(p.seed);
    const double h = p.half_extent;
    std::vector<SamplePoint> samples;

    // Six faces, +-x, +-y, +-z, with in-plane jitter only. Each face stays
    // exactly planar, so no volume cell can hide inside a face layer where
    // visibility rays could never reach it; the exact coplanarity is the
    // predicates' symbolic-degeneracy job.
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign = -1; sign <= 1; sign += 2) {
            Vec3 normal{};
            if (axis == 0) normal = {double(sign), 0, 0};
            else if (axis == 1) normal = {0, double(sign), 0};
            else normal = {0, 0, double(sign)};
            Vec3 eu{}, ev{};
            if (axis == 0) { eu = {0, 1, 0}; ev = {0, 0, 1}; }
            else if (axis == 1) { eu = {1, 0, 0}; ev = {0, 0, 1}; }
            else { eu = {1, 0, 0}; ev = {0, 1, 0}; }
            const double step = 2.0 * h / p.face_n;
            for (int i = 0; i < p.face_n; ++i) {
                for (int j = 0; j < p.face_n; ++j) {
                    const double a = -h + step * (i + rng.uniform(0.2, 0.8));
                    const double b = -h + step * (j + rng.uniform(0.2, 0.8));
                    SamplePoint s;
                    s.base = normal * h + eu * a + ev * b;
                    s.noisy = s.base;
                    s.normal = normal;
                    s.label = 1;
                    samples.push_back(s);
                }
            }
        }
    }

    // Viewing directions. Three families so every exterior cell of the
    // triangulation is swept by at least one visibility segment:
    //  - the 26 symmetric directions (face normals, edge/corner diagonals),
    //  - a Fibonacci sphere for general in-between coverage,
    //  - per-face rings of low-elevation cameras whose grazing chords pass
    //    just above each face and pierce the tall "tent" cells that
    //    straight-on rays enter only at their apex.
    std::vector<Vec3> dirs;
    for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dz = -1; dz <= 1; ++dz)
                if (dx || dy || dz)
                    dirs.push_back(Vec3{double(dx), double(dy), double(dz)}.normalized());
    const int n_fib = 48;
    const double cam_golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n_fib; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n_fib;
        const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = cam_golden * i;
        dirs.push_back({rxy * std::cos(th), rxy * std::sin(th), z});
    }
    const double elev = 0.18;  // ~10 degrees above each face plane
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign = -1; sign <= 1; sign += 2) {
            Vec3 n{}, u{}, v{};
            if (axis == 0) { n = {double(sign), 0, 0}; u = {0, 1, 0}; v = {0, 0, 1}; }
            else if (axis == 1) { n = {0, double(sign), 0}; u = {1, 0, 0}; v = {0, 0, 1}; }
            else { n = {0, 0, double(sign)}; u = {1, 0, 0}; v = {0, 1, 0}; }
            for (int k = 0; k < 16; ++k) {
                const double phi = 2.0 * std::numbers::pi * (k + 0.37) / 16.0;
                dirs.push_back(
                    ((u * std::cos(phi) + v * std::sin(phi)) * std::cos(elev) + n * std::sin(elev))
                        .normalized());
            }
        }
    }
    for (size_t i = 0; i < dirs.size(); ++i)
        out.cameras.cameras.push_back(make_lookat_camera(
            static_cast<int>(i), dirs[i] * p.camera_radius, {0, 0, 0}, 50.0, 64, 48));

    out.cloud.points.reserve(samples.size());
    out.cloud.labels.reserve(samples.size());
    for (const SamplePoint& s : samples) {
        out.cloud.points.push_back(s.noisy);
        out.cloud.labels.push_back(s.label);
    }
    // Convex object: a face sample is visible from every camera on its open
    // side; no in-image requirement because visibility drives rays only.
    out.cloud.visibility.assign(samples.size(), {});
    out.cloud.first_observer.assign(samples.size(), -1);
    for (size_t i = 0; i < samples.size(); ++i) {
        for (const Camera& cam : out.cameras.cameras) {
            if (samples[i].normal.dot(cam.center() - samples[i].base) > 0.0)
                out.cloud.visibility[i].push_back(cam.id);
        }
        if (!out.cloud.visibility[i].empty())
            out.cloud.first_observer[i] = out.cloud.visibility[i].front();
    }
    return out;
}

SyntheticScene make_halfplane_scene(const HalfPlaneParams& p) {
    SyntheticScene out;
    out.palette = Palette({{1, "left", true}, {2, "right", true}});
    Rng rng(p.seed);
    const double step = 2.0 * p.extent / (p.n - 1);
    for (int i = 0; i < p.n; ++i) {
        for (int j = 0; j < p.n; ++j) {
            const double x = -p.extent + step * i + rng.uniform(-0.2, 0.2) * step;
            const double y = -p.extent + step * j + rng.uniform(-0.2, 0.2) * step;
            out.cloud.points.push_back({x, y, rng.gaussian() * p.noise_sigma});
            out.cloud.labels.push_back(x < 0.0 ? 1 : 2);
        }
    }
    return out;
}

std::vector<std::string> write_scene(const SyntheticScene& scene, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& rel) {
        written.push_back(rel);
        return dir + "/" + rel;
    };

    LabeledCloud unlabeled = scene.cloud;
    unlabeled.labels.clear();  // the labeling stage reassigns labels
    write_ply(unlabeled, emit("cloud.ply"));
    write_palette(scene.palette, emit("palette.txt"));
    if (!scene.cameras.cameras.empty()) write_cameras(scene.cameras, emit("cameras.txt"));
    if (scene.cloud.has_visibility()) write_visibility(scene.cloud, emit("visibility.txt"));
    if (!scene.rasters.empty()) {
        fs::create_directories(dir + "/rasters");
        for (size_t i = 0; i < scene.rasters.size(); ++i)
            write_label_raster(scene.rasters[i],
                               emit("rasters/" + std::to_string(scene.cameras.cameras[i].id) +
                                    ".pgm"));
    }
    if (!scene.truth_depth.empty()) {
        fs::create_directories(dir + "/truth");
        for (size_t i = 0; i < scene.truth_depth.size(); ++i)
            write_depth(scene.truth_depth[i],
                        emit("truth/" + std::to_string(scene.cameras.cameras[i].id) + ".depth"));
    }
    return written;
}

}  // namespace semsimp

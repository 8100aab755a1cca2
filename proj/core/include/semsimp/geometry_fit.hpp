// Per-point tangent-plane normals, seeded RANSAC class planes, the normal
// ranking score, plane-basis projection and the 2D linear class separator.
#pragma once

#include <cstdint>
#include <vector>

#include "semsimp/spatial_index.hpp"
#include "semsimp/types.hpp"

namespace semsimp {

// Per-point unit normals; `valid[i] == 0` marks points whose neighborhood
// was too small or too thin for a tangent plane. Those points are exempt
// from ranking and always survive decimation.
struct NormalField {
    std::vector<Vec3> normals;
    std::vector<uint8_t> valid;
};

NormalField estimate_normals(const SpatialIndex& index, const RegionSpec& spec);

struct ClassPlane {
    uint8_t label = 0;
    Vec3 normal;     // unit, flipped so z >= 0 (ties: y, then x)
    double offset = 0.0;  // plane is normal . x == offset
    Vec3 u, v;       // orthonormal in-plane basis

    Vec3 origin() const { return normal * offset; }
    double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

struct RansacParams {
    int iterations = 256;
    double inlier_threshold = 0.05;  // meters
    uint64_t seed = 0;
};

struct PlaneFit {
    ClassPlane plane;
    int inlier_count = 0;
};

// Best-of-N three-point RANSAC followed by a least-squares refit over the
// winning inliers. Deterministic for a fixed seed.
PlaneFit fit_class_plane(const LabeledCloud& cloud, uint8_t label, const RansacParams& params);

// Same fit over an explicit point set (single-class clouds, tests).
PlaneFit fit_plane(const std::vector<Vec3>& points, const std::vector<int>& subset,
                   const RansacParams& params);

// Flip n so it points into the reference halfspace (n . ref >= 0).
inline Vec3 orient_normal(const Vec3& n, const Vec3& reference) {
    return n.dot(reference) < 0.0 ? -n : n;
}

// Squared distance between a point normal and the class normal; callers
// orient n_i first so anti-parallel normals on a flat surface rank as zero.
inline double ranking_score(const Vec3& n_i, const Vec3& n_l) {
    const Vec3 d = n_i - n_l;
    return d.dot(d);
}

Vec2 project_to_plane(const Vec3& p, const ClassPlane& plane);
std::vector<Vec2> project_to_plane(const std::vector<Vec3>& points, const ClassPlane& plane);
Vec3 lift_from_plane(const Vec2& q, const ClassPlane& plane);

struct Separator2D {
    double wx = 0.0, wy = 0.0, bias = 0.0;  // decision line w . x + bias == 0
    double decision(const Vec2& p) const { return wx * p.x + wy * p.y + bias; }
};

struct SeparatorConfig {
    int iterations = 400;
    double regularization = 0.01;
    uint64_t seed = 0;  // unused by the deterministic full-batch schedule
};

// L2-regularized hinge loss minimized by full-batch subgradient descent from
// a zero start with the 1/(lambda t) step schedule; the best iterate by
// objective is returned, so the result never scores worse than the start.
Separator2D fit_separator(const std::vector<Vec2>& points, const std::vector<int8_t>& labels,
                          const SeparatorConfig& config);

double distance_to_line(const Vec2& p, const Separator2D& sep);

}  // namespace semsimp

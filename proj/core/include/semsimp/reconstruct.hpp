// Visibility-driven surface extraction: camera-to-point rays accumulate
// free-space votes on the tetrahedra they traverse and matter votes on a
// short extension behind each point; a greedy region growing then collects
// free-space cells under a 2-manifold constraint and returns the boundary
// surface.
#pragma once

#include "semsimp/delaunay.hpp"
#include "semsimp/types.hpp"

namespace semsimp {

// Soft visibility weights and the matter extension follow the mapping
// pipeline's constants: sigma_free 0.05 m, sigma_matter 0.01 m, extension
// 10 * sigma_matter behind the point.
struct ReconParams {
    double sigma_free = 0.05;   // meters
    double sigma_matter = 0.01; // meters
};
inline constexpr double kMatterExtensionFactor = 10.0;

// 1 - exp(-d^2 / (2 sigma^2)); 0 at the point, saturating with distance.
double visibility_weight(double d, double sigma);

struct VisibilityRay {
    Vec3 origin;          // camera center, -R^T t
    int point_index = -1; // target point (cloud index = triangulation vertex)
};

// Adds this ray's free/matter votes to the mesh. Rays starting outside the
// triangulation are clipped to their hull entry.
void trace_ray(TetMesh& mesh, const VisibilityRay& ray, const ReconParams& params);

struct RayStats {
    size_t traced = 0;
    size_t skipped = 0;  // degenerate rays (camera on the point, walk failure)
};

// One ray per (point, camera in its visibility list), in cloud order.
RayStats accumulate_visibility(TetMesh& mesh, const LabeledCloud& cloud, const CameraSet& cameras,
                               const ReconParams& params);

// Greedy growing seeded at the highest free-space cell; a cell joins when
// mu_free > mu_matter and the region boundary stays a 2-manifold (verified
// on the complete boundary when the growing finishes). Returns the boundary
// surface between inside and outside cells, oriented outward, minus any
// facet touching a bounding-box vertex: the box is plumbing and never
// carries reconstructed geometry. Leaves the per-cell inside flags set, and
// emits a warning plus an empty mesh when no cell qualifies as free space.
TriMesh extract_manifold(TetMesh& mesh);

struct SurfaceCheck {
    bool watertight = false;   // every edge has exactly two incident triangles
    bool oriented = false;     // the two incident triangles traverse each edge oppositely
    bool vertex_fans = false;  // the triangles around every vertex form one closed fan
    size_t vertex_count = 0, edge_count = 0, triangle_count = 0;

    bool manifold() const { return watertight && oriented && vertex_fans; }
    long euler_characteristic() const {
        return static_cast<long>(vertex_count) - static_cast<long>(edge_count) +
               static_cast<long>(triangle_count);
    }
};
SurfaceCheck check_surface(const TriMesh& mesh);

// Full reconstruction stage: triangulate, trace every visibility ray, grow.
TriMesh reconstruct_mesh(const LabeledCloud& cloud, const CameraSet& cameras,
                         const ReconParams& params);

}  // namespace semsimp

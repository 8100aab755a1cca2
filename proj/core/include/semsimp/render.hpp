// Depth rendering: one ray per pixel through the integer pixel coordinate,
// nearest triangle hit by a watertight intersection test. A BVH accelerates
// the search and must reproduce the brute-force scan bit for bit, which both
// paths guarantee by minimizing the same (t, triangle id) key.
#pragma once

#include <optional>
#include <vector>

#include "semsimp/types.hpp"

namespace semsimp {

struct RayHit {
    double t = 0.0;  // ray parameter
    int triangle = -1;

    bool operator<(const RayHit& o) const {
        return t < o.t || (t == o.t && triangle < o.triangle);
    }
};

// Minimum ray parameter accepted by the intersection tests; rejects
// self-intersections at the origin.
inline constexpr double kRayEpsilon = 1e-9;

std::optional<RayHit> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c, int triangle_id);

class TriangleBvh {
public:
    explicit TriangleBvh(const TriMesh& mesh);

    std::optional<RayHit> nearest(const Vec3& origin, const Vec3& dir) const;

private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;  // internal node children
        int begin = 0, end = 0;     // leaf triangle range
        bool leaf() const { return left < 0; }
    };

    int build(int begin, int end);

    const TriMesh* mesh_;
    std::vector<int> order_;
    std::vector<Vec3> centroids_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// Depth for every pixel; rays go through integer pixel coordinates and the
// stored value is the camera-frame z of the nearest hit (0 when the ray
// escapes).
DepthMap render_depth(const TriMesh& mesh, const Camera& camera);

// Reference implementation scanning every triangle; the BVH must match it
// exactly.
DepthMap render_depth_brute(const TriMesh& mesh, const Camera& camera);

}  // namespace semsimp

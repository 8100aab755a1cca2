#include "semsimp/render.hpp"

#include <algorithm>
#include <cmath>

namespace semsimp {

// Watertight ray/triangle test after Woop, Benthin and Wald: shear the
// triangle into ray space and evaluate 2D edge functions whose signs agree
// exactly along shared edges, so rays cannot slip between adjacent
// triangles.
std::optional<RayHit> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c, int triangle_id) {
    // Permute so the largest direction component becomes z.
    int kz = 0;
    double amax = std::fabs(dir.x);
    if (std::fabs(dir.y) > amax) { kz = 1; amax = std::fabs(dir.y); }
    if (std::fabs(dir.z) > amax) kz = 2;
    int kx = (kz + 1) % 3, ky = (kz + 2) % 3;
    if (dir[kz] < 0.0) std::swap(kx, ky);

    const double sz = 1.0 / dir[kz];
    const double sx = dir[kx] * sz;
    const double sy = dir[ky] * sz;

    auto shear = [&](const Vec3& p, double& px, double& py, double& pz) {
        const Vec3 d = p - origin;
        px = d[kx] - sx * d[kz];
        py = d[ky] - sy * d[kz];
        pz = sz * d[kz];
    };
    double ax, ay, az, bx, by, bz, cx, cy, cz;
    shear(a, ax, ay, az);
    shear(b, bx, by, bz);
    shear(c, cx, cy, cz);

    double u = cx * by - cy * bx;
    double v = ax * cy - ay * cx;
    double w = bx * ay - by * ax;

    if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return std::nullopt;
    const double det = u + v + w;
    if (det == 0.0) return std::nullopt;

    const double t_scaled = u * az + v * bz + w * cz;
    const double t = t_scaled / det;
    if (!(t > kRayEpsilon)) return std::nullopt;
    return RayHit{t, triangle_id};
}

// ---------------------------------------------------------------------------
// BVH
// ---------------------------------------------------------------------------

namespace {

constexpr int kBvhLeafSize = 4;

Aabb triangle_box(const TriMesh& mesh, int tri) {
    Aabb box;
    for (int v : mesh.triangles[static_cast<size_t>(tri)])
        box.expand(mesh.vertices[static_cast<size_t>(v)]);
    return box;
}

// Slab test returning the entry parameter; infinity when the box is missed.
// Zero direction components are handled explicitly so 0 * inf never poisons
// the result with NaN.
double box_entry(const Aabb& box, const Vec3& origin, const Vec3& dir) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis) {
        const double d = dir[axis];
        if (d == 0.0) {
            if (origin[axis] < box.lo[axis] || origin[axis] > box.hi[axis])
                return std::numeric_limits<double>::infinity();
            continue;
        }
        const double inv = 1.0 / d;
        const double lo = (box.lo[axis] - origin[axis]) * inv;
        const double hi = (box.hi[axis] - origin[axis]) * inv;
        t0 = std::max(t0, std::min(lo, hi));
        t1 = std::min(t1, std::max(lo, hi));
    }
    return t0 <= t1 ? t0 : std::numeric_limits<double>::infinity();
}

}  // namespace

TriangleBvh::TriangleBvh(const TriMesh& mesh) : mesh_(&mesh) {
    const int n = static_cast<int>(mesh.triangles.size());
    order_.resize(static_cast<size_t>(n));
    centroids_.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        order_[static_cast<size_t>(i)] = i;
        const auto& t = mesh.triangles[static_cast<size_t>(i)];
        centroids_[static_cast<size_t>(i)] =
            (mesh.vertices[static_cast<size_t>(t[0])] + mesh.vertices[static_cast<size_t>(t[1])] +
             mesh.vertices[static_cast<size_t>(t[2])]) /
            3.0;
    }
    if (n > 0) root_ = build(0, n);
}

int TriangleBvh::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Aabb box;
    Aabb cbox;
    for (int i = begin; i < end; ++i) {
        box.expand(triangle_box(*mesh_, order_[static_cast<size_t>(i)]));
        cbox.expand(centroids_[static_cast<size_t>(order_[static_cast<size_t>(i)])]);
    }
    nodes_[static_cast<size_t>(id)].box = box;
    if (end - begin <= kBvhLeafSize) {
        std::sort(order_.begin() + begin, order_.begin() + end);
        nodes_[static_cast<size_t>(id)].begin = begin;
        nodes_[static_cast<size_t>(id)].end = end;
        return id;
    }
    const Vec3 ext = cbox.extent();
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int ta, int tb) {
                         const double va = centroids_[static_cast<size_t>(ta)][axis];
                         const double vb = centroids_[static_cast<size_t>(tb)][axis];
                         return va < vb || (va == vb && ta < tb);
                     });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[static_cast<size_t>(id)].left = left;
    nodes_[static_cast<size_t>(id)].right = right;
    nodes_[static_cast<size_t>(id)].begin = -1;
    return id;
}

std::optional<RayHit> TriangleBvh::nearest(const Vec3& origin, const Vec3& dir) const {
    if (root_ < 0) return std::nullopt;
    std::optional<RayHit> best;
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const Node& node = nodes_[static_cast<size_t>(id)];
        const double entry = box_entry(node.box, origin, dir);
        // Strictly-greater pruning keeps ties alive so the (t, id) minimum
        // matches the brute-force scan even when a box touches the best hit.
        if (best && entry > best->t) continue;
        if (entry == std::numeric_limits<double>::infinity()) continue;
        if (node.leaf()) {
            for (int i = node.begin; i < node.end; ++i) {
                const int tri = order_[static_cast<size_t>(i)];
                const auto& tv = mesh_->triangles[static_cast<size_t>(tri)];
                const auto hit = intersect_triangle(
                    origin, dir, mesh_->vertices[static_cast<size_t>(tv[0])],
                    mesh_->vertices[static_cast<size_t>(tv[1])],
                    mesh_->vertices[static_cast<size_t>(tv[2])], tri);
                if (hit && (!best || *hit < *best)) best = hit;
            }
            continue;
        }
        stack.push_back(node.right);
        stack.push_back(node.left);  // near-first is an optimization only; order is irrelevant
    }
    return best;
}

// ---------------------------------------------------------------------------
// Depth rendering
// ---------------------------------------------------------------------------

namespace {

// Camera ray through integer pixel coordinates (u, v). The direction is kept
// unnormalized with camera-frame z equal to 1 so the ray parameter equals
// the depth.
void pixel_ray(const Camera& cam, int u, int v, Vec3& origin, Vec3& dir) {
    const Vec3 dir_cam{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
    const Mat3 Rt = cam.R.transposed();
    origin = -(Rt * cam.t);
    dir = Rt * dir_cam;
}

}  // namespace

DepthMap render_depth(const TriMesh& mesh, const Camera& camera) {
    camera.validate();
    mesh.check_valid();
    DepthMap map;
    map.width = camera.width;
    map.height = camera.height;
    map.data.assign(static_cast<size_t>(camera.width) * camera.height, 0.0);
    if (mesh.triangles.empty()) return map;
    const TriangleBvh bvh(mesh);
    for (int v = 0; v < camera.height; ++v) {
        for (int u = 0; u < camera.width; ++u) {
            Vec3 origin, dir;
            pixel_ray(camera, u, v, origin, dir);
            const auto hit = bvh.nearest(origin, dir);
            if (hit) map.at(u, v) = hit->t;
        }
    }
    return map;
}

DepthMap render_depth_brute(const TriMesh& mesh, const Camera& camera) {
    camera.validate();
    mesh.check_valid();
    DepthMap map;
    map.width = camera.width;
    map.height = camera.height;
    map.data.assign(static_cast<size_t>(camera.width) * camera.height, 0.0);
    for (int v = 0; v < camera.height; ++v) {
        for (int u = 0; u < camera.width; ++u) {
            Vec3 origin, dir;
            pixel_ray(camera, u, v, origin, dir);
            std::optional<RayHit> best;
            for (size_t tri = 0; tri < mesh.triangles.size(); ++tri) {
                const auto& tv = mesh.triangles[tri];
                const auto hit = intersect_triangle(
                    origin, dir, mesh.vertices[static_cast<size_t>(tv[0])],
                    mesh.vertices[static_cast<size_t>(tv[1])],
                    mesh.vertices[static_cast<size_t>(tv[2])], static_cast<int>(tri));
                if (hit && (!best || *hit < *best)) best = hit;
            }
            if (best) map.at(u, v) = best->t;
        }
    }
    return map;
}

}  // namespace semsimp

#include "semsimp/geometry_fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "semsimp/rng.hpp"

namespace semsimp {

namespace {

// Deterministic sign canonicalization: z >= 0, ties broken by y then x.
Vec3 canonical_sign(const Vec3& n) {
    if (n.z < 0.0) return -n;
    if (n.z == 0.0) {
        if (n.y < 0.0) return -n;
        if (n.y == 0.0 && n.x < 0.0) return -n;
    }
    return n;
}

// Smallest-eigenvalue eigenvector of the scatter of `pts` about their mean.
// Returns false when the point set has no well-defined tangent plane (fewer
// than two independent spread directions).
bool smallest_scatter_direction(const std::vector<Vec3>& cloud, const std::vector<int>& ids,
                                Vec3& out_normal, Vec3& out_centroid) {
    Vec3 c{};
    for (int id : ids) c += cloud[static_cast<size_t>(id)];
    c = c / static_cast<double>(ids.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int id : ids) {
        const Vec3 d = cloud[static_cast<size_t>(id)] - c;
        const Eigen::Vector3d e(d.x, d.y, d.z);
        cov += e * e.transpose();
    }
    cov /= static_cast<double>(ids.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Vector3d evals = solver.eigenvalues();  // ascending
    if (!(evals[1] > evals[2] * 1e-12) || !(evals[2] > 0.0)) return false;
    const Eigen::Vector3d n = solver.eigenvectors().col(0);
    out_normal = canonical_sign(Vec3{n.x(), n.y(), n.z()}.normalized());
    out_centroid = c;
    return true;
}

void attach_basis(ClassPlane& plane) {
    const Vec3& n = plane.normal;
    const double ax = std::fabs(n.x), ay = std::fabs(n.y), az = std::fabs(n.z);
    Vec3 seed{1, 0, 0};
    if (ay <= ax && ay <= az) seed = {0, 1, 0};
    else if (az <= ax && az <= ay) seed = {0, 0, 1};
    plane.u = n.cross(seed).normalized();
    plane.v = n.cross(plane.u);
}

}  // namespace

NormalField estimate_normals(const SpatialIndex& index, const RegionSpec& spec) {
    spec.validate();
    const LabeledCloud& cloud = index.cloud();
    NormalField field;
    field.normals.assign(cloud.size(), Vec3{});
    field.valid.assign(cloud.size(), 0);
    for (size_t i = 0; i < cloud.size(); ++i) {
        std::vector<int> members =
            spec.mode == RegionSpec::Mode::knn
                ? index.knn(cloud.points[i], spec.k)
                : index.radius_search(cloud.points[i], spec.radius);
        if (members.size() < 3) continue;
        Vec3 n, centroid;
        if (!smallest_scatter_direction(cloud.points, members, n, centroid)) continue;
        field.normals[i] = n;
        field.valid[i] = 1;
    }
    return field;
}

PlaneFit fit_plane(const std::vector<Vec3>& points, const std::vector<int>& subset,
                   const RansacParams& params) {
    if (subset.size() < 3)
        throw std::invalid_argument("plane fit needs at least 3 points");
    Rng rng(params.seed);
    const auto n_pts = static_cast<uint64_t>(subset.size());

    int best_inliers = -1;
    Vec3 best_normal;
    double best_offset = 0.0;
    for (int iter = 0; iter < params.iterations; ++iter) {
        uint64_t ia = rng.below(n_pts), ib = rng.below(n_pts), ic = rng.below(n_pts);
        if (ia == ib || ib == ic || ia == ic) continue;
        const Vec3& a = points[static_cast<size_t>(subset[ia])];
        const Vec3& b = points[static_cast<size_t>(subset[ib])];
        const Vec3& c = points[static_cast<size_t>(subset[ic])];
        const Vec3 cr = (b - a).cross(c - a);
        const double len = cr.norm();
        if (!(len > 1e-12)) continue;  // collinear sample
        const Vec3 n = cr / len;
        const double off = n.dot(a);
        int inliers = 0;
        for (int id : subset)
            if (std::fabs(n.dot(points[static_cast<size_t>(id)]) - off) <= params.inlier_threshold)
                ++inliers;
        if (inliers > best_inliers) {
            best_inliers = inliers;
            best_normal = n;
            best_offset = off;
        }
    }
    if (best_inliers < 0)
        throw std::runtime_error("plane RANSAC: every sample was degenerate");

    std::vector<int> inlier_ids;
    for (int id : subset)
        if (std::fabs(best_normal.dot(points[static_cast<size_t>(id)]) - best_offset) <=
            params.inlier_threshold)
            inlier_ids.push_back(id);

    PlaneFit fit;
    Vec3 refit_normal, centroid;
    if (inlier_ids.size() >= 3 &&
        smallest_scatter_direction(points, inlier_ids, refit_normal, centroid)) {
        fit.plane.normal = refit_normal;
        fit.plane.offset = refit_normal.dot(centroid);
    } else {
        fit.plane.normal = canonical_sign(best_normal);
        fit.plane.offset = fit.plane.normal.dot(best_normal * best_offset);
    }
    attach_basis(fit.plane);
    fit.inlier_count = 0;
    for (int id : subset)
        if (std::fabs(fit.plane.signed_distance(points[static_cast<size_t>(id)])) <=
            params.inlier_threshold)
            ++fit.inlier_count;
    return fit;
}

PlaneFit fit_class_plane(const LabeledCloud& cloud, uint8_t label, const RansacParams& params) {
    if (!cloud.has_labels()) throw ValidationError("plane fit: cloud has no labels");
    std::vector<int> subset;
    for (size_t i = 0; i < cloud.size(); ++i)
        if (cloud.labels[i] == label) subset.push_back(static_cast<int>(i));
    if (subset.size() < 3)
        throw std::invalid_argument("plane fit: class " + std::to_string(int(label)) +
                                    " has fewer than 3 points");
    PlaneFit fit = fit_plane(cloud.points, subset, params);
    fit.plane.label = label;
    return fit;
}

Vec2 project_to_plane(const Vec3& p, const ClassPlane& plane) {
    const Vec3 d = p - plane.origin();
    return {d.dot(plane.u), d.dot(plane.v)};
}

std::vector<Vec2> project_to_plane(const std::vector<Vec3>& points, const ClassPlane& plane) {
    std::vector<Vec2> out;
    out.reserve(points.size());
    for (const Vec3& p : points) out.push_back(project_to_plane(p, plane));
    return out;
}

Vec3 lift_from_plane(const Vec2& q, const ClassPlane& plane) {
    return plane.origin() + plane.u * q.x + plane.v * q.y;
}

Separator2D fit_separator(const std::vector<Vec2>& points, const std::vector<int8_t>& labels,
                          const SeparatorConfig& config) {
    if (points.size() != labels.size())
        throw std::invalid_argument("separator: point/label count mismatch");
    bool pos = false, neg = false;
    for (int8_t l : labels) (l > 0 ? pos : neg) = true;
    if (!pos || !neg) throw std::runtime_error("separator: no boundary (single-class input)");

    const double lambda = config.regularization;
    const double inv_n = 1.0 / static_cast<double>(points.size());

    double wx = 0.0, wy = 0.0, b = 0.0;
    auto objective = [&](double ax, double ay, double ab) {
        double loss = 0.0;
        for (size_t i = 0; i < points.size(); ++i) {
            const double margin =
                static_cast<double>(labels[i]) * (ax * points[i].x + ay * points[i].y + ab);
            loss += std::max(0.0, 1.0 - margin);
        }
        return 0.5 * lambda * (ax * ax + ay * ay) + loss * inv_n;
    };

    double best_obj = objective(0, 0, 0);
    Separator2D best{0, 0, 0};
    for (int t = 0; t < config.iterations; ++t) {
        double gx = lambda * wx, gy = lambda * wy, gb = 0.0;
        for (size_t i = 0; i < points.size(); ++i) {
            const double y = static_cast<double>(labels[i]);
            if (y * (wx * points[i].x + wy * points[i].y + b) < 1.0) {
                gx -= y * points[i].x * inv_n;
                gy -= y * points[i].y * inv_n;
                gb -= y * inv_n;
            }
        }
        const double step = 1.0 / (lambda * static_cast<double>(t + 1));
        wx -= step * gx;
        wy -= step * gy;
        b -= step * gb;
        const double obj = objective(wx, wy, b);
        if (obj < best_obj && (wx != 0.0 || wy != 0.0)) {
            best_obj = obj;
            best = {wx, wy, b};
        }
    }
    if (best.wx == 0.0 && best.wy == 0.0) {
        // No iterate improved on the zero start; fall back to the final
        // iterate so the decision line is usable downstream.
        if (wx == 0.0 && wy == 0.0)
            throw std::runtime_error("separator: optimization produced a zero weight vector");
        best = {wx, wy, b};
    }
    return best;
}

double distance_to_line(const Vec2& p, const Separator2D& sep) {
    const double wn = std::sqrt(sep.wx * sep.wx + sep.wy * sep.wy);
    if (!(wn > 0.0)) throw std::invalid_argument("separator has zero weight vector");
    return std::fabs(sep.decision(p)) / wn;
}

}  // namespace semsimp

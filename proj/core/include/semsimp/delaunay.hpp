// Incremental 3D Delaunay triangulation: locate by walking, carve the
// conflict region, retriangulate the cavity. The triangulation covers an
// inflated bounding box whose 8 corners are appended after the input points
// as "big" vertices; every facet therefore has two incident cells except the
// box surface itself.
//
// Predicates are evaluated in double with a static error bound, then in
// double-double (FMA) when the bound is inconclusive, and finally ties are
// broken symbolically by a deterministic hash of the vertex ids, so exactly
// degenerate inputs still produce a consistent, reproducible triangulation.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "semsimp/types.hpp"

namespace semsimp {

namespace predicates {

// Sign of the orientation determinant, Shewchuk's convention: positive when
// d lies below the plane of (a,b,c) viewed so that (a,b,c) winds
// counterclockwise. Never returns 0: exact ties are broken by vertex id.
int orient3d(const Vec3* pts, int a, int b, int c, int d);

// Same determinant but reporting exact degeneracy as 0.
int orient3d_raw(const Vec3* pts, int a, int b, int c, int d);

// Sign test for e strictly inside the circumsphere of the positively
// oriented cell (a,b,c,d). Exact cosphericality is resolved by a consistent
// symbolic weight perturbation ordered by vertex id (the regular
// triangulation of infinitesimally weighted points), so degenerate inputs
// still triangulate coherently.
int insphere(const Vec3* pts, int a, int b, int c, int d, int e);

}  // namespace predicates

class TetMesh {
public:
    struct Cell {
        std::array<int, 4> v{-1, -1, -1, -1};
        // Neighbor sharing the facet opposite v[i]; -1 past the hull.
        std::array<int, 4> nbr{-1, -1, -1, -1};
        double mu_free = 0.0;
        double mu_matter = 0.0;
        bool inside = false;
    };

    const std::vector<Vec3>& vertices() const { return verts_; }
    const Vec3& pos(int v) const { return verts_[static_cast<size_t>(v)]; }
    std::vector<Cell>& cells() { return cells_; }
    const std::vector<Cell>& cells() const { return cells_; }

    int input_count() const { return n_input_; }
    bool is_big(int v) const { return v >= n_input_; }
    bool cell_is_finite(const Cell& c) const {
        return !is_big(c.v[0]) && !is_big(c.v[1]) && !is_big(c.v[2]) && !is_big(c.v[3]);
    }
    // Canonical vertex for an input point (differs only for exact duplicates).
    int vertex_for_point(int point_index) const {
        return point_vertex_[static_cast<size_t>(point_index)];
    }
    int incident_cell(int vertex) const { return vert_cell_[static_cast<size_t>(vertex)]; }

    int orient_sign(int a, int b, int c, int d) const {
        return predicates::orient3d(verts_.data(), a, b, c, d);
    }
    int insphere_sign(int a, int b, int c, int d, int e) const {
        return predicates::insphere(verts_.data(), a, b, c, d, e);
    }

    // Walks from `start_cell` to a cell containing `p` (given as vertex id).
    int locate_vertex(int vertex, int start_cell) const;

    size_t finite_cell_count() const;

private:
    friend TetMesh build_delaunay(const std::vector<Vec3>& points);

    std::vector<Vec3> verts_;
    std::vector<Cell> cells_;
    std::vector<int> point_vertex_;
    std::vector<int> vert_cell_;
    int n_input_ = 0;
};

// Requires at least 4 non-coplanar points.
TetMesh build_delaunay(const std::vector<Vec3>& points);

// Circumsphere of four points; used by the brute-force Delaunay check.
bool circumsphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, Vec3& center,
                  double& radius2);

}  // namespace semsimp

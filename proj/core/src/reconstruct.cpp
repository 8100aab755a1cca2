#include "semsimp/reconstruct.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <queue>
#include <set>

namespace semsimp {

double visibility_weight(double d, double sigma) {
    return 1.0 - std::exp(-(d * d) / (2.0 * sigma * sigma));
}

namespace {

using Cell = TetMesh::Cell;

constexpr int kFacetSign[4] = {-1, 1, -1, 1};

// Geometric facet normal of the facet opposite v[i], oriented away from the
// cell (consistent with the predicate convention).
Vec3 outward_facet_normal(const TetMesh& mesh, const Cell& cell, int i,
                          std::array<int, 3>& facet_out) {
    int k = 0;
    for (int j = 0; j < 4; ++j)
        if (j != i) facet_out[k++] = cell.v[j];
    const Vec3& f0 = mesh.pos(facet_out[0]);
    const Vec3 n = (mesh.pos(facet_out[1]) - f0).cross(mesh.pos(facet_out[2]) - f0);
    return kFacetSign[i] > 0 ? n : -n;
}

void collect_star(const TetMesh& mesh, int vertex, std::vector<int>& star) {
    star.clear();
    const int seed = mesh.incident_cell(vertex);
    if (seed < 0) return;
    star.push_back(seed);
    const auto& cells = mesh.cells();
    for (size_t cursor = 0; cursor < star.size(); ++cursor) {
        const Cell& cell = cells[static_cast<size_t>(star[cursor])];
        for (int i = 0; i < 4; ++i) {
            if (cell.v[i] == vertex) continue;  // that facet does not touch the star
            const int nb = cell.nbr[i];
            if (nb == -1 || std::find(star.begin(), star.end(), nb) != star.end()) continue;
            star.push_back(nb);
        }
    }
    std::sort(star.begin(), star.end());
}

// The star cell of `vertex` whose cone best contains the direction from the
// vertex toward `target`; deterministic, -1 only for an empty star.
int star_cell_toward(const TetMesh& mesh, int vertex, const Vec3& target) {
    std::vector<int> star;
    collect_star(mesh, vertex, star);
    if (star.empty()) return -1;
    const auto& cells = mesh.cells();
    const Vec3 dir = target - mesh.pos(vertex);

    int best = -1;
    double best_worst = -std::numeric_limits<double>::infinity();
    for (int cid : star) {
        const Cell& cell = cells[static_cast<size_t>(cid)];
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 4; ++i) {
            if (cell.v[i] == vertex) continue;  // only the three facets through the apex
            std::array<int, 3> f{};
            const Vec3 n = outward_facet_normal(mesh, cell, i, f);
            worst = std::min(worst, -(n.dot(dir)) / std::max(n.norm(), 1e-300));
        }
        if (worst > best_worst) {
            best_worst = worst;
            best = cid;
        }
    }
    return best;
}

// Marches the segment start + s * dir for s in [0,1] cell to cell, calling
// visit(cell, s_enter) for every traversed cell; s_enter of the start cell
// is 0. Stops at the hull or when the segment ends.
template <typename Visit>
void march_segment(const TetMesh& mesh, int start_cell, const Vec3& start, const Vec3& dir,
                   Visit&& visit) {
    const auto& cells = mesh.cells();
    int cur = start_cell;
    double s_cur = 0.0;
    const size_t cap = cells.size() + 16;
    for (size_t step = 0; step < cap; ++step) {
        visit(cur, s_cur);
        const Cell& cell = cells[static_cast<size_t>(cur)];
        int exit_facet = -1;
        double s_exit = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 4; ++i) {
            std::array<int, 3> f{};
            const Vec3 n = outward_facet_normal(mesh, cell, i, f);
            const double denom = n.dot(dir);
            if (!(denom > 0.0)) continue;  // facet not crossed in the exit direction
            const double s = n.dot(mesh.pos(f[0]) - start) / denom;
            if (s < s_cur - 1e-12) continue;
            if (s < s_exit) {
                s_exit = s;
                exit_facet = i;
            }
        }
        if (exit_facet < 0) return;      // numerical dead end; drop the remainder
        if (s_exit >= 1.0) return;       // segment ends inside this cell
        const int nb = cell.nbr[exit_facet];
        if (nb == -1) return;            // reached the hull
        cur = nb;
        s_cur = std::max(s_cur, s_exit);
    }
}

}  // namespace

void trace_ray(TetMesh& mesh, const VisibilityRay& ray, const ReconParams& params) {
    const int vertex = mesh.vertex_for_point(ray.point_index);
    const Vec3 p = mesh.pos(vertex);
    const Vec3 to_origin = ray.origin - p;
    const double len = to_origin.norm();
    if (!(len > 0.0)) return;

    auto& cells = mesh.cells();

    // Free-space phase, walked from the point back toward the camera so that
    // a cell's entry parameter is the distance from p to the facet where the
    // forward ray leaves it -- exactly the d of the weight rule. The cell
    // containing p gets weight 0, and hull clipping is implicit: the walk
    // stops at the boundary.
    const int star_free = star_cell_toward(mesh, vertex, ray.origin);
    if (star_free < 0) return;
    march_segment(mesh, star_free, p, to_origin, [&](int cell, double s_enter) {
        cells[static_cast<size_t>(cell)].mu_free +=
            visibility_weight(s_enter * len, params.sigma_free);
    });

    // Matter phase: extend behind the point; d is the distance from p to the
    // facet where the extension enters each cell.
    const double ext = kMatterExtensionFactor * params.sigma_matter;
    const Vec3 behind = p - to_origin * (ext / len);
    const int star_matter = star_cell_toward(mesh, vertex, behind);
    if (star_matter < 0) return;
    march_segment(mesh, star_matter, p, behind - p, [&](int cell, double s_enter) {
        cells[static_cast<size_t>(cell)].mu_matter +=
            visibility_weight(s_enter * ext, params.sigma_matter);
    });
}

RayStats accumulate_visibility(TetMesh& mesh, const LabeledCloud& cloud,
                               const CameraSet& cameras, const ReconParams& params) {
    if (!cloud.has_visibility())
        throw ValidationError("reconstruct: cloud has no visibility lists");
    RayStats stats;
    for (size_t i = 0; i < cloud.size(); ++i) {
        for (int cam_id : cloud.visibility[i]) {
            const Camera& cam = cameras.get(cam_id);
            trace_ray(mesh, VisibilityRay{cam.center(), static_cast<int>(i)}, params);
            ++stats.traced;
        }
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Manifold growing
// ---------------------------------------------------------------------------

namespace {

class Grower {
public:
    explicit Grower(TetMesh& mesh) : cells_(mesh.cells()) {
        inside_.assign(cells_.size(), 0);
        deferred_.assign(cells_.size(), 0);
        queued_.assign(cells_.size(), 0);
        visit_mark_.assign(cells_.size(), 0);
        local_index_.assign(cells_.size(), 0);
    }

    void run();
    const std::vector<uint8_t>& inside() const { return inside_; }

private:
    // A move adds one cell or a small cluster atomically: single-cell
    // greedy growing can pinch itself into configurations where remaining
    // free cells are only addable together.
    struct Move {
        std::vector<int> cells;  // sorted
        explicit Move(std::vector<int> ids) : cells(std::move(ids)) {
            std::sort(cells.begin(), cells.end());
        }
        bool contains(int c) const {
            return std::binary_search(cells.begin(), cells.end(), c);
        }
    };

    bool eligible(int c) const {
        const Cell& cell = cells_[static_cast<size_t>(c)];
        return cell.mu_free > cell.mu_matter;
    }
    bool is_inside(int c, const Move& move) const {
        return inside_[static_cast<size_t>(c)] != 0 || move.contains(c);
    }

    // Cells incident to `v`, reachable from `start` over facets containing
    // v; reuses the epoch-marked scratch buffers.
    void collect_star(int v, int start);
    bool edge_ok(int c0, int a, int b, const Move& move);
    bool vertex_ok(int v, int start_cell, const Move& move);
    bool manifold_preserving(const Move& move);

    std::vector<Cell>& cells_;
    std::vector<uint8_t> inside_;
    std::vector<uint8_t> deferred_;
    std::vector<uint8_t> queued_;

    // scratch
    uint32_t epoch_ = 0;
    std::vector<uint32_t> visit_mark_;
    std::vector<int> local_index_;
    std::vector<int> star_;
    std::vector<int> ring_;
    std::vector<int> arm_;
    std::vector<int> parent_;
};

void Grower::collect_star(int v, int start) {
    ++epoch_;
    star_.clear();
    star_.push_back(start);
    visit_mark_[static_cast<size_t>(start)] = epoch_;
    local_index_[static_cast<size_t>(start)] = 0;
    for (size_t cursor = 0; cursor < star_.size(); ++cursor) {
        const Cell& cell = cells_[static_cast<size_t>(star_[cursor])];
        for (int s = 0; s < 4; ++s) {
            if (cell.v[s] == v) continue;  // facet must contain v
            const int nb = cell.nbr[s];
            if (nb == -1 || visit_mark_[static_cast<size_t>(nb)] == epoch_) continue;
            visit_mark_[static_cast<size_t>(nb)] = epoch_;
            local_index_[static_cast<size_t>(nb)] = static_cast<int>(star_.size());
            star_.push_back(nb);
        }
    }
}

// Cells around the undirected edge (a,b), starting at c0. When the ring is
// interrupted by the hull it is reported open; a single virtual exterior
// cell closes it conceptually.
bool Grower::edge_ok(int c0, int a, int b, const Move& move) {
    auto side_slots = [&](int cell_id, int* slots) {
        const Cell& cell = cells_[static_cast<size_t>(cell_id)];
        int n = 0;
        for (int i = 0; i < 4; ++i)
            if (cell.v[i] != a && cell.v[i] != b) slots[n++] = i;
    };
    auto next_around = [&](int cur, int prev) -> int {
        int slots[2];
        side_slots(cur, slots);
        const Cell& cell = cells_[static_cast<size_t>(cur)];
        const int n0 = cell.nbr[slots[0]], n1 = cell.nbr[slots[1]];
        return n0 == prev ? n1 : n0;
    };

    ring_.clear();
    int slots[2];
    side_slots(c0, slots);
    const int dir0 = cells_[static_cast<size_t>(c0)].nbr[slots[0]];
    const int dir1 = cells_[static_cast<size_t>(c0)].nbr[slots[1]];

    bool open = false;
    ring_.push_back(c0);
    int prev = c0, cur = dir0;
    while (cur != -1 && cur != c0) {
        ring_.push_back(cur);
        const int nxt = next_around(cur, prev);
        prev = cur;
        cur = nxt;
    }
    if (cur != c0) {
        open = true;
        arm_.clear();
        prev = c0;
        cur = dir1;
        while (cur != -1) {
            arm_.push_back(cur);
            const int nxt = next_around(cur, prev);
            prev = cur;
            cur = nxt;
        }
        std::reverse(arm_.begin(), arm_.end());
        arm_.insert(arm_.end(), ring_.begin(), ring_.end());
        ring_.swap(arm_);
    }

    int transitions = 0;
    const size_t n = ring_.size();
    if (open) {
        // Virtual outside node closes the fan at both ends.
        bool prev_in = false;
        for (size_t i = 0; i < n; ++i) {
            const bool in = is_inside(ring_[i], move);
            if (in != prev_in) ++transitions;
            prev_in = in;
        }
        if (prev_in) ++transitions;
    } else {
        for (size_t i = 0; i < n; ++i) {
            const bool in = is_inside(ring_[i], move);
            const bool next_in = is_inside(ring_[(i + 1) % n], move);
            if (in != next_in) ++transitions;
        }
    }
    return transitions == 0 || transitions == 2;
}

// Manifold condition at a vertex: on the link sphere, the inside cells must
// form one face-connected cluster and the outside cells (with the hull
// exterior as one virtual cell) another, so the boundary there is a single
// fan.
bool Grower::vertex_ok(int v, int start_cell, const Move& move) {
    collect_star(v, start_cell);
    const size_t n = star_.size();
    parent_.resize(n + 1);
    for (size_t i = 0; i <= n; ++i) parent_[i] = static_cast<int>(i);
    auto find = [&](int x) {
        while (parent_[static_cast<size_t>(x)] != x) {
            parent_[static_cast<size_t>(x)] =
                parent_[static_cast<size_t>(parent_[static_cast<size_t>(x)])];
            x = parent_[static_cast<size_t>(x)];
        }
        return x;
    };
    auto unite = [&](int x, int y) { parent_[static_cast<size_t>(find(x))] = find(y); };
    const int virtual_node = static_cast<int>(n);

    bool hull_at_v = false;
    for (size_t i = 0; i < n; ++i) {
        const int cid = star_[i];
        const bool in = is_inside(cid, move);
        const Cell& cell = cells_[static_cast<size_t>(cid)];
        for (int s = 0; s < 4; ++s) {
            if (cell.v[s] == v) continue;  // link adjacency needs the facet to contain v
            const int nb = cell.nbr[s];
            if (nb == -1) {
                // The hull exterior caps the link with one virtual cell; it
                // exists only for hull vertices and is always outside.
                hull_at_v = true;
                if (!in) unite(static_cast<int>(i), virtual_node);
                continue;
            }
            if (is_inside(nb, move) != in) continue;
            unite(static_cast<int>(i), local_index_[static_cast<size_t>(nb)]);
        }
    }

    int inside_root = -1, outside_root = -1;
    for (size_t i = 0; i < n; ++i) {
        const int root = find(static_cast<int>(i));
        if (is_inside(star_[i], move)) {
            if (inside_root == -1) inside_root = root;
            else if (inside_root != root) return false;
        } else {
            if (outside_root == -1) outside_root = root;
            else if (outside_root != root) return false;
        }
    }
    if (hull_at_v) {
        const int root = find(virtual_node);
        if (outside_root != -1 && outside_root != root) return false;
    }
    return true;
}

bool Grower::manifold_preserving(const Move& move) {
    for (const int cand : move.cells) {
        const Cell& cell = cells_[static_cast<size_t>(cand)];
        for (int i = 0; i < 4; ++i)
            if (!vertex_ok(cell.v[i], cand, move)) return false;
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                if (!edge_ok(cand, cell.v[i], cell.v[j], move)) return false;
    }
    return true;
}

void Grower::run() {
    int seed = -1;
    for (size_t i = 0; i < cells_.size(); ++i) {
        if (!(cells_[i].mu_free > cells_[i].mu_matter)) continue;
        if (seed < 0 || cells_[i].mu_free > cells_[static_cast<size_t>(seed)].mu_free)
            seed = static_cast<int>(i);
    }
    if (seed < 0) {
        std::fprintf(stderr,
                     "semsimp: warning: no tetrahedron has mu_free > mu_matter; "
                     "returning an empty surface\n");
        return;
    }

    struct Order {
        bool operator()(const std::pair<double, int>& a, const std::pair<double, int>& b) const {
            return a.first < b.first || (a.first == b.first && a.second > b.second);
        }
    };
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, Order> queue;
    auto push = [&](int c) {
        if (queued_[static_cast<size_t>(c)] || inside_[static_cast<size_t>(c)] || !eligible(c))
            return;
        queued_[static_cast<size_t>(c)] = 1;
        queue.push({cells_[static_cast<size_t>(c)].mu_free, c});
    };
    // A rejected candidate is re-queued only when an acceptance touches its
    // neighborhood; anything else cannot change its manifold test.
    auto accept = [&](int c) {
        inside_[static_cast<size_t>(c)] = 1;
        deferred_[static_cast<size_t>(c)] = 0;
        const Cell& cell = cells_[static_cast<size_t>(c)];
        for (int i = 0; i < 4; ++i)
            if (cell.nbr[i] != -1) push(cell.nbr[i]);
        for (int v : cell.v) {
            collect_star(v, c);
            for (int sc : star_)
                if (deferred_[static_cast<size_t>(sc)]) {
                    deferred_[static_cast<size_t>(sc)] = 0;
                    push(sc);
                }
        }
    };
    auto drain = [&]() {
        while (!queue.empty()) {
            const int c = queue.top().second;
            queue.pop();
            queued_[static_cast<size_t>(c)] = 0;
            if (inside_[static_cast<size_t>(c)]) continue;
            if (!manifold_preserving(Move({c}))) {
                deferred_[static_cast<size_t>(c)] = 1;
                continue;
            }
            accept(c);
#ifndef NDEBUG
            assert(manifold_preserving(Move({c})));
#endif
        }
    };
    // Free cells the growing reached but could not add: they touch the
    // region. Eligible cells in detached free-space islands are not locks;
    // the growing collects nearby cells only.
    auto locked_cells = [&]() {
        std::vector<int> locked;
        for (size_t i = 0; i < cells_.size(); ++i) {
            if (inside_[i] || !eligible(static_cast<int>(i))) continue;
            const Cell& cell = cells_[i];
            bool touches = false;
            for (int s = 0; s < 4 && !touches; ++s)
                touches = cell.nbr[s] != -1 && inside_[static_cast<size_t>(cell.nbr[s])];
            if (touches) locked.push_back(static_cast<int>(i));
        }
        return locked;
    };

    push(seed);
    drain();

    // Cluster escapes: the greedy order can pinch the region around free
    // cells so that no single move stays manifold, but mutually pinched
    // cells usually admit one joint move. Locked cells are grouped into
    // vertex-sharing clusters; each cluster is tried whole, then its pairs.
    // Deterministic order, repeated until stable.
    for (int escape_round = 0; escape_round < 16; ++escape_round) {
        bool changed = false;
        const std::vector<int> locked = locked_cells();
        if (locked.empty()) break;

        std::map<int, std::vector<int>> by_vertex;
        for (int c : locked)
            for (int v : cells_[static_cast<size_t>(c)].v) by_vertex[v].push_back(c);
        std::map<int, int> parent;
        for (int c : locked) parent[c] = c;
        std::function<int(int)> find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (const auto& [v, group] : by_vertex)
            for (size_t i = 1; i < group.size(); ++i)
                parent[find(group[0])] = find(group[i]);
        std::map<int, std::vector<int>> clusters;
        for (int c : locked) clusters[find(c)].push_back(c);

        for (auto& [root, cluster] : clusters) {
            std::sort(cluster.begin(), cluster.end());
            if (cluster.size() > 1 && cluster.size() <= 12 &&
                manifold_preserving(Move(cluster))) {
                for (int c : cluster) accept(c);
                drain();
                changed = true;
            }
        }
        // Pairs within one vertex group: mutual pinches are local.
        for (const auto& [v, group] : by_vertex) {
            for (size_t i = 0; i < group.size(); ++i) {
                for (size_t j = i + 1; j < group.size(); ++j) {
                    if (inside_[static_cast<size_t>(group[i])] ||
                        inside_[static_cast<size_t>(group[j])])
                        continue;
                    if (!manifold_preserving(Move({group[i], group[j]}))) continue;
                    accept(group[i]);
                    accept(group[j]);
                    drain();
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
}

}  // namespace

TriMesh extract_manifold(TetMesh& mesh) {
    Grower grower(mesh);
    grower.run();
    const auto& inside = grower.inside();
    auto& cells = mesh.cells();
    for (size_t i = 0; i < cells.size(); ++i) cells[i].inside = inside[i] != 0;

    // Two surfaces fall out of the grown region: the full region boundary,
    // which the growing keeps 2-manifold and which is verified here, and the
    // returned model, which drops every facet touching a bounding-box
    // vertex. The box is triangulation plumbing; only real points carry
    // reconstructed geometry.
    TriMesh full;
    TriMesh out;
    std::vector<int> vmap_full(mesh.vertices().size(), -1);
    std::vector<int> vmap_out(mesh.vertices().size(), -1);
    auto map_vertex = [&](TriMesh& target, std::vector<int>& vmap, int v) {
        int& m = vmap[static_cast<size_t>(v)];
        if (m < 0) {
            m = static_cast<int>(target.vertices.size());
            target.vertices.push_back(mesh.pos(v));
        }
        return m;
    };

    for (size_t ci = 0; ci < cells.size(); ++ci) {
        if (!cells[ci].inside) continue;
        const Cell& cell = cells[ci];
        for (int i = 0; i < 4; ++i) {
            const int nb = cell.nbr[i];
            if (nb != -1 && cells[static_cast<size_t>(nb)].inside) continue;
            std::array<int, 3> f{};
            int k = 0;
            for (int j = 0; j < 4; ++j)
                if (j != i) f[k++] = cell.v[j];
            if (kFacetSign[i] < 0) std::swap(f[1], f[2]);
            full.triangles.push_back({map_vertex(full, vmap_full, f[0]),
                                      map_vertex(full, vmap_full, f[1]),
                                      map_vertex(full, vmap_full, f[2])});
            if (mesh.is_big(f[0]) || mesh.is_big(f[1]) || mesh.is_big(f[2])) continue;
            out.triangles.push_back({map_vertex(out, vmap_out, f[0]),
                                     map_vertex(out, vmap_out, f[1]),
                                     map_vertex(out, vmap_out, f[2])});
        }
    }

    if (!full.triangles.empty()) {
        const SurfaceCheck check = check_surface(full);
        if (!check.manifold())
            throw std::logic_error("extract_manifold: grown boundary is not a 2-manifold");
    }
    return out;
}

SurfaceCheck check_surface(const TriMesh& mesh) {
    SurfaceCheck out;
    out.triangle_count = mesh.triangles.size();
    out.vertex_count = mesh.vertices.size();

    std::map<std::pair<int, int>, int> undirected;
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = t[static_cast<size_t>(e)], b = t[static_cast<size_t>((e + 1) % 3)];
            ++undirected[{std::min(a, b), std::max(a, b)}];
            ++directed[{a, b}];
        }
    }
    out.edge_count = undirected.size();
    out.watertight = true;
    for (const auto& [edge, count] : undirected) {
        (void)edge;
        if (count != 2) { out.watertight = false; break; }
    }
    out.oriented = true;
    for (const auto& [edge, count] : directed) {
        (void)edge;
        if (count != 1) { out.oriented = false; break; }
    }

    // Triangles around each vertex must chain into one closed cycle.
    std::map<int, std::vector<std::pair<int, int>>> around;
    for (const auto& t : mesh.triangles) {
        around[t[0]].push_back({t[1], t[2]});
        around[t[1]].push_back({t[2], t[0]});
        around[t[2]].push_back({t[0], t[1]});
    }
    out.vertex_fans = true;
    for (const auto& [v, wedges] : around) {
        (void)v;
        std::map<int, int> succ;
        bool dup = false;
        for (const auto& [a, b] : wedges) dup |= !succ.emplace(a, b).second;
        if (dup) { out.vertex_fans = false; break; }
        const int start = wedges.front().first;
        int cur = start;
        size_t steps = 0;
        do {
            auto it = succ.find(cur);
            if (it == succ.end()) break;
            cur = it->second;
            ++steps;
        } while (cur != start && steps <= wedges.size());
        if (cur != start || steps != wedges.size()) { out.vertex_fans = false; break; }
    }
    return out;
}

TriMesh reconstruct_mesh(const LabeledCloud& cloud, const CameraSet& cameras,
                         const ReconParams& params) {
    TetMesh mesh = build_delaunay(cloud.points);
    accumulate_visibility(mesh, cloud, cameras, params);
    return extract_manifold(mesh);
}

}  // namespace semsimp

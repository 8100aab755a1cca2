#include "semsimp/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace semsimp {

namespace {
constexpr int kLeafSize = 16;
constexpr double kDegenerateArea = 1e-12;

double dist2(const Vec3& a, const Vec3& b) { return (a - b).norm2(); }
}  // namespace

SpatialIndex::SpatialIndex(const LabeledCloud& cloud) : cloud_(&cloud), points_(cloud.points) {
    if (points_.empty()) throw ValidationError("spatial index: cloud is empty");
    order_.resize(points_.size());
    for (size_t i = 0; i < points_.size(); ++i) order_[i] = static_cast<int>(i);
    Aabb box;
    for (const Vec3& p : points_) box.expand(p);
    nodes_.reserve(2 * points_.size() / kLeafSize + 8);
    root_ = build(0, static_cast<int>(points_.size()), box);
}

int SpatialIndex::build(int begin, int end, const Aabb& box) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= kLeafSize) {
        // Leaf points stay id-sorted so scans tie-break deterministically.
        std::sort(order_.begin() + begin, order_.begin() + end);
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    const Vec3 ext = box.extent();
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double va = points_[a][axis], vb = points_[b][axis];
                         return va < vb || (va == vb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    Aabb lbox = box, rbox = box;
    switch (axis) {
        case 0: lbox.hi.x = split; rbox.lo.x = split; break;
        case 1: lbox.hi.y = split; rbox.lo.y = split; break;
        default: lbox.hi.z = split; rbox.lo.z = split; break;
    }
    const int left = build(begin, mid, lbox);
    const int right = build(mid, end, rbox);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

// Depth-first traversal pruned by an axis-distance bound. `visit` sees every
// candidate id and returns the current pruning radius (squared); returning
// infinity disables pruning.
template <typename Visitor>
void SpatialIndex::walk(const Vec3& q, double max_dist2, Visitor&& visit) const {
    struct Frame { int node; double axis_dist2; };
    std::vector<Frame> stack;
    stack.push_back({root_, 0.0});
    double bound = max_dist2;
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        if (f.axis_dist2 > bound) continue;
        const Node& n = nodes_[f.node];
        if (n.axis < 0) {
            for (int i = n.begin; i < n.end; ++i) bound = visit(order_[i]);
            continue;
        }
        const double delta = q[n.axis] - n.split;
        const int near = delta < 0.0 ? n.left : n.right;
        const int far = delta < 0.0 ? n.right : n.left;
        // Push far first so the near side is explored first.
        stack.push_back({far, delta * delta});
        stack.push_back({near, f.axis_dist2});
    }
}

std::vector<int> SpatialIndex::knn(const Vec3& query, int k) const {
    if (k <= 0) return {};
    k = std::min<int>(k, static_cast<int>(points_.size()));
    // (dist2, id) max-heap of the best k; pruning keeps equality so id
    // tie-breaks stay exact against the brute-force scan.
    using Entry = std::pair<double, int>;
    std::vector<Entry> heap;
    heap.reserve(static_cast<size_t>(k) + 1);
    const double inf = std::numeric_limits<double>::infinity();
    walk(query, inf, [&](int id) {
        const Entry e{dist2(points_[id], query), id};
        if (static_cast<int>(heap.size()) < k) {
            heap.push_back(e);
            std::push_heap(heap.begin(), heap.end());
        } else if (e < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = e;
            std::push_heap(heap.begin(), heap.end());
        }
        return static_cast<int>(heap.size()) < k ? inf : heap.front().first;
    });
    std::sort(heap.begin(), heap.end());
    std::vector<int> out;
    out.reserve(heap.size());
    for (const Entry& e : heap) out.push_back(e.second);
    return out;
}

std::vector<int> SpatialIndex::radius_search(const Vec3& query, double radius) const {
    const double r2 = radius * radius;
    std::vector<std::pair<double, int>> found;
    walk(query, r2, [&](int id) {
        const double d2 = dist2(points_[id], query);
        if (d2 <= r2) found.emplace_back(d2, id);
        return r2;
    });
    std::sort(found.begin(), found.end());
    std::vector<int> out;
    out.reserve(found.size());
    for (const auto& e : found) out.push_back(e.second);
    return out;
}

Region extract_region(const SpatialIndex& index, int center_index, const RegionSpec& spec) {
    spec.validate();
    const LabeledCloud& cloud = index.cloud();
    if (center_index < 0 || static_cast<size_t>(center_index) >= cloud.size())
        throw ValidationError("extract_region: center index out of range");

    Region region;
    region.center_index = center_index;
    const Vec3& center = cloud.points[static_cast<size_t>(center_index)];

    if (spec.mode == RegionSpec::Mode::radius) {
        region.member_indices = index.radius_search(center, spec.radius);
        region.area = std::numbers::pi * spec.radius * spec.radius;
    } else {
        region.member_indices = index.knn(center, spec.k);
        if (static_cast<int>(region.member_indices.size()) < spec.k) region.degenerate = true;
        // Largest face of the members' axis-aligned bounding box.
        Aabb box;
        for (int id : region.member_indices) box.expand(cloud.points[static_cast<size_t>(id)]);
        const Vec3 e = box.extent();
        region.area = std::max({e.x * e.y, e.x * e.z, e.y * e.z});
    }

    if (region.member_indices.size() < 3 || !(region.area > kDegenerateArea))
        region.degenerate = true;
    if (!region.degenerate)
        region.density = static_cast<double>(region.member_indices.size()) / region.area;

    if (cloud.has_labels() && !region.member_indices.empty()) {
        const uint8_t center_label = cloud.labels[static_cast<size_t>(center_index)];
        size_t other = 0;
        for (int id : region.member_indices)
            if (cloud.labels[static_cast<size_t>(id)] != center_label) ++other;
        region.other_class_fraction =
            static_cast<double>(other) / static_cast<double>(region.member_indices.size());
    }
    return region;
}

ClassStats class_stats(const SpatialIndex& index, const RegionSpec& spec, uint8_t label) {
    const LabeledCloud& cloud = index.cloud();
    if (!cloud.has_labels()) throw ValidationError("class_stats: cloud has no labels");
    std::vector<Region> regions;
    for (size_t i = 0; i < cloud.size(); ++i) {
        if (cloud.labels[i] != label) continue;
        regions.push_back(extract_region(index, static_cast<int>(i), spec));
    }
    return class_stats_from_regions(regions, label);
}

ClassStats class_stats_from_regions(const std::vector<Region>& regions, uint8_t label) {
    double sum = 0.0;
    int count = 0;
    for (const Region& r : regions) {
        if (r.degenerate) continue;
        sum += r.density;
        ++count;
    }
    if (count == 0) throw std::runtime_error("class has no measurable density");
    return ClassStats{label, sum / count, count};
}

}  // namespace semsimp

// Exact kd-tree queries plus the region statistics the decimators consume:
// region density, area (search-circle or bounding-box face), class-mix
// fraction and per-class average density.
#pragma once

#include <vector>

#include "semsimp/types.hpp"

namespace semsimp {

struct RegionSpec {
    enum class Mode { knn, radius };
    Mode mode = Mode::radius;
    int k = 0;            // knn mode, >= 3
    double radius = 0.0;  // radius mode, > 0 meters

    static RegionSpec Knn(int k) {
        RegionSpec s; s.mode = Mode::knn; s.k = k; return s;
    }
    static RegionSpec Radius(double r) {
        RegionSpec s; s.mode = Mode::radius; s.radius = r; return s;
    }
    void validate() const {
        if (mode == Mode::knn && k < 3) throw ValidationError("region spec: knn needs k >= 3");
        if (mode == Mode::radius && !(radius > 0.0))
            throw ValidationError("region spec: radius must be positive");
    }
};

// A point neighborhood. Members are ordered by (distance, point id) and
// include the center. Degenerate regions (fewer than 3 members, vanishing
// area, or a short KNN cloud) carry no usable density and are skipped by the
// simplifiers; their points stay.
struct Region {
    int center_index = -1;
    std::vector<int> member_indices;
    double density = 0.0;               // points per m^2
    double area = 0.0;                  // m^2
    double other_class_fraction = 0.0;  // share of members labeled unlike the center
    bool degenerate = false;

    size_t member_count() const { return member_indices.size(); }
};

struct ClassStats {
    uint8_t label = 0;
    double avg_density = 0.0;  // mean density over the class's non-degenerate regions
    int region_count = 0;
};

class SpatialIndex {
public:
    explicit SpatialIndex(const LabeledCloud& cloud);

    // Both queries return point ids ordered by (squared distance, id)
    // ascending and match a brute-force scan exactly.
    std::vector<int> knn(const Vec3& query, int k) const;
    std::vector<int> radius_search(const Vec3& query, double radius) const;

    const LabeledCloud& cloud() const { return *cloud_; }
    size_t size() const { return points_.size(); }

private:
    struct Node {
        int axis = -1;          // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into order_
    };

    int build(int begin, int end, const Aabb& box);
    template <typename Visitor>
    void walk(const Vec3& q, double max_dist2, Visitor&& visit) const;

    const LabeledCloud* cloud_;
    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

Region extract_region(const SpatialIndex& index, int center_index, const RegionSpec& spec);

// Average density over regions centered at every point of the label.
ClassStats class_stats(const SpatialIndex& index, const RegionSpec& spec, uint8_t label);

// Same statistic over a caller-supplied region list (the probabilistic
// decimator samples its regions instead of visiting every point).
ClassStats class_stats_from_regions(const std::vector<Region>& regions, uint8_t label);

}  // namespace semsimp

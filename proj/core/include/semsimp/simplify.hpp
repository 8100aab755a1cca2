// Class-aware point cloud decimation. Four strategies share one interface:
// rank-and-drop with a linear (LS), adaptive (AS) or class-adaptive (ACS)
// conservation factor, and a probabilistic variant (PS) that samples regions
// and keeps points by drawing against a conservation probability.
#pragma once

#include <cstdint>
#include <vector>

#include "semsimp/geometry_fit.hpp"
#include "semsimp/spatial_index.hpp"
#include "semsimp/types.hpp"

namespace semsimp {

enum class Method { LS, AS, ACS, PS };

const char* method_name(Method m);
bool parse_method(const std::string& name, Method& out);

// Probabilistic sampling: one region per this many class points.
inline constexpr int kProbRegionDivisor = 8;
// Class-mix fraction at which a region counts as boundary-adjacent and the
// boundary-distance probability takes over from the interior one.
inline constexpr double kBoundaryMixThreshold = 0.1;

struct SimplifyConfig {
    Method method = Method::LS;
    RegionSpec region = RegionSpec::Radius(1.0);
    double target_conservation = 0.4;  // conservation factor at average density
    double stretching = 1.0;           // sigmoid stretch (AS/ACS)
    double sigma = 0.0;                // PS kernel std-dev; <= 0 means radius/2
    uint64_t seed = 42;                // drives plane RANSAC and PS draws
    std::vector<uint8_t> simplifiable_labels;
    RansacParams ransac;               // seed field is derived from `seed`
    // Experimentation switch: evaluates the adaptive sigmoid at (tau - D)
    // instead of (D - tau) so denser regions get lower conservation. Off by
    // default; the published formula is used verbatim.
    bool negate_density_axis = false;

    void validate() const;
    double effective_sigma() const;
};

// Per-region trace of the quantities the decision used; diagnostics only.
struct RegionRecord {
    int center = -1;
    double density = 0.0;
    double avg_density = 0.0;
    double mix_fraction = 0.0;
    double conservation = 0.0;   // c for ranked methods, unused for PS
    bool used_boundary = false;  // PS: boundary branch taken
    bool degenerate = false;
    int member_count = 0;
    int same_class_count = 0;
    int discarded = 0;
};

struct ClassCount {
    uint8_t label = 0;
    size_t before = 0;
    size_t after = 0;
};

struct DecimationResult {
    std::vector<uint8_t> keep;  // one flag per point
    std::vector<ClassCount> class_counts;
    std::vector<RegionRecord> regions;

    size_t kept() const {
        size_t n = 0;
        for (uint8_t k : keep) n += k;
        return n;
    }
};

// --- Conservation factor formulas -----------------------------------------

// Linear rule, clamped into [0, 1].
double conservation_linear(double density, double avg_density, double target);

// Shifted, bounded sigmoid: f(x) = 0.5 + w x / (2 (1 + w |x|)).
double sigmoid_f(double x, double stretch);

// tau such that f(avg_density - tau) == target.
double calibrate_tau(double avg_density, double target, double stretch);

double conservation_adaptive(double density, double avg_density, double target, double stretch);

// Adaptive factor boosted by the other-class fraction, saturated at 1.
double conservation_adaptive_class(double density, double avg_density, double target,
                                   double stretch, double mix_fraction);

// Conservation probability of an interior point: low near the region center
// of a flat area, approaching 1 far from it. density_ratio = D / Dbar scales
// the kernel width.
double prob_interior(const Vec2& p, const Vec2& center, double density, double avg_density,
                     double sigma);

// Conservation probability near a class boundary: 1 on the boundary line,
// decaying with distance.
double prob_boundary(double distance_to_boundary, double sigma);

// --- Decimators -------------------------------------------------------------

// LS/AS/ACS: deterministic rank-and-drop per region over the original cloud.
DecimationResult decimate_ranked(const SpatialIndex& index, const NormalField& normals,
                                 const std::vector<ClassPlane>& planes,
                                 const SimplifyConfig& config);

// PS: seeded sampling of regions and per-member conservation draws.
DecimationResult decimate_probabilistic(const SpatialIndex& index,
                                        const std::vector<ClassPlane>& planes,
                                        const SimplifyConfig& config);

// Full strategy run: fits class planes (and normals for the ranked methods)
// and dispatches on config.method. The palette supplies the simplifiable
// label set unless the config overrides it.
DecimationResult simplify_cloud(const LabeledCloud& cloud, const Palette& palette,
                                const SimplifyConfig& config);

}  // namespace semsimp

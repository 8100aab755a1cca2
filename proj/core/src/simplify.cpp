#include "semsimp/simplify.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "semsimp/rng.hpp"

namespace semsimp {

const char* method_name(Method m) {
    switch (m) {
        case Method::LS: return "ls";
        case Method::AS: return "as";
        case Method::ACS: return "acs";
        case Method::PS: return "ps";
    }
    return "?";
}

bool parse_method(const std::string& name, Method& out) {
    if (name == "ls") out = Method::LS;
    else if (name == "as") out = Method::AS;
    else if (name == "acs") out = Method::ACS;
    else if (name == "ps") out = Method::PS;
    else return false;
    return true;
}

void SimplifyConfig::validate() const {
    region.validate();
    if (!(target_conservation > 0.0) || !(target_conservation < 1.0))
        throw ValidationError("simplify: target conservation factor must lie in (0,1)");
    if (!(stretching > 0.0)) throw ValidationError("simplify: stretching factor must be positive");
    if (method == Method::PS && region.mode == RegionSpec::Mode::knn && !(sigma > 0.0))
        throw ValidationError(
            "simplify: probabilistic method with knn regions needs an explicit --sigma");
}

double SimplifyConfig::effective_sigma() const {
    if (sigma > 0.0) return sigma;
    return region.radius * 0.5;
}

// --- Formulas ---------------------------------------------------------------

double conservation_linear(double density, double avg_density, double target) {
    if (!(avg_density > 0.0))
        throw std::invalid_argument("conservation_linear: average density must be positive");
    const double raw = -(avg_density / target) * (density - avg_density) + target;
    return std::clamp(raw, 0.0, 1.0);
}

double sigmoid_f(double x, double stretch) {
    return 0.5 + (stretch * x) / (2.0 * (1.0 + stretch * std::fabs(x)));
}

double calibrate_tau(double avg_density, double target, double stretch) {
    if (!(target > 0.0) || !(target < 1.0))
        throw std::invalid_argument("calibrate_tau: target must lie strictly inside (0,1)");
    const double s = 2.0 * target - 1.0;
    const double f_inv = s / (stretch * (1.0 - std::fabs(s)));
    return avg_density - f_inv;
}

double conservation_adaptive(double density, double avg_density, double target, double stretch) {
    const double tau = calibrate_tau(avg_density, target, stretch);
    return sigmoid_f(density - tau, stretch);
}

double conservation_adaptive_class(double density, double avg_density, double target,
                                   double stretch, double mix_fraction) {
    const double base = conservation_adaptive(density, avg_density, target, stretch);
    return std::min(1.0, (1.0 + mix_fraction) * base);
}

double prob_interior(const Vec2& p, const Vec2& center, double density, double avg_density,
                     double sigma) {
    const double ratio = density / avg_density;
    if (!(ratio > 0.0)) throw std::invalid_argument("prob_interior: non-positive density ratio");
    const double d2 = (p - center).norm2();
    return 1.0 - std::exp(-d2 / (2.0 * ratio * sigma * sigma));
}

double prob_boundary(double distance_to_boundary, double sigma) {
    return std::exp(-(distance_to_boundary * distance_to_boundary) / (2.0 * sigma * sigma));
}

// --- Shared helpers ---------------------------------------------------------

namespace {

std::vector<ClassCount> count_classes(const LabeledCloud& cloud,
                                      const std::vector<uint8_t>& keep) {
    std::map<uint8_t, ClassCount> counts;
    for (size_t i = 0; i < cloud.size(); ++i) {
        ClassCount& c = counts[cloud.labels[i]];
        c.label = cloud.labels[i];
        ++c.before;
        if (keep[i]) ++c.after;
    }
    std::vector<ClassCount> out;
    out.reserve(counts.size());
    for (const auto& [id, c] : counts) out.push_back(c);
    return out;
}

const ClassPlane* find_plane(const std::vector<ClassPlane>& planes, uint8_t label) {
    for (const ClassPlane& p : planes)
        if (p.label == label) return &p;
    return nullptr;
}

std::vector<int> class_point_ids(const LabeledCloud& cloud, uint8_t label) {
    std::vector<int> ids;
    for (size_t i = 0; i < cloud.size(); ++i)
        if (cloud.labels[i] == label) ids.push_back(static_cast<int>(i));
    return ids;
}

// The negate_density_axis switch evaluates the sigmoid at (tau - D) instead
// of (D - tau), so denser regions get lower conservation; the linear rule is
// unaffected.
double adaptive_term(const SimplifyConfig& config, double density, double avg_density) {
    const double tau =
        calibrate_tau(avg_density, config.target_conservation, config.stretching);
    const double x = config.negate_density_axis ? tau - density : density - tau;
    return sigmoid_f(x, config.stretching);
}

double conservation_for(const SimplifyConfig& config, double density, double avg_density,
                        double mix_fraction) {
    switch (config.method) {
        case Method::LS:
            return conservation_linear(density, avg_density, config.target_conservation);
        case Method::AS:
            return adaptive_term(config, density, avg_density);
        case Method::ACS:
            return std::min(1.0, (1.0 + mix_fraction) * adaptive_term(config, density, avg_density));
        case Method::PS:
            break;
    }
    throw std::logic_error("conservation_for: not a ranked method");
}

}  // namespace

// --- Ranked decimation (LS / AS / ACS) --------------------------------------

DecimationResult decimate_ranked(const SpatialIndex& index, const NormalField& normals,
                                 const std::vector<ClassPlane>& planes,
                                 const SimplifyConfig& config) {
    config.validate();
    const LabeledCloud& cloud = index.cloud();
    if (!cloud.has_labels()) throw ValidationError("simplify: cloud has no labels");

    DecimationResult result;
    result.keep.assign(cloud.size(), 1);

    for (uint8_t label : config.simplifiable_labels) {
        const ClassPlane* plane = find_plane(planes, label);
        if (!plane) throw ValidationError("simplify: no fitted plane for class " +
                                          std::to_string(int(label)));
        const std::vector<int> centers = class_point_ids(cloud, label);
        if (centers.empty()) continue;

        // Regions and densities always come from the original cloud.
        std::vector<Region> regions;
        regions.reserve(centers.size());
        for (int c : centers) regions.push_back(extract_region(index, c, config.region));
        const ClassStats stats = class_stats_from_regions(regions, label);

        std::vector<std::pair<double, int>> ranked;  // (score, id)
        for (const Region& region : regions) {
            RegionRecord rec;
            rec.center = region.center_index;
            rec.degenerate = region.degenerate;
            rec.member_count = static_cast<int>(region.member_count());
            if (region.degenerate) {
                result.regions.push_back(rec);
                continue;
            }
            rec.density = region.density;
            rec.avg_density = stats.avg_density;
            rec.mix_fraction = region.other_class_fraction;
            const double c = conservation_for(config, region.density, stats.avg_density,
                                              region.other_class_fraction);
            rec.conservation = c;

            ranked.clear();
            int same_class = 0;
            for (int id : region.member_indices) {
                if (cloud.labels[static_cast<size_t>(id)] != label) continue;
                ++same_class;
                if (!normals.valid[static_cast<size_t>(id)]) continue;  // exempt, always kept
                const Vec3 n =
                    orient_normal(normals.normals[static_cast<size_t>(id)], plane->normal);
                ranked.emplace_back(ranking_score(n, plane->normal), id);
            }
            rec.same_class_count = same_class;
            std::sort(ranked.begin(), ranked.end());
            const auto drop =
                static_cast<size_t>(std::floor((1.0 - c) * static_cast<double>(same_class)));
            const size_t start = ranked.size() > drop ? ranked.size() - drop : 0;
            for (size_t k = start; k < ranked.size(); ++k)
                result.keep[static_cast<size_t>(ranked[k].second)] = 0;
            rec.discarded = static_cast<int>(ranked.size() - start);
            result.regions.push_back(rec);
        }
    }
    result.class_counts = count_classes(cloud, result.keep);
    return result;
}

// --- Probabilistic decimation (PS) -------------------------------------------

DecimationResult decimate_probabilistic(const SpatialIndex& index,
                                        const std::vector<ClassPlane>& planes,
                                        const SimplifyConfig& config) {
    config.validate();
    const LabeledCloud& cloud = index.cloud();
    if (!cloud.has_labels()) throw ValidationError("simplify: cloud has no labels");

    DecimationResult result;
    result.keep.assign(cloud.size(), 1);
    const double sigma = config.effective_sigma();

    for (uint8_t label : config.simplifiable_labels) {
        const ClassPlane* plane = find_plane(planes, label);
        if (!plane) throw ValidationError("simplify: no fitted plane for class " +
                                          std::to_string(int(label)));
        const std::vector<int> class_ids = class_point_ids(cloud, label);
        const int n_regions = static_cast<int>(class_ids.size()) / kProbRegionDivisor;
        if (n_regions <= 0) continue;

        Rng sampler(mix_seed(config.seed, 0x50530000u + label));  // region sampling
        Rng draws(mix_seed(config.seed, 0x44520000u + label));    // per-member keep draws

        const std::vector<int> picks =
            sampler.sample_without_replacement(static_cast<int>(class_ids.size()), n_regions);

        std::vector<Region> regions;
        regions.reserve(picks.size());
        for (int pick : picks)
            regions.push_back(extract_region(index, class_ids[static_cast<size_t>(pick)],
                                             config.region));
        const ClassStats stats = class_stats_from_regions(regions, label);

        for (const Region& region : regions) {
            RegionRecord rec;
            rec.center = region.center_index;
            rec.degenerate = region.degenerate;
            rec.member_count = static_cast<int>(region.member_count());
            if (region.degenerate) {
                result.regions.push_back(rec);
                continue;
            }
            rec.density = region.density;
            rec.avg_density = stats.avg_density;
            rec.mix_fraction = region.other_class_fraction;
            const double ratio = region.density / stats.avg_density;
            if (!(ratio > 0.0)) {
                rec.degenerate = true;
                result.regions.push_back(rec);
                continue;
            }

            std::vector<int> same_class;
            for (int id : region.member_indices)
                if (cloud.labels[static_cast<size_t>(id)] == label) same_class.push_back(id);
            std::sort(same_class.begin(), same_class.end());
            rec.same_class_count = static_cast<int>(same_class.size());

            // Boundary branch when the mix fraction reaches the threshold and
            // a separator is actually fittable; interior kernel otherwise.
            bool boundary = region.other_class_fraction >= kBoundaryMixThreshold;
            Separator2D sep;
            if (boundary) {
                std::vector<Vec2> pts2d;
                std::vector<int8_t> side;
                pts2d.reserve(region.member_count());
                side.reserve(region.member_count());
                for (int id : region.member_indices) {
                    pts2d.push_back(project_to_plane(cloud.points[static_cast<size_t>(id)],
                                                     *plane));
                    side.push_back(cloud.labels[static_cast<size_t>(id)] == label ? 1 : -1);
                }
                try {
                    SeparatorConfig sep_config;
                    sep_config.seed = mix_seed(config.seed, 0x53560000u + region.center_index);
                    sep = fit_separator(pts2d, side, sep_config);
                } catch (const std::runtime_error&) {
                    boundary = false;
                }
            }
            rec.used_boundary = boundary;

            const Vec2 center2d =
                project_to_plane(cloud.points[static_cast<size_t>(region.center_index)], *plane);
            for (int id : same_class) {
                const Vec2 p2d = project_to_plane(cloud.points[static_cast<size_t>(id)], *plane);
                const double p_conserve =
                    boundary ? prob_boundary(distance_to_line(p2d, sep), sigma)
                             : prob_interior(p2d, center2d, region.density, stats.avg_density,
                                             sigma);
                if (draws.uniform01() > p_conserve) {
                    if (result.keep[static_cast<size_t>(id)]) ++rec.discarded;
                    result.keep[static_cast<size_t>(id)] = 0;
                }
            }
            result.regions.push_back(rec);
        }
    }
    result.class_counts = count_classes(cloud, result.keep);
    return result;
}

// --- Strategy front door ------------------------------------------------------

DecimationResult simplify_cloud(const LabeledCloud& cloud, const Palette& palette,
                                const SimplifyConfig& config) {
    if (!cloud.has_labels())
        throw ValidationError("simplify: cloud has no label attribute; run labeling first");
    for (uint8_t id : cloud.labels)
        if (!palette.contains(id))
            throw ValidationError("simplify: cloud label " + std::to_string(int(id)) +
                                  " is not in the palette");

    SimplifyConfig cfg = config;
    cfg.validate();
    if (cfg.simplifiable_labels.empty()) cfg.simplifiable_labels = palette.simplifiable_ids();
    std::sort(cfg.simplifiable_labels.begin(), cfg.simplifiable_labels.end());

    SpatialIndex index(cloud);

    std::vector<ClassPlane> planes;
    for (uint8_t label : cfg.simplifiable_labels) {
        if (class_point_ids(cloud, label).size() < 3) continue;  // nothing to decimate anyway
        RansacParams ransac = cfg.ransac;
        ransac.seed = mix_seed(cfg.seed, 0x504C0000u + label);
        planes.push_back(fit_class_plane(cloud, label, ransac).plane);
    }
    // Drop labels that have no fitted plane (fewer than 3 points).
    std::vector<uint8_t> active;
    for (uint8_t label : cfg.simplifiable_labels)
        if (find_plane(planes, label)) active.push_back(label);
    cfg.simplifiable_labels = active;

    if (cfg.method == Method::PS) return decimate_probabilistic(index, planes, cfg);
    const NormalField normals = estimate_normals(index, cfg.region);
    return decimate_ranked(index, normals, planes, cfg);
}

}  // namespace semsimp

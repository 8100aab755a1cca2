// Reconstruction quality measurement: depth RMSE over jointly valid pixels,
// per-class retention tables, and the plain-text / CSV evaluation report.
#pragma once

#include <string>
#include <vector>

#include "semsimp/types.hpp"

namespace semsimp {

struct RmseResult {
    double rmse = 0.0;
    size_t valid_pixels = 0;  // pixels valid in both maps
};

// Throws when the maps disagree in size or share no valid pixel.
RmseResult depth_rmse(const DepthMap& rendered, const DepthMap& truth);

struct ClassRetention {
    uint8_t label = 0;
    std::string name;
    size_t before = 0;
    size_t after = 0;

    double retention() const {
        return before == 0 ? 1.0 : static_cast<double>(after) / static_cast<double>(before);
    }
};

std::vector<ClassRetention> cloud_stats(const LabeledCloud& before, const LabeledCloud& after,
                                        const Palette& palette);

std::string format_stats_table(const std::vector<ClassRetention>& rows);
void write_stats_csv(const std::vector<ClassRetention>& rows, const std::string& path);
std::vector<ClassRetention> read_stats_csv(const std::string& path);

struct CameraRmse {
    int camera_id = 0;
    double rmse = 0.0;
    size_t valid_pixels = 0;
};

struct EvalReport {
    std::vector<CameraRmse> per_camera;
    double global_rmse = 0.0;      // pooled over every jointly valid pixel
    size_t global_valid = 0;
    std::vector<ClassRetention> retention;  // empty unless clouds were supplied
    size_t mesh_vertices = 0, mesh_triangles = 0;
    size_t mesh_file_bytes = 0;
};

// Pooled RMSE over per-camera (rendered, truth) pairs, camera ids attached.
EvalReport evaluate_depths(const std::vector<int>& camera_ids,
                           const std::vector<DepthMap>& rendered,
                           const std::vector<DepthMap>& truth);

std::string format_report(const EvalReport& report);

}  // namespace semsimp

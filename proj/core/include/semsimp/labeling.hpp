// Label back-projection: each point takes the class of the pixel it projects
// to in the segmentation raster of its first observing camera.
#pragma once

#include <map>

#include "semsimp/types.hpp"

namespace semsimp {

struct PixelProjection {
    double u = 0.0, v = 0.0;
    double depth = 0.0;  // camera-frame z
    bool valid = false;  // false when the point is behind the camera
};

PixelProjection project_point(const Camera& camera, const Vec3& point);

struct LabelingInput {
    const LabeledCloud* cloud = nullptr;  // needs first_observer per point
    const CameraSet* cameras = nullptr;
    const std::map<int, LabelRaster>* rasters = nullptr;  // camera id -> raster
    const Palette* palette = nullptr;
    uint8_t fallback_label = 0;  // assigned on invalid or out-of-image projections

    void validate() const;
};

// Returns a copy of the cloud with labels assigned; geometry and the other
// attributes are untouched.
LabeledCloud label_cloud(const LabelingInput& input);

}  // namespace semsimp

#include "semsimp/labeling.hpp"

#include <cmath>
#include <set>

namespace semsimp {

PixelProjection project_point(const Camera& camera, const Vec3& point) {
    const Vec3 pc = camera.to_camera(point);
    PixelProjection out;
    out.depth = pc.z;
    if (!(pc.z > 0.0)) return out;  // behind the camera
    out.u = camera.fx * pc.x / pc.z + camera.cx;
    out.v = camera.fy * pc.y / pc.z + camera.cy;
    out.valid = true;
    return out;
}

void LabelingInput::validate() const {
    if (!cloud || !cameras || !rasters || !palette)
        throw ValidationError("labeling: missing input");
    if (!cloud->has_first_observer())
        throw ValidationError("labeling: cloud has no first_observer attribute");
    if (!palette->contains(fallback_label))
        throw ValidationError("labeling: fallback label is not in the palette");

    std::set<int> referenced;
    for (int obs : cloud->first_observer)
        if (obs >= 0) referenced.insert(obs);
    for (int id : referenced) {
        const Camera* cam = cameras->find(id);
        if (!cam) throw ValidationError("labeling: first observer camera " + std::to_string(id) +
                                        " is unknown");
        auto it = rasters->find(id);
        if (it == rasters->end())
            throw ValidationError("labeling: no raster for camera " + std::to_string(id));
        const LabelRaster& raster = it->second;
        if (raster.width != cam->width || raster.height != cam->height)
            throw ValidationError("labeling: raster size differs from camera " +
                                  std::to_string(id) + " image size");
        for (uint8_t v : raster.data)
            if (!palette->contains(v))
                throw ValidationError("labeling: raster for camera " + std::to_string(id) +
                                      " contains label " + std::to_string(int(v)) +
                                      " missing from the palette");
    }
}

LabeledCloud label_cloud(const LabelingInput& input) {
    input.validate();
    const LabeledCloud& in = *input.cloud;
    LabeledCloud out = in;
    out.labels.assign(in.size(), input.fallback_label);

    for (size_t i = 0; i < in.size(); ++i) {
        const int obs = in.first_observer[i];
        if (obs < 0) continue;  // never observed: fallback
        const Camera& cam = input.cameras->get(obs);
        const LabelRaster& raster = input.rasters->at(obs);
        const PixelProjection proj = project_point(cam, in.points[i]);
        if (!proj.valid) continue;
        const int px = static_cast<int>(std::lround(proj.u));
        const int py = static_cast<int>(std::lround(proj.v));
        if (!raster.in_bounds(px, py)) continue;
        out.labels[i] = raster.at(px, py);
    }
    return out;
}

}  // namespace semsimp

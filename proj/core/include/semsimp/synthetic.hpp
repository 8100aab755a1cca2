// Deterministic synthetic scenes with exact analytic ground truth: label and
// depth rasters come from the underlying primitives, visibility from exact
// occlusion tests, so reconstruction quality can be measured without any
// external dataset.
#pragma once

#include <string>
#include <vector>

#include "semsimp/types.hpp"

namespace semsimp {

struct SyntheticScene {
    LabeledCloud cloud;  // truth labels, first_observer and visibility filled
    Palette palette;
    CameraSet cameras;
    std::vector<LabelRaster> rasters;     // one per camera, aligned with cameras.cameras
    std::vector<DepthMap> truth_depth;    // same alignment
};

// Ground plane, two walls and a sphere, observed by a camera ring. Ground
// and walls are simplifiable, the sphere is not. Surface points carry
// Gaussian off-surface noise; rasters and depths are noise-free.
struct UrbanSceneParams {
    int ground_n = 110;             // ground grid resolution (n x n)
    int wall_nx = 100, wall_nz = 13;
    int sphere_n = 3000;
    int camera_count = 8;
    int image_width = 128, image_height = 96;
    double focal = 110.0;
    double noise_sigma = 0.05;      // meters, along the surface normal
    uint64_t seed = 42;
};
SyntheticScene make_urban_scene(const UrbanSceneParams& params = {});

// Hollow cube sampled on all six faces, viewed from 26 directions placed
// outside the triangulation bounding box so the rays sweep the whole
// exterior. No rasters; visibility only.
struct CubeSceneParams {
    int face_n = 8;              // points per face edge
    double half_extent = 1.0;
    double camera_radius = 60.0;  // beyond the triangulation box: rays clip to the hull
    uint64_t seed = 7;
};
SyntheticScene make_hollow_cube_scene(const CubeSceneParams& params = {});

// Flat plane split into two simplifiable classes along x = 0; the substrate
// for boundary-preservation measurements. No cameras or rasters.
struct HalfPlaneParams {
    int n = 41;              // grid resolution (n x n)
    double extent = 20.0;    // plane spans [-extent, extent]^2
    double noise_sigma = 0.02;
    uint64_t seed = 3;
};
SyntheticScene make_halfplane_scene(const HalfPlaneParams& params = {});

// Writes cloud.ply (unlabeled), cameras.txt, palette.txt, visibility.txt,
// rasters/<camera_id>.pgm and truth/<camera_id>.depth under `dir`; creates
// the directories. Returns the list of files written (relative to dir).
std::vector<std::string> write_scene(const SyntheticScene& scene, const std::string& dir);

}  // namespace semsimp

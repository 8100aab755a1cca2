// File formats: ASCII PLY (binary_little_endian accepted on read), ASCII OFF,
// PGM P2/P5 label rasters, plain-text cameras, depth maps, palettes and
// per-point visibility lists. Writers are ASCII only and print doubles with
// 17 significant digits so write/read round-trips are value-exact.
#pragma once

#include <string>

#include "semsimp/types.hpp"

namespace semsimp {

LabeledCloud read_ply(const std::string& path);
void write_ply(const LabeledCloud& cloud, const std::string& path);

TriMesh read_off(const std::string& path);
void write_off(const TriMesh& mesh, const std::string& path);

// One camera per line:
//   id fx fy cx cy r11 r12 r13 r21 r22 r23 r31 r32 r33 t1 t2 t3 width height
CameraSet read_cameras(const std::string& path);
void write_cameras(const CameraSet& cams, const std::string& path);

LabelRaster read_label_raster(const std::string& path);
void write_label_raster(const LabelRaster& raster, const std::string& path);

// Header line "DEPTH w h", then w*h ASCII reals row-major.
DepthMap read_depth(const std::string& path);
void write_depth(const DepthMap& map, const std::string& path);

// Lines "id name simplifiable{0|1}".
Palette read_palette(const std::string& path);
void write_palette(const Palette& palette, const std::string& path);

// Lines "point_index n cam_1 ... cam_n"; the first camera listed is the
// point's first observer. Points without a line get an empty list.
void read_visibility(LabeledCloud& cloud, const std::string& path);
void write_visibility(const LabeledCloud& cloud, const std::string& path);

}  // namespace semsimp

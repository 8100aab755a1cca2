// Core domain types: labeled clouds, cameras, meshes, rasters, depth maps.
// All types are plain values, immutable by convention after construction,
// and safe to share across concurrent readers.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "semsimp/geometry.hpp"

namespace semsimp {

// Parse failures carry the offending file and (1-based) line when known.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string path, long line, const std::string& what)
        : std::runtime_error(line > 0 ? path + ":" + std::to_string(line) + ": " + what
                                      : path + ": " + what),
          path_(std::move(path)),
          line_(line) {}
    const std::string& path() const { return path_; }
    long line() const { return line_; }

private:
    std::string path_;
    long line_;
};

// Bad user-facing configuration or unmet stage preconditions; the CLI maps
// these to exit code 1 (runtime failures map to 2).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SemanticLabel {
    uint8_t id = 0;
    std::string name;
    bool simplifiable = false;
};

class Palette {
public:
    Palette() = default;
    explicit Palette(std::vector<SemanticLabel> labels) : labels_(std::move(labels)) {
        for (size_t i = 0; i < labels_.size(); ++i) {
            for (size_t j = i + 1; j < labels_.size(); ++j)
                if (labels_[i].id == labels_[j].id)
                    throw ValidationError("palette: duplicate label id " +
                                          std::to_string(int(labels_[i].id)));
        }
    }

    const std::vector<SemanticLabel>& labels() const { return labels_; }
    bool contains(uint8_t id) const {
        for (const auto& l : labels_)
            if (l.id == id) return true;
        return false;
    }
    const SemanticLabel& get(uint8_t id) const {
        for (const auto& l : labels_)
            if (l.id == id) return l;
        throw ValidationError("palette: unknown label id " + std::to_string(int(id)));
    }
    std::vector<uint8_t> simplifiable_ids() const {
        std::vector<uint8_t> out;
        for (const auto& l : labels_)
            if (l.simplifiable) out.push_back(l.id);
        return out;
    }

private:
    std::vector<SemanticLabel> labels_;
};

// Point cloud with optional per-point attributes held in parallel arrays.
// An empty attribute vector means the attribute is absent altogether; the
// per-point `normal_valid` flag covers points whose normal could not be
// estimated. Point order is the canonical identity for every deterministic
// iteration downstream.
struct LabeledCloud {
    std::vector<Vec3> points;
    std::vector<uint8_t> labels;
    std::vector<Vec3> normals;
    std::vector<uint8_t> normal_valid;
    std::vector<int> first_observer;
    std::vector<std::vector<int>> visibility;

    size_t size() const { return points.size(); }
    bool has_labels() const { return !labels.empty(); }
    bool has_normals() const { return !normals.empty(); }
    bool has_first_observer() const { return !first_observer.empty(); }
    bool has_visibility() const { return !visibility.empty(); }

    void check_consistent() const {
        auto expect = [&](size_t n, const char* what) {
            if (n != 0 && n != points.size())
                throw ValidationError(std::string("cloud: ") + what +
                                      " array length does not match point count");
        };
        expect(labels.size(), "label");
        expect(normals.size(), "normal");
        expect(normal_valid.size(), "normal-validity");
        expect(first_observer.size(), "first-observer");
        expect(visibility.size(), "visibility");
        if (normals.size() != normal_valid.size())
            throw ValidationError("cloud: normals and normal-validity lengths differ");
    }

    // Rows of the cloud selected by a keep mask, attributes included.
    LabeledCloud filtered(const std::vector<uint8_t>& keep) const;
};

struct Camera {
    int id = 0;
    double fx = 0, fy = 0, cx = 0, cy = 0;
    Mat3 R;   // world -> camera
    Vec3 t;
    int width = 0, height = 0;

    Vec3 center() const { return -(R.transposed() * t); }
    Vec3 to_camera(const Vec3& world) const { return R * world + t; }

    void validate() const {
        if (fx <= 0 || fy <= 0)
            throw ValidationError("camera " + std::to_string(id) + ": non-positive focal length");
        if (width <= 0 || height <= 0)
            throw ValidationError("camera " + std::to_string(id) + ": non-positive image size");
        if (R.orthonormality_error() > 1e-6)
            throw ValidationError("camera " + std::to_string(id) + ": rotation not orthonormal");
    }
};

struct CameraSet {
    std::vector<Camera> cameras;

    const Camera* find(int id) const {
        for (const auto& c : cameras)
            if (c.id == id) return &c;
        return nullptr;
    }
    const Camera& get(int id) const {
        const Camera* c = find(id);
        if (!c) throw ValidationError("no camera with id " + std::to_string(id));
        return *c;
    }
    size_t size() const { return cameras.size(); }
};

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    void check_valid() const {
        const int n = static_cast<int>(vertices.size());
        for (const auto& t : triangles) {
            for (int i : t)
                if (i < 0 || i >= n) throw ValidationError("mesh: triangle index out of range");
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
                throw ValidationError("mesh: degenerate triangle (repeated vertex)");
        }
    }
};

struct LabelRaster {
    int width = 0, height = 0;
    std::vector<uint8_t> data;  // row-major label ids

    uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

// Depth in meters; non-positive values mean "no depth" and are written as 0.
struct DepthMap {
    int width = 0, height = 0;
    std::vector<double> data;

    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    bool valid(int x, int y) const { return at(x, y) > 0.0; }
};

inline LabeledCloud LabeledCloud::filtered(const std::vector<uint8_t>& keep) const {
    if (keep.size() != points.size())
        throw ValidationError("keep mask length does not match cloud size");
    LabeledCloud out;
    for (size_t i = 0; i < points.size(); ++i) {
        if (!keep[i]) continue;
        out.points.push_back(points[i]);
        if (!labels.empty()) out.labels.push_back(labels[i]);
        if (!normals.empty()) {
            out.normals.push_back(normals[i]);
            out.normal_valid.push_back(normal_valid[i]);
        }
        if (!first_observer.empty()) out.first_observer.push_back(first_observer[i]);
        if (!visibility.empty()) out.visibility.push_back(visibility[i]);
    }
    return out;
}

}  // namespace semsimp

#include "semsimp/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace semsimp {

RmseResult depth_rmse(const DepthMap& rendered, const DepthMap& truth) {
    if (rendered.width != truth.width || rendered.height != truth.height)
        throw std::invalid_argument("depth_rmse: map dimensions differ");
    double sum = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < rendered.data.size(); ++i) {
        const double a = rendered.data[i], b = truth.data[i];
        if (!(a > 0.0) || !(b > 0.0)) continue;
        sum += (a - b) * (a - b);
        ++n;
    }
    if (n == 0) throw std::runtime_error("depth_rmse: no jointly valid pixels");
    return {std::sqrt(sum / static_cast<double>(n)), n};
}

std::vector<ClassRetention> cloud_stats(const LabeledCloud& before, const LabeledCloud& after,
                                        const Palette& palette) {
    if (!before.has_labels() || !after.has_labels())
        throw ValidationError("cloud_stats: both clouds need labels");
    std::map<uint8_t, ClassRetention> rows;
    for (uint8_t l : before.labels) {
        auto& row = rows[l];
        row.label = l;
        ++row.before;
    }
    for (uint8_t l : after.labels) {
        auto& row = rows[l];
        row.label = l;
        ++row.after;
    }
    std::vector<ClassRetention> out;
    for (auto& [id, row] : rows) {
        row.name = palette.contains(id) ? palette.get(id).name : "label" + std::to_string(int(id));
        out.push_back(row);
    }
    return out;
}

std::string format_stats_table(const std::vector<ClassRetention>& rows) {
    size_t name_width = 5;
    for (const auto& r : rows) name_width = std::max(name_width, r.name.size());
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof(line), "%3s  %-*s %12s %12s %10s\n", "id",
                  static_cast<int>(name_width), "class", "before", "after", "retention");
    os << line;
    size_t total_before = 0, total_after = 0;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%3d  %-*s %12zu %12zu %10.4f\n", int(r.label),
                      static_cast<int>(name_width), r.name.c_str(), r.before, r.after,
                      r.retention());
        os << line;
        total_before += r.before;
        total_after += r.after;
    }
    std::snprintf(line, sizeof(line), "%3s  %-*s %12zu %12zu %10.4f\n", "",
                  static_cast<int>(name_width), "total", total_before, total_after,
                  total_before ? double(total_after) / double(total_before) : 1.0);
    os << line;
    return os.str();
}

void write_stats_csv(const std::vector<ClassRetention>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError(path, 0, "cannot open for writing");
    f << "label,name,before,after,retention\n";
    char buf[40];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.retention());
        f << int(r.label) << ',' << r.name << ',' << r.before << ',' << r.after << ',' << buf
          << '\n';
    }
}

std::vector<ClassRetention> read_stats_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, 0, "cannot open file");
    std::string line;
    long line_no = 0;
    std::vector<ClassRetention> rows;
    while (std::getline(f, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;  // header
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw ParseError(path, line_no, "expected 5 CSV fields");
        ClassRetention r;
        r.label = static_cast<uint8_t>(std::stoi(fields[0]));
        r.name = fields[1];
        r.before = std::stoull(fields[2]);
        r.after = std::stoull(fields[3]);
        rows.push_back(r);
    }
    return rows;
}

EvalReport evaluate_depths(const std::vector<int>& camera_ids,
                           const std::vector<DepthMap>& rendered,
                           const std::vector<DepthMap>& truth) {
    if (camera_ids.size() != rendered.size() || rendered.size() != truth.size())
        throw std::invalid_argument("evaluate_depths: list sizes differ");
    if (rendered.empty()) throw std::invalid_argument("evaluate_depths: no cameras");
    EvalReport report;
    double pooled = 0.0;
    size_t pooled_n = 0;
    for (size_t i = 0; i < rendered.size(); ++i) {
        const RmseResult r = depth_rmse(rendered[i], truth[i]);
        report.per_camera.push_back({camera_ids[i], r.rmse, r.valid_pixels});
        pooled += r.rmse * r.rmse * static_cast<double>(r.valid_pixels);
        pooled_n += r.valid_pixels;
    }
    report.global_rmse = std::sqrt(pooled / static_cast<double>(pooled_n));
    report.global_valid = pooled_n;
    return report;
}

std::string format_report(const EvalReport& report) {
    std::ostringstream os;
    char line[160];
    os << "depth evaluation\n";
    for (const auto& cam : report.per_camera) {
        std::snprintf(line, sizeof(line), "  camera %3d: rmse %.6f m over %zu px\n",
                      cam.camera_id, cam.rmse, cam.valid_pixels);
        os << line;
    }
    std::snprintf(line, sizeof(line), "  global: rmse %.6f m over %zu px\n", report.global_rmse,
                  report.global_valid);
    os << line;
    if (report.mesh_triangles > 0) {
        std::snprintf(line, sizeof(line), "mesh: %zu vertices, %zu triangles, %zu bytes as OFF\n",
                      report.mesh_vertices, report.mesh_triangles, report.mesh_file_bytes);
        os << line;
    }
    if (!report.retention.empty()) {
        os << "cloud retention\n" << format_stats_table(report.retention);
    }
    return os.str();
}

}  // namespace semsimp

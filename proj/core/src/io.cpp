#include "semsimp/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace semsimp {
namespace {

// All writers funnel through this so numeric formatting is uniform and
// deterministic. %.17g reproduces the exact double on read-back.
void print_real(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError(path, 0, "cannot open for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw ParseError(path, 0, "write failed");
}

// Line-oriented reader that tracks the current line for error messages.
class LineReader {
public:
    explicit LineReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw ParseError(path, 0, "cannot open file");
    }

    bool next_content_line(std::string& out, bool skip_comments = false) {
        while (std::getline(in_, out)) {
            ++line_;
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (out.find_first_not_of(" \t") == std::string::npos) continue;
            if (skip_comments && out[0] == '#') continue;
            return true;
        }
        return false;
    }

    long line() const { return line_; }
    const std::string& path() const { return path_; }
    std::ifstream& stream() { return in_; }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(path_, line_, msg); }

private:
    std::string path_;
    std::ifstream in_;
    long line_ = 0;
};

double parse_real(LineReader& r, const std::string& tok) {
    try {
        size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) r.fail("trailing characters in number '" + tok + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        r.fail("expected a number, got '" + tok + "'");
    }
}

long parse_int(LineReader& r, const std::string& tok) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        r.fail("expected an integer, got '" + tok + "'");
    return v;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> toks;
    std::istringstream iss(s);
    std::string t;
    while (iss >> t) toks.push_back(t);
    return toks;
}

}  // namespace

// ---------------------------------------------------------------------------
// PLY
// ---------------------------------------------------------------------------

namespace {

enum class PlyType { f32, f64, u8, i8, u16, i16, u32, i32 };

size_t ply_type_size(PlyType t) {
    switch (t) {
        case PlyType::u8: case PlyType::i8: return 1;
        case PlyType::u16: case PlyType::i16: return 2;
        case PlyType::u32: case PlyType::i32: case PlyType::f32: return 4;
        case PlyType::f64: return 8;
    }
    return 0;
}

bool ply_parse_type(const std::string& name, PlyType& out) {
    if (name == "float" || name == "float32") out = PlyType::f32;
    else if (name == "double" || name == "float64") out = PlyType::f64;
    else if (name == "uchar" || name == "uint8") out = PlyType::u8;
    else if (name == "char" || name == "int8") out = PlyType::i8;
    else if (name == "ushort" || name == "uint16") out = PlyType::u16;
    else if (name == "short" || name == "int16") out = PlyType::i16;
    else if (name == "uint" || name == "uint32") out = PlyType::u32;
    else if (name == "int" || name == "int32") out = PlyType::i32;
    else return false;
    return true;
}

double ply_read_binary_value(std::ifstream& in, PlyType t) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(ply_type_size(t)));
    switch (t) {
        case PlyType::u8: return buf[0];
        case PlyType::i8: return static_cast<int8_t>(buf[0]);
        case PlyType::u16: { uint16_t v; std::memcpy(&v, buf, 2); return v; }
        case PlyType::i16: { int16_t v; std::memcpy(&v, buf, 2); return v; }
        case PlyType::u32: { uint32_t v; std::memcpy(&v, buf, 4); return v; }
        case PlyType::i32: { int32_t v; std::memcpy(&v, buf, 4); return v; }
        case PlyType::f32: { float v; std::memcpy(&v, buf, 4); return v; }
        case PlyType::f64: { double v; std::memcpy(&v, buf, 8); return v; }
    }
    return 0.0;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::f32;
};

}  // namespace

LabeledCloud read_ply(const std::string& path) {
    LineReader r(path);
    std::string line;
    if (!r.next_content_line(line) || line != "ply") r.fail("missing 'ply' magic");
    bool binary = false;
    bool seen_format = false;
    long vertex_count = -1;
    std::vector<PlyProperty> props;
    bool in_vertex_element = false;

    while (true) {
        if (!r.next_content_line(line)) r.fail("header ended before end_header");
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "comment") continue;
        if (toks[0] == "format") {
            if (toks.size() < 2) r.fail("malformed format line");
            if (toks[1] == "ascii") binary = false;
            else if (toks[1] == "binary_little_endian") binary = true;
            else r.fail("unsupported PLY format '" + toks[1] + "'");
            seen_format = true;
        } else if (toks[0] == "element") {
            if (toks.size() != 3) r.fail("malformed element line");
            const long count = parse_int(r, toks[2]);
            if (toks[1] == "vertex") {
                vertex_count = count;
                in_vertex_element = true;
            } else {
                if (count != 0) r.fail("unsupported element '" + toks[1] + "'");
                in_vertex_element = false;
            }
        } else if (toks[0] == "property") {
            if (!in_vertex_element) continue;  // property of an empty element
            if (toks.size() == 3) {
                PlyProperty p;
                if (!ply_parse_type(toks[1], p.type))
                    r.fail("unsupported property type '" + toks[1] + "'");
                p.name = toks[2];
                props.push_back(p);
            } else if (toks.size() == 5 && toks[1] == "list") {
                r.fail("list properties are not supported on vertex elements");
            } else {
                r.fail("malformed property line");
            }
        } else if (toks[0] == "end_header") {
            break;
        } else {
            r.fail("unexpected header line '" + toks[0] + "'");
        }
    }
    if (!seen_format) r.fail("missing format line");
    if (vertex_count < 0) r.fail("missing 'element vertex' declaration");

    auto prop_index = [&](const char* name) -> int {
        for (size_t i = 0; i < props.size(); ++i)
            if (props[i].name == name) return static_cast<int>(i);
        return -1;
    };
    const int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
    if (ix < 0 || iy < 0 || iz < 0) r.fail("vertex element lacks x/y/z properties");
    const int inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
    const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;
    const int ilabel = prop_index("label");
    const int iobs = prop_index("first_observer");

    LabeledCloud cloud;
    cloud.points.reserve(static_cast<size_t>(vertex_count));
    std::vector<double> row(props.size());

    for (long v = 0; v < vertex_count; ++v) {
        if (binary) {
            for (size_t p = 0; p < props.size(); ++p)
                row[p] = ply_read_binary_value(r.stream(), props[p].type);
            if (!r.stream())
                throw ParseError(path, 0, "vertex " + std::to_string(v) + ": truncated binary data");
        } else {
            if (!r.next_content_line(line))
                r.fail("vertex count mismatch: expected " + std::to_string(vertex_count) +
                       ", file ended after " + std::to_string(v));
            auto toks = split_ws(line);
            if (toks.size() != props.size())
                r.fail("vertex line has " + std::to_string(toks.size()) + " values, expected " +
                       std::to_string(props.size()));
            for (size_t p = 0; p < props.size(); ++p) row[p] = parse_real(r, toks[p]);
        }
        const Vec3 pt{row[ix], row[iy], row[iz]};
        if (!pt.finite()) {
            if (binary)
                throw ParseError(path, 0, "vertex " + std::to_string(v) + ": non-finite coordinate");
            r.fail("non-finite coordinate");
        }
        cloud.points.push_back(pt);
        if (has_normals) {
            const Vec3 n{row[inx], row[iny], row[inz]};
            if (!n.finite()) r.fail("non-finite normal");
            cloud.normals.push_back(n);
            // All-zero normals round-trip per-point "no normal".
            cloud.normal_valid.push_back(n.norm2() > 0.0 ? 1 : 0);
        }
        if (ilabel >= 0) {
            const double lv = row[ilabel];
            if (lv < 0 || lv > 255 || lv != static_cast<double>(static_cast<long>(lv))) {
                if (binary)
                    throw ParseError(path, 0, "vertex " + std::to_string(v) + ": label out of range");
                r.fail("label out of range [0,255]");
            }
            cloud.labels.push_back(static_cast<uint8_t>(lv));
        }
        if (iobs >= 0) cloud.first_observer.push_back(static_cast<int>(row[iobs]));
    }
    for (size_t i = 0; i < cloud.normals.size(); ++i) {
        if (cloud.normal_valid[i] && std::fabs(cloud.normals[i].norm() - 1.0) > 1e-6) {
            throw ParseError(path, 0, "vertex " + std::to_string(i) + ": normal is not unit length");
        }
    }
    cloud.check_consistent();
    return cloud;
}

void write_ply(const LabeledCloud& cloud, const std::string& path) {
    cloud.check_consistent();
    std::string out;
    out += "ply\nformat ascii 1.0\n";
    out += "element vertex " + std::to_string(cloud.size()) + "\n";
    out += "property float x\nproperty float y\nproperty float z\n";
    if (cloud.has_normals())
        out += "property float nx\nproperty float ny\nproperty float nz\n";
    if (cloud.has_labels()) out += "property uchar label\n";
    if (cloud.has_first_observer()) out += "property int first_observer\n";
    out += "end_header\n";
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        print_real(out, p.x); out += ' ';
        print_real(out, p.y); out += ' ';
        print_real(out, p.z);
        if (cloud.has_normals()) {
            const Vec3 n = cloud.normal_valid[i] ? cloud.normals[i] : Vec3{};
            out += ' '; print_real(out, n.x);
            out += ' '; print_real(out, n.y);
            out += ' '; print_real(out, n.z);
        }
        if (cloud.has_labels()) out += ' ' + std::to_string(int(cloud.labels[i]));
        if (cloud.has_first_observer()) out += ' ' + std::to_string(cloud.first_observer[i]);
        out += '\n';
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// OFF
// ---------------------------------------------------------------------------

TriMesh read_off(const std::string& path) {
    LineReader r(path);
    std::string line;
    if (!r.next_content_line(line, true) || split_ws(line)[0] != "OFF")
        r.fail("missing OFF magic");
    if (!r.next_content_line(line, true)) r.fail("missing count line");
    auto counts = split_ws(line);
    if (counts.size() != 3) r.fail("count line must be 'vertices faces edges'");
    const long nv = parse_int(r, counts[0]);
    const long nf = parse_int(r, counts[1]);
    TriMesh mesh;
    mesh.vertices.reserve(static_cast<size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        if (!r.next_content_line(line, true)) r.fail("vertex section truncated");
        auto toks = split_ws(line);
        if (toks.size() != 3) r.fail("vertex line must have three coordinates");
        Vec3 p{parse_real(r, toks[0]), parse_real(r, toks[1]), parse_real(r, toks[2])};
        if (!p.finite()) r.fail("non-finite coordinate");
        mesh.vertices.push_back(p);
    }
    for (long i = 0; i < nf; ++i) {
        if (!r.next_content_line(line, true)) r.fail("face section truncated");
        auto toks = split_ws(line);
        if (toks.size() < 1 || parse_int(r, toks[0]) != 3)
            r.fail("only triangular faces are supported");
        if (toks.size() != 4) r.fail("triangle line must have three indices");
        std::array<int, 3> tri{};
        for (int k = 0; k < 3; ++k) {
            const long idx = parse_int(r, toks[k + 1]);
            if (idx < 0 || idx >= nv) r.fail("vertex index out of range");
            tri[k] = static_cast<int>(idx);
        }
        mesh.triangles.push_back(tri);
    }
    mesh.check_valid();
    return mesh;
}

void write_off(const TriMesh& mesh, const std::string& path) {
    mesh.check_valid();
    std::string out = "OFF\n";
    out += std::to_string(mesh.vertices.size()) + " " + std::to_string(mesh.triangles.size()) +
           " 0\n";
    for (const Vec3& v : mesh.vertices) {
        print_real(out, v.x); out += ' ';
        print_real(out, v.y); out += ' ';
        print_real(out, v.z); out += '\n';
    }
    for (const auto& t : mesh.triangles)
        out += "3 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " +
               std::to_string(t[2]) + "\n";
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Cameras
// ---------------------------------------------------------------------------

CameraSet read_cameras(const std::string& path) {
    LineReader r(path);
    CameraSet set;
    std::string line;
    while (r.next_content_line(line, true)) {
        auto toks = split_ws(line);
        if (toks.size() != 19)
            r.fail("camera line needs 19 fields (id fx fy cx cy r11..r33 t1 t2 t3 w h), got " +
                   std::to_string(toks.size()));
        Camera c;
        c.id = static_cast<int>(parse_int(r, toks[0]));
        c.fx = parse_real(r, toks[1]);
        c.fy = parse_real(r, toks[2]);
        c.cx = parse_real(r, toks[3]);
        c.cy = parse_real(r, toks[4]);
        for (int k = 0; k < 9; ++k) c.R.m[k] = parse_real(r, toks[5 + k]);
        c.t = {parse_real(r, toks[14]), parse_real(r, toks[15]), parse_real(r, toks[16])};
        c.width = static_cast<int>(parse_int(r, toks[17]));
        c.height = static_cast<int>(parse_int(r, toks[18]));
        for (int k = 0; k < 9; ++k)
            if (!std::isfinite(c.R.m[k])) r.fail("non-finite rotation entry");
        if (!c.t.finite()) r.fail("non-finite translation");
        if (set.find(c.id)) r.fail("duplicate camera id " + std::to_string(c.id));
        try {
            c.validate();
        } catch (const ValidationError& e) {
            r.fail(e.what());
        }
        set.cameras.push_back(c);
    }
    return set;
}

void write_cameras(const CameraSet& cams, const std::string& path) {
    std::string out;
    for (const Camera& c : cams.cameras) {
        out += std::to_string(c.id);
        auto add = [&](double v) { out += ' '; print_real(out, v); };
        add(c.fx); add(c.fy); add(c.cx); add(c.cy);
        for (double v : c.R.m) add(v);
        add(c.t.x); add(c.t.y); add(c.t.z);
        out += ' ' + std::to_string(c.width) + ' ' + std::to_string(c.height) + '\n';
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// PGM label rasters
// ---------------------------------------------------------------------------

LabelRaster read_label_raster(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");
    // Token scanner that honors '#' comments, as PGM allows them anywhere in
    // the header.
    long line = 1;
    auto next_token = [&]() -> std::string {
        std::string tok;
        int ch;
        while ((ch = in.get()) != EOF) {
            if (ch == '#') {
                while ((ch = in.get()) != EOF && ch != '\n') {}
                if (ch == '\n') ++line;
                continue;
            }
            if (std::isspace(ch)) {
                if (ch == '\n') ++line;
                if (!tok.empty()) return tok;
                continue;
            }
            tok += static_cast<char>(ch);
        }
        return tok;
    };
    auto next_int = [&](const char* what) -> long {
        const std::string tok = next_token();
        long v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
            throw ParseError(path, line, std::string("expected ") + what + ", got '" + tok + "'");
        return v;
    };

    const std::string magic = next_token();
    if (magic != "P2" && magic != "P5")
        throw ParseError(path, line, "unknown magic '" + magic + "' (want P2 or P5)");
    LabelRaster raster;
    raster.width = static_cast<int>(next_int("width"));
    raster.height = static_cast<int>(next_int("height"));
    const long maxval = next_int("maxval");
    if (raster.width <= 0 || raster.height <= 0)
        throw ParseError(path, line, "non-positive raster dimensions");
    if (maxval <= 0 || maxval > 255)
        throw ParseError(path, line, "maxval must be in [1,255] for label rasters");
    const size_t n = static_cast<size_t>(raster.width) * raster.height;
    raster.data.resize(n);
    if (magic == "P2") {
        for (size_t i = 0; i < n; ++i) {
            const long v = next_int("gray value");
            if (v < 0 || v > maxval) throw ParseError(path, line, "gray value out of range");
            raster.data[i] = static_cast<uint8_t>(v);
        }
    } else {
        // P5: exactly one whitespace byte after maxval, then raw bytes.
        in.read(reinterpret_cast<char*>(raster.data.data()), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw ParseError(path, 0, "truncated P5 pixel data");
        for (uint8_t v : raster.data)
            if (v > maxval) throw ParseError(path, 0, "gray value out of range");
    }
    return raster;
}

void write_label_raster(const LabelRaster& raster, const std::string& path) {
    if (raster.data.size() != static_cast<size_t>(raster.width) * raster.height)
        throw ValidationError("raster: data length does not match dimensions");
    std::string out = "P2\n" + std::to_string(raster.width) + " " +
                      std::to_string(raster.height) + "\n255\n";
    for (int y = 0; y < raster.height; ++y) {
        for (int x = 0; x < raster.width; ++x) {
            out += std::to_string(int(raster.at(x, y)));
            out += (x + 1 == raster.width) ? '\n' : ' ';
        }
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Depth maps
// ---------------------------------------------------------------------------

DepthMap read_depth(const std::string& path) {
    LineReader r(path);
    std::string line;
    if (!r.next_content_line(line)) r.fail("empty depth file");
    auto hdr = split_ws(line);
    if (hdr.size() != 3 || hdr[0] != "DEPTH") r.fail("expected header 'DEPTH w h'");
    DepthMap map;
    map.width = static_cast<int>(parse_int(r, hdr[1]));
    map.height = static_cast<int>(parse_int(r, hdr[2]));
    if (map.width <= 0 || map.height <= 0) r.fail("non-positive depth dimensions");
    const size_t n = static_cast<size_t>(map.width) * map.height;
    map.data.reserve(n);
    while (map.data.size() < n && r.next_content_line(line)) {
        for (const auto& tok : split_ws(line)) {
            if (map.data.size() == n) r.fail("more depth values than width*height");
            const double v = parse_real(r, tok);
            if (!std::isfinite(v)) r.fail("non-finite depth value");
            map.data.push_back(v);
        }
    }
    if (map.data.size() != n)
        r.fail("depth data truncated: got " + std::to_string(map.data.size()) + " of " +
               std::to_string(n) + " values");
    return map;
}

void write_depth(const DepthMap& map, const std::string& path) {
    if (map.data.size() != static_cast<size_t>(map.width) * map.height)
        throw ValidationError("depth map: data length does not match dimensions");
    std::string out = "DEPTH " + std::to_string(map.width) + " " + std::to_string(map.height) + "\n";
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const double v = map.at(x, y);
            print_real(out, v > 0.0 ? v : 0.0);
            out += (x + 1 == map.width) ? '\n' : ' ';
        }
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Palette
// ---------------------------------------------------------------------------

Palette read_palette(const std::string& path) {
    LineReader r(path);
    std::vector<SemanticLabel> labels;
    std::string line;
    while (r.next_content_line(line, true)) {
        auto toks = split_ws(line);
        if (toks.size() != 3) r.fail("palette line must be 'id name simplifiable{0|1}'");
        const long id = parse_int(r, toks[0]);
        if (id < 0 || id > 255) r.fail("label id out of range [0,255]");
        const long flag = parse_int(r, toks[2]);
        if (flag != 0 && flag != 1) r.fail("simplifiable flag must be 0 or 1");
        labels.push_back({static_cast<uint8_t>(id), toks[1], flag == 1});
    }
    try {
        return Palette(std::move(labels));
    } catch (const ValidationError& e) {
        throw ParseError(path, 0, e.what());
    }
}

void write_palette(const Palette& palette, const std::string& path) {
    std::string out;
    for (const auto& l : palette.labels())
        out += std::to_string(int(l.id)) + " " + l.name + " " + (l.simplifiable ? "1" : "0") + "\n";
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Visibility lists
// ---------------------------------------------------------------------------

void read_visibility(LabeledCloud& cloud, const std::string& path) {
    LineReader r(path);
    cloud.visibility.assign(cloud.size(), {});
    cloud.first_observer.assign(cloud.size(), -1);
    std::string line;
    while (r.next_content_line(line, true)) {
        auto toks = split_ws(line);
        if (toks.size() < 2) r.fail("visibility line must be 'point_index n cam_1 .. cam_n'");
        const long idx = parse_int(r, toks[0]);
        if (idx < 0 || static_cast<size_t>(idx) >= cloud.size())
            r.fail("point index " + std::to_string(idx) + " out of range");
        const long n = parse_int(r, toks[1]);
        if (n < 0 || toks.size() != static_cast<size_t>(n) + 2)
            r.fail("camera count does not match number of ids on the line");
        auto& vis = cloud.visibility[static_cast<size_t>(idx)];
        vis.clear();
        for (long k = 0; k < n; ++k)
            vis.push_back(static_cast<int>(parse_int(r, toks[static_cast<size_t>(k) + 2])));
        cloud.first_observer[static_cast<size_t>(idx)] = vis.empty() ? -1 : vis.front();
    }
}

void write_visibility(const LabeledCloud& cloud, const std::string& path) {
    std::string out;
    for (size_t i = 0; i < cloud.visibility.size(); ++i) {
        const auto& vis = cloud.visibility[i];
        if (vis.empty()) continue;
        out += std::to_string(i) + " " + std::to_string(vis.size());
        for (int cam : vis) out += " " + std::to_string(cam);
        out += "\n";
    }
    write_file(path, out);
}

}  // namespace semsimp

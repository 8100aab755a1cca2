#include "semsimp/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace semsimp {

uint64_t fnv1a_bytes(const void* data, size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xCBF29CE484222325ull;
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot hash missing file: " + path);
    uint64_t h = 0xCBF29CE484222325ull;
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof(buf));
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001B3ull;
        }
    }
    return h;
}

std::string fnv1a_hex(uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

void RunManifest::add_output(const std::string& name, const std::string& path) {
    outputs.push_back({name, path, fnv1a_hex(fnv1a_file(path))});
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    nlohmann::ordered_json j;
    j["command"] = manifest.command;
    j["seed"] = manifest.seed;
    nlohmann::ordered_json in = nlohmann::ordered_json::object();
    for (const auto& [k, v] : manifest.inputs) in[k] = v;
    j["inputs"] = in;
    nlohmann::ordered_json pr = nlohmann::ordered_json::object();
    for (const auto& [k, v] : manifest.params) pr[k] = v;
    j["params"] = pr;
    nlohmann::ordered_json outs = nlohmann::ordered_json::array();
    for (const auto& o : manifest.outputs)
        outs.push_back({{"name", o.name}, {"path", o.path}, {"fnv1a64", o.hash}});
    j["outputs"] = outs;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write manifest: " + path);
    f << j.dump(2) << "\n";
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read manifest: " + path);
    nlohmann::ordered_json j;
    f >> j;
    RunManifest m;
    m.command = j.value("command", "");
    m.seed = j.value("seed", uint64_t{0});
    if (j.contains("inputs"))
        for (auto it = j["inputs"].begin(); it != j["inputs"].end(); ++it)
            m.inputs.emplace_back(it.key(), it.value().get<std::string>());
    if (j.contains("params"))
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
            m.params.emplace_back(it.key(), it.value().get<std::string>());
    if (j.contains("outputs"))
        for (const auto& o : j["outputs"])
            m.outputs.push_back({o.value("name", ""), o.value("path", ""), o.value("fnv1a64", "")});
    return m;
}

}  // namespace semsimp

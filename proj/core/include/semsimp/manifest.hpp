// Run manifests: every CLI stage records its inputs, parameters, seed and
// the FNV-1a hash of each output next to the outputs, so a run can be
// reproduced and compared byte for byte.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace semsimp {

uint64_t fnv1a_bytes(const void* data, size_t size);
uint64_t fnv1a_file(const std::string& path);
std::string fnv1a_hex(uint64_t hash);

struct RunManifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> inputs;  // name -> path
    std::vector<std::pair<std::string, std::string>> params;  // key -> value
    uint64_t seed = 0;

    struct Output {
        std::string name;
        std::string path;
        std::string hash;  // fnv1a-64, hex
    };
    std::vector<Output> outputs;

    void add_output(const std::string& name, const std::string& path);
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest read_manifest(const std::string& path);

}  // namespace semsimp

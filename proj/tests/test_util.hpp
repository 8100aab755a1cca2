// Shared helpers for the test binaries.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "semsimp/rng.hpp"
#include "semsimp/types.hpp"

namespace semsimp::test {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 ("semsimp_" + tag + "_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++)))
                    .string();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

inline LabeledCloud random_cloud(size_t n, uint64_t seed, double extent = 10.0,
                                 int label_count = 3) {
    LabeledCloud cloud;
    Rng rng(seed);
    for (size_t i = 0; i < n; ++i) {
        cloud.points.push_back({rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                                rng.uniform(-extent, extent)});
        cloud.labels.push_back(static_cast<uint8_t>(rng.below(static_cast<uint64_t>(label_count))));
    }
    return cloud;
}

}  // namespace semsimp::test

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "ccid/image.hpp"

namespace ccid::testing {

inline Image random_image(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    SplitMix64 rng(seed);
    Image img(h, w);
    for (double& v : img.pixels()) v = lo + (hi - lo) * rng.uniform();
    return img;
}

inline double max_abs_diff(const Image& a, const Image& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.pixels()[i] - b.pixels()[i]));
    return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("ccid_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace ccid::testing

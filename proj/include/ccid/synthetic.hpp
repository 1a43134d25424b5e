#pragma once

#include <cstdint>
#include <vector>

#include "ccid/image.hpp"

namespace ccid {

/// Procedural grayscale test scene: smooth illumination, overlapping flat and
/// shaded shapes with sharp edges, oriented gratings, and fine fractal
/// texture. Values stay inside [0.05, 0.95]. Deterministic in `seed`.
[[nodiscard]] Image synthetic_scene(int height, int width, std::uint64_t seed);

/// `count` scenes with seeds derived from `seed`.
[[nodiscard]] std::vector<Image> synthetic_corpus(int count, int height, int width, std::uint64_t seed);

}  // namespace ccid

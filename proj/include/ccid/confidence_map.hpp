#pragma once

#include <vector>

#include "ccid/image.hpp"
#include "ccid/io.hpp"

namespace ccid {

/// Side length of the square region covered by one confidence value.
inline constexpr int kConfidenceCell = 8;

/// Per-region trust in the learned denoiser, one value in [0,1] for every
/// 8x8 block of the source image (partial blocks at the edges included).
struct ConfidenceMap {
    int rows = 0;  ///< ceil(H / 8)
    int cols = 0;  ///< ceil(W / 8)
    std::vector<double> values;

    ConfidenceMap() = default;
    ConfidenceMap(int r, int c, double fill = 0.0)
        : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int r, int c) noexcept { return values[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const noexcept { return values[static_cast<std::size_t>(r) * cols + c]; }

    [[nodiscard]] bool matches(int height, int width) const noexcept;
    void validate() const;
};

[[nodiscard]] int confidence_rows(int height) noexcept;
[[nodiscard]] int confidence_cols(int width) noexcept;

[[nodiscard]] Image to_image(const ConfidenceMap& map);
[[nodiscard]] ConfidenceMap from_image(const Image& grid);

/// Diverging two-hue rendering around the threshold, each cell drawn as a
/// cell_px x cell_px block. Above t: white -> green (0,255,0); below t:
/// white -> purple (128,0,128). Intensity is |c - t| / (1 - t) above and
/// |c - t| / t below, so c == t renders white.
[[nodiscard]] RgbImage colorize_confidence(const ConfidenceMap& map, double threshold, int cell_px = kConfidenceCell);

/// Inverse of colorize_confidence, sampling the centre pixel of each cell.
/// Exact up to 8-bit quantization.
[[nodiscard]] ConfidenceMap decode_confidence_colors(const RgbImage& img, double threshold,
                                                     int cell_px = kConfidenceCell);

}  // namespace ccid

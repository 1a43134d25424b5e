#include "ccid/confidence_map.hpp"

#include <algorithm>
#include <cmath>

namespace ccid {

int confidence_rows(int height) noexcept { return (height + kConfidenceCell - 1) / kConfidenceCell; }
int confidence_cols(int width) noexcept { return (width + kConfidenceCell - 1) / kConfidenceCell; }

bool ConfidenceMap::matches(int height, int width) const noexcept {
    return rows == confidence_rows(height) && cols == confidence_cols(width);
}

void ConfidenceMap::validate() const {
    if (rows < 1 || cols < 1 || values.size() != static_cast<std::size_t>(rows) * cols) {
        throw InvalidArgument("malformed confidence map");
    }
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("confidence values must lie in [0, 1]");
    }
}

Image to_image(const ConfidenceMap& map) { return Image(map.rows, map.cols, map.values); }

ConfidenceMap from_image(const Image& grid) {
    ConfidenceMap map(grid.height(), grid.width());
    std::copy(grid.pixels().begin(), grid.pixels().end(), map.values.begin());
    return map;
}

namespace {

constexpr std::uint8_t kPurple[3] = {128, 0, 128};
constexpr std::uint8_t kGreen[3] = {0, 255, 0};

}  // namespace

RgbImage colorize_confidence(const ConfidenceMap& map, double threshold, int cell_px) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("colorization threshold must lie in (0, 1)");
    if (cell_px < 1) throw InvalidArgument("cell size must be positive");
    RgbImage out(map.rows * cell_px, map.cols * cell_px);
    for (int r = 0; r < map.rows; ++r) {
        for (int c = 0; c < map.cols; ++c) {
            const double v = std::clamp(map(r, c), 0.0, 1.0);
            const bool above = v >= threshold;
            const double s = above ? (v - threshold) / (1.0 - threshold) : (threshold - v) / threshold;
            const std::uint8_t* hue = above ? kGreen : kPurple;
            std::uint8_t rgb[3];
            for (int k = 0; k < 3; ++k) rgb[k] = to_byte(((1.0 - s) * 255.0 + s * hue[k]) / 255.0);
            for (int y = 0; y < cell_px; ++y) {
                for (int x = 0; x < cell_px; ++x) std::copy(rgb, rgb + 3, out.at(r * cell_px + y, c * cell_px + x));
            }
        }
    }
    return out;
}

ConfidenceMap decode_confidence_colors(const RgbImage& img, double threshold, int cell_px) {
    if (cell_px < 1 || img.height % cell_px != 0 || img.width % cell_px != 0) {
        throw InvalidArgument("colorized confidence size is not a multiple of the cell size");
    }
    ConfidenceMap map(img.height / cell_px, img.width / cell_px);
    for (int r = 0; r < map.rows; ++r) {
        for (int c = 0; c < map.cols; ++c) {
            const std::uint8_t* px = img.at(r * cell_px + cell_px / 2, c * cell_px + cell_px / 2);
            // The green ramp keeps G at 255; the purple ramp lowers G fastest.
            if (px[1] == 255) {
                const double s = 1.0 - px[0] / 255.0;
                map(r, c) = threshold + s * (1.0 - threshold);
            } else {
                const double s = 1.0 - px[1] / 255.0;
                map(r, c) = threshold - s * threshold;
            }
        }
    }
    return map;
}

}  // namespace ccid

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccid/image.hpp"

namespace ccid {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit interleaved RGB raster, used for colorized outputs.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // height * width * 3

    RgbImage() = default;
    RgbImage(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0) {}

    std::uint8_t* at(int y, int x) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* at(int y, int x) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

/// Clamp to [0,1] then round half up onto the 8-bit grid.
[[nodiscard]] std::uint8_t to_byte(double v) noexcept;

/// PNG (8-bit gray, gray+alpha, RGB, RGBA) or binary PGM (P5, maxval 255).
/// Color is reduced to gray with BT.601 luma weights.
[[nodiscard]] Image load_image(const std::filesystem::path& path);
[[nodiscard]] Image decode_image(std::span<const std::uint8_t> bytes);

/// Format chosen by extension: .png or .pgm.
void save_image(const Image& img, const std::filesystem::path& path);
void save_rgb_png(const RgbImage& img, const std::filesystem::path& path);

[[nodiscard]] std::vector<std::uint8_t> encode_png(const Image& img);
[[nodiscard]] std::vector<std::uint8_t> encode_png(const RgbImage& img);
[[nodiscard]] std::vector<std::uint8_t> encode_pgm(const Image& img);
[[nodiscard]] RgbImage decode_rgb_png(std::span<const std::uint8_t> bytes);

}  // namespace ccid

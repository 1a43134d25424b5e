#include "ccid/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ccid {

std::uint8_t to_byte(double v) noexcept {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open image file '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ImageIoError("cannot write image file '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageIoError("short write to '" + path.string() + "'");
}

bool is_png(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

// Skips whitespace and '#' comments in a PNM header.
std::size_t skip_pnm_space(std::span<const std::uint8_t> bytes, std::size_t pos) {
    while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(bytes[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    return pos;
}

long read_pnm_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    pos = skip_pnm_space(bytes, pos);
    long value = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        value = value * 10 + (bytes[pos] - '0');
        if (value > (1L << 24)) throw ImageIoError("PGM header value too large");
        ++pos;
    }
    if (pos == start) throw ImageIoError("malformed PGM header");
    return value;
}

Image decode_pgm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 2;
    const long width = read_pnm_int(bytes, pos);
    const long height = read_pnm_int(bytes, pos);
    const long maxval = read_pnm_int(bytes, pos);
    if (width <= 0 || height <= 0) throw ImageIoError("PGM has empty dimensions");
    if (maxval != 255) {
        throw ImageIoError("unsupported PGM bit depth: maxval " + std::to_string(maxval) + " (only 8-bit is supported)");
    }
    ++pos;  // single whitespace before raster
    const std::size_t count = static_cast<std::size_t>(width) * height;
    if (bytes.size() < pos + count) throw ImageIoError("truncated PGM raster");
    Image img(static_cast<int>(height), static_cast<int>(width));
    auto px = img.pixels();
    for (std::size_t i = 0; i < count; ++i) px[i] = bytes[pos + i] / 255.0;
    return img;
}

struct PngImage {
    png_image image;
    PngImage() {
        std::memset(&image, 0, sizeof(image));
        image.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

std::string png_error_message(const png_image& image) {
    return image.message[0] != '\0' ? std::string(image.message) : std::string("unknown libpng error");
}

Image decode_png(std::span<const std::uint8_t> bytes) {
    PngImage png;
    if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
        throw ImageIoError("malformed PNG: " + png_error_message(png.image));
    }
    if (png.image.format & PNG_FORMAT_FLAG_LINEAR) {
        throw ImageIoError("unsupported PNG bit depth: 16-bit images are not supported");
    }
    const int width = static_cast<int>(png.image.width);
    const int height = static_cast<int>(png.image.height);
    const bool color = (png.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    std::vector<std::uint8_t> raster(PNG_IMAGE_SIZE(png.image));
    if (!png_image_finish_read(&png.image, nullptr, raster.data(), 0, nullptr)) {
        throw ImageIoError("malformed PNG: " + png_error_message(png.image));
    }

    Image img(height, width);
    auto px = img.pixels();
    if (color) {
        for (std::size_t i = 0; i < px.size(); ++i) {
            const double r = raster[3 * i], g = raster[3 * i + 1], b = raster[3 * i + 2];
            px[i] = (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
        }
    } else {
        for (std::size_t i = 0; i < px.size(); ++i) px[i] = raster[i] / 255.0;
    }
    return img;
}

std::vector<std::uint8_t> png_to_memory(const std::uint8_t* raster, int height, int width, bool rgb) {
    PngImage png;
    png.image.width = static_cast<png_uint_32>(width);
    png.image.height = static_cast<png_uint_32>(height);
    png.image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(png.image, size, 0, raster, 0, nullptr)) {
        throw ImageIoError("PNG encode failed: " + png_error_message(png.image));
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, raster, 0, nullptr)) {
        throw ImageIoError("PNG encode failed: " + png_error_message(png.image));
    }
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> to_bytes(const Image& img) {
    std::vector<std::uint8_t> raster(img.size());
    std::transform(img.pixels().begin(), img.pixels().end(), raster.begin(), to_byte);
    return raster;
}

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
    throw ImageIoError("unrecognized image format (expected PNG or binary PGM)");
}

Image load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_image(bytes);
    } catch (const ImageIoError& e) {
        throw ImageIoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    const auto raster = to_bytes(img);
    return png_to_memory(raster.data(), img.height(), img.width(), false);
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    return png_to_memory(img.data.data(), img.height, img.width, true);
}

std::vector<std::uint8_t> encode_pgm(const Image& img) {
    const std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const auto raster = to_bytes(img);
    out.insert(out.end(), raster.begin(), raster.end());
    return out;
}

RgbImage decode_rgb_png(std::span<const std::uint8_t> bytes) {
    PngImage png;
    if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
        throw ImageIoError("malformed PNG: " + png_error_message(png.image));
    }
    png.image.format = PNG_FORMAT_RGB;
    RgbImage out(static_cast<int>(png.image.height), static_cast<int>(png.image.width));
    if (!png_image_finish_read(&png.image, nullptr, out.data.data(), 0, nullptr)) {
        throw ImageIoError("malformed PNG: " + png_error_message(png.image));
    }
    return out;
}

void save_image(const Image& img, const std::filesystem::path& path) {
    const auto ext = lower_extension(path);
    if (ext == ".png") {
        write_file(path, encode_png(img));
    } else if (ext == ".pgm") {
        write_file(path, encode_pgm(img));
    } else {
        throw ImageIoError("unsupported output extension '" + ext + "' (use .png or .pgm)");
    }
}

void save_rgb_png(const RgbImage& img, const std::filesystem::path& path) { write_file(path, encode_png(img)); }

}  // namespace ccid

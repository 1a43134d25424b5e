#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccid {

/// Thrown for violated preconditions on public entry points.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Grayscale raster, row-major, nominal range [0,1]. Values may leave the
/// nominal range after arithmetic; only I/O clamps.
class Image {
public:
    Image() = default;
    Image(int height, int width, double fill = 0.0);
    Image(int height, int width, std::vector<double> pixels);

    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] std::size_t size() const noexcept { return pixels_.size(); }
    [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

    double& operator()(int y, int x) noexcept { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    double operator()(int y, int x) const noexcept { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    [[nodiscard]] std::span<double> pixels() noexcept { return pixels_; }
    [[nodiscard]] std::span<const double> pixels() const noexcept { return pixels_; }
    [[nodiscard]] std::span<double> row(int y) noexcept {
        return {pixels_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }
    [[nodiscard]] std::span<const double> row(int y) const noexcept {
        return {pixels_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }

    [[nodiscard]] bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    /// Copy of the rectangle [y0, y0+h) x [x0, x0+w); must lie inside the image.
    [[nodiscard]] Image crop(int y0, int x0, int h, int w) const;
    /// Writes `patch` with its top-left corner at (y0, x0), clipped to this image.
    void paste(const Image& patch, int y0, int x0);

    friend bool operator==(const Image&, const Image&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> pixels_;
};

void require_same_shape(const Image& a, const Image& b, const char* what);

/// Index in [0, n) for a reflect-101 extension (…2 1 | 0 1 2 … n-1 | n-2 …).
[[nodiscard]] int reflect_index(int i, int n) noexcept;

/// Reflect-101 padding on the bottom and right edges up to the given size.
[[nodiscard]] Image pad_reflect(const Image& img, int new_height, int new_width);

/// SplitMix64 generator. Satisfies UniformRandomBitGenerator so it plugs into
/// <random> distributions; the seed fully determines the stream.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Mixes several 64-bit words into one seed; used to derive per-item streams.
[[nodiscard]] std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) noexcept;

enum class NoiseKind { gaussian, poisson };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double sigma = 25.0;  ///< 8-bit scale, [0, 100]
    std::uint64_t seed = 0;
};

[[nodiscard]] NoiseKind parse_noise_kind(const std::string& name);
[[nodiscard]] std::string to_string(NoiseKind kind);

/// Poisson photon scale Q that makes the image-average std equal sigma/255.
[[nodiscard]] double poisson_scale(const Image& img, double sigma);

/// Synthetic degradation y = x + n. Gaussian adds i.i.d. N(0, (sigma/255)^2);
/// Poisson returns Poisson(x*Q)/Q with Q from poisson_scale().
[[nodiscard]] Image add_noise(const Image& img, const NoiseSpec& spec);

/// All size x size windows at stride multiples, row-major; remainders dropped.
[[nodiscard]] std::vector<Image> extract_patches(const Image& img, int size, int stride);

/// Top-left offsets matching extract_patches(), as (y, x) pairs.
[[nodiscard]] std::vector<std::pair<int, int>> patch_offsets(int height, int width, int size, int stride);

/// Dihedral group element: index = rotation (index % 4, counter-clockwise
/// quarter turns) followed by a horizontal flip when index >= 4.
[[nodiscard]] Image augment_dihedral(const Image& img, int index);
/// Index of the inverse element, so augment(augment(x, k), inverse(k)) == x.
[[nodiscard]] int dihedral_inverse(int index);

/// Catmull-Rom bicubic (a = -0.5), half-pixel-centre mapping, edge clamped.
[[nodiscard]] Image resize_bicubic(const Image& img, int new_height, int new_width);

[[nodiscard]] Image clamp01(const Image& img);
[[nodiscard]] double mean(const Image& img);

}  // namespace ccid

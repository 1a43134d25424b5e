#include "ccid/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace ccid {

Image::Image(int height, int width, double fill) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) {
        throw InvalidArgument("image dimensions must be positive, got " + std::to_string(height) + "x" +
                              std::to_string(width));
    }
    pixels_.assign(static_cast<std::size_t>(height) * width, fill);
}

Image::Image(int height, int width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
    if (height <= 0 || width <= 0) {
        throw InvalidArgument("image dimensions must be positive");
    }
    if (pixels_.size() != static_cast<std::size_t>(height) * width) {
        throw InvalidArgument("pixel count " + std::to_string(pixels_.size()) + " does not match " +
                              std::to_string(height) + "x" + std::to_string(width));
    }
}

Image Image::crop(int y0, int x0, int h, int w) const {
    if (y0 < 0 || x0 < 0 || h <= 0 || w <= 0 || y0 + h > height_ || x0 + w > width_) {
        throw InvalidArgument("crop rectangle outside image");
    }
    Image out(h, w);
    for (int y = 0; y < h; ++y) {
        auto src = row(y0 + y).subspan(x0, w);
        std::copy(src.begin(), src.end(), out.row(y).begin());
    }
    return out;
}

void Image::paste(const Image& patch, int y0, int x0) {
    const int y1 = std::min(height_, y0 + patch.height());
    const int x1 = std::min(width_, x0 + patch.width());
    for (int y = std::max(0, y0); y < y1; ++y) {
        for (int x = std::max(0, x0); x < x1; ++x) {
            (*this)(y, x) = patch(y - y0, x - x0);
        }
    }
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw InvalidArgument(std::string(what) + ": dimension mismatch " + std::to_string(a.height()) + "x" +
                              std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                              std::to_string(b.width()));
    }
}

int reflect_index(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

Image pad_reflect(const Image& img, int new_height, int new_width) {
    if (new_height < img.height() || new_width < img.width()) {
        throw InvalidArgument("pad_reflect cannot shrink an image");
    }
    if (new_height == img.height() && new_width == img.width()) return img;
    Image out(new_height, new_width);
    for (int y = 0; y < new_height; ++y) {
        const int sy = reflect_index(y, img.height());
        for (int x = 0; x < new_width; ++x) {
            out(y, x) = img(sy, reflect_index(x, img.width()));
        }
    }
    return out;
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (auto w : words) {
        SplitMix64 g(h ^ w);
        h = g();
    }
    return h;
}

NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "poisson") return NoiseKind::poisson;
    throw InvalidArgument("unknown noise kind '" + name + "' (expected gaussian or poisson)");
}

std::string to_string(NoiseKind kind) { return kind == NoiseKind::gaussian ? "gaussian" : "poisson"; }

double poisson_scale(const Image& img, double sigma) {
    constexpr double tau = 1e-3;
    double acc = 0.0;
    for (double v : img.pixels()) acc += std::sqrt(std::max(v, tau));
    const double mean_root = acc / static_cast<double>(img.size());
    const double q = mean_root * 255.0 / sigma;
    return q * q;
}

Image add_noise(const Image& img, const NoiseSpec& spec) {
    if (!(spec.sigma >= 0.0 && spec.sigma <= 100.0)) {
        throw InvalidArgument("noise sigma must lie in [0, 100], got " + std::to_string(spec.sigma));
    }
    if (spec.sigma == 0.0) return img;

    SplitMix64 rng(spec.seed);
    Image out = img;
    if (spec.kind == NoiseKind::gaussian) {
        std::normal_distribution<double> normal(0.0, spec.sigma / 255.0);
        for (double& v : out.pixels()) v += normal(rng);
        return out;
    }

    const double q = poisson_scale(img, spec.sigma);
    for (double& v : out.pixels()) {
        const double rate = std::max(v, 0.0) * q;
        if (rate <= 0.0) {
            v = 0.0;
            continue;
        }
        std::poisson_distribution<long long> poisson(rate);
        v = static_cast<double>(poisson(rng)) / q;
    }
    return out;
}

std::vector<std::pair<int, int>> patch_offsets(int height, int width, int size, int stride) {
    if (size <= 0 || size > std::min(height, width)) {
        throw InvalidArgument("patch size " + std::to_string(size) + " invalid for " + std::to_string(height) +
                              "x" + std::to_string(width) + " image");
    }
    if (stride < 1) throw InvalidArgument("patch stride must be >= 1");
    std::vector<std::pair<int, int>> offsets;
    for (int y = 0; y + size <= height; y += stride) {
        for (int x = 0; x + size <= width; x += stride) offsets.emplace_back(y, x);
    }
    return offsets;
}

std::vector<Image> extract_patches(const Image& img, int size, int stride) {
    std::vector<Image> patches;
    for (auto [y, x] : patch_offsets(img.height(), img.width(), size, stride)) {
        patches.push_back(img.crop(y, x, size, size));
    }
    return patches;
}

namespace {

// One counter-clockwise quarter turn.
Image rotate90(const Image& img) {
    const int h = img.height();
    const int w = img.width();
    Image out(w, h);
    for (int y = 0; y < w; ++y) {
        for (int x = 0; x < h; ++x) out(y, x) = img(x, w - 1 - y);
    }
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out = img;
    for (int y = 0; y < img.height(); ++y) {
        auto r = out.row(y);
        std::reverse(r.begin(), r.end());
    }
    return out;
}

}  // namespace

Image augment_dihedral(const Image& img, int index) {
    if (index < 0 || index > 7) {
        throw InvalidArgument("dihedral index must be in [0, 7], got " + std::to_string(index));
    }
    Image out = img;
    for (int r = 0; r < index % 4; ++r) out = rotate90(out);
    if (index >= 4) out = flip_horizontal(out);
    return out;
}

int dihedral_inverse(int index) {
    if (index < 0 || index > 7) throw InvalidArgument("dihedral index must be in [0, 7]");
    if (index >= 4) return index;  // reflections are involutions
    return (4 - index) % 4;
}

namespace {

double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

struct Taps {
    std::array<int, 4> index;
    std::array<double, 4> weight;
};

std::vector<Taps> cubic_taps(int in_size, int out_size) {
    std::vector<Taps> taps(out_size);
    const double scale = static_cast<double>(in_size) / out_size;
    for (int o = 0; o < out_size; ++o) {
        const double src = (o + 0.5) * scale - 0.5;
        const double base = std::floor(src);
        const double t = src - base;
        for (int k = 0; k < 4; ++k) {
            const int i = static_cast<int>(base) - 1 + k;
            taps[o].index[k] = std::clamp(i, 0, in_size - 1);
            taps[o].weight[k] = cubic_weight(t - (k - 1));
        }
    }
    return taps;
}

}  // namespace

Image resize_bicubic(const Image& img, int new_height, int new_width) {
    if (new_height < 1 || new_width < 1) throw InvalidArgument("resize target must be at least 1x1");
    if (new_height == img.height() && new_width == img.width()) return img;

    const auto row_taps = cubic_taps(img.width(), new_width);
    const auto col_taps = cubic_taps(img.height(), new_height);

    Image horizontal(img.height(), new_width);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < new_width; ++x) {
            const auto& t = row_taps[x];
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += t.weight[k] * img(y, t.index[k]);
            horizontal(y, x) = acc;
        }
    }
    Image out(new_height, new_width);
    for (int y = 0; y < new_height; ++y) {
        const auto& t = col_taps[y];
        for (int x = 0; x < new_width; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += t.weight[k] * horizontal(t.index[k], x);
            out(y, x) = acc;
        }
    }
    return out;
}

Image clamp01(const Image& img) {
    Image out = img;
    for (double& v : out.pixels()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

double mean(const Image& img) {
    double acc = 0.0;
    for (double v : img.pixels()) acc += v;
    return acc / static_cast<double>(img.size());
}

}  // namespace ccid

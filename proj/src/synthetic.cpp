#include "ccid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ccid {

namespace {

// Bilinearly interpolated lattice noise with `cells` cells across the image.
Image value_noise(int height, int width, int cells, SplitMix64& rng) {
    const int gh = cells + 2;
    const int gw = cells + 2;
    std::vector<double> lattice(static_cast<std::size_t>(gh) * gw);
    for (double& v : lattice) v = rng.uniform() * 2.0 - 1.0;
    Image out(height, width);
    for (int y = 0; y < height; ++y) {
        const double fy = static_cast<double>(y) / height * cells;
        const int iy = static_cast<int>(fy);
        const double ty = fy - iy;
        const double sy = ty * ty * (3.0 - 2.0 * ty);
        for (int x = 0; x < width; ++x) {
            const double fx = static_cast<double>(x) / width * cells;
            const int ix = static_cast<int>(fx);
            const double tx = fx - ix;
            const double sx = tx * tx * (3.0 - 2.0 * tx);
            auto at = [&](int yy, int xx) { return lattice[static_cast<std::size_t>(yy) * gw + xx]; };
            const double top = at(iy, ix) * (1 - sx) + at(iy, ix + 1) * sx;
            const double bottom = at(iy + 1, ix) * (1 - sx) + at(iy + 1, ix + 1) * sx;
            out(y, x) = top * (1 - sy) + bottom * sy;
        }
    }
    return out;
}

}  // namespace

Image synthetic_scene(int height, int width, std::uint64_t seed) {
    SplitMix64 rng(mix_seed({seed, 0x5CE7E5EEDULL}));
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };

    Image img(height, width);
    const double scale = std::max(height, width);

    // Illumination: tilted plane plus a broad bump.
    const double base = uni(0.3, 0.7);
    const double gy = uni(-0.3, 0.3);
    const double gx = uni(-0.3, 0.3);
    const Image broad = value_noise(height, width, 2, rng);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            img(y, x) = base + gy * (y / scale - 0.5) + gx * (x / scale - 0.5) + 0.12 * broad(y, x);
        }
    }

    // Overlapping shapes with hard edges; some flat, some shaded.
    const int shapes = 4 + static_cast<int>(rng() % 6);
    for (int s = 0; s < shapes; ++s) {
        const double cy = uni(0.0, height);
        const double cx = uni(0.0, width);
        const double ry = uni(0.08, 0.35) * scale;
        const double rx = uni(0.08, 0.35) * scale;
        const double angle = uni(0.0, std::numbers::pi);
        const double level = uni(0.1, 0.9);
        const double shade = uni(-0.25, 0.25);
        const bool ellipse = rng() % 2 == 0;
        const double ca = std::cos(angle);
        const double sa = std::sin(angle);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double dy = y - cy;
                const double dx = x - cx;
                const double u = (ca * dx + sa * dy) / rx;
                const double v = (-sa * dx + ca * dy) / ry;
                const bool inside = ellipse ? (u * u + v * v <= 1.0) : (std::abs(u) <= 1.0 && std::abs(v) <= 0.6);
                if (inside) img(y, x) = level + shade * v;
            }
        }
    }

    // Oriented gratings confined to soft discs.
    const int gratings = 1 + static_cast<int>(rng() % 3);
    for (int g = 0; g < gratings; ++g) {
        const double cy = uni(0.0, height);
        const double cx = uni(0.0, width);
        const double radius = uni(0.12, 0.3) * scale;
        const double period = uni(3.0, 9.0);
        const double theta = uni(0.0, std::numbers::pi);
        const double amp = uni(0.06, 0.18);
        const double ky = std::sin(theta) * 2.0 * std::numbers::pi / period;
        const double kx = std::cos(theta) * 2.0 * std::numbers::pi / period;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double d2 = ((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (radius * radius);
                if (d2 < 1.0) img(y, x) += amp * std::sin(ky * y + kx * x) * (1.0 - d2);
            }
        }
    }

    // Fine texture: a few octaves of lattice noise.
    double amp = 0.04;
    for (int cells = std::max(4, width / 16); cells <= width / 2; cells *= 2) {
        const Image octave = value_noise(height, width, cells, rng);
        for (std::size_t i = 0; i < img.size(); ++i) img.pixels()[i] += amp * octave.pixels()[i];
        amp *= 0.6;
    }

    for (double& v : img.pixels()) v = std::clamp(v, 0.05, 0.95);
    return img;
}

std::vector<Image> synthetic_corpus(int count, int height, int width, std::uint64_t seed) {
    std::vector<Image> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(synthetic_scene(height, width, mix_seed({seed, std::uint64_t(i)})));
    return out;
}

}  // namespace ccid

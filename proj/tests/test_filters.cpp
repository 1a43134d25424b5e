#include <doctest.h>

#include <cmath>

#include "ccid/filters.hpp"
#include "ccid/metrics.hpp"
#include "ccid/synthetic.hpp"
#include "test_support.hpp"

using namespace ccid;
using ccid::testing::max_abs_diff;
using ccid::testing::random_image;

namespace {

// Direct NLM: double loops over window candidates and patch offsets.
Image brute_force_nlm(const Image& img, int patch, int window, double h) {
    const int pr = patch / 2;
    const int wr = window / 2;
    const int H = img.height();
    const int W = img.width();
    auto v = [&](int y, int x) { return img(reflect_index(y, H), reflect_index(x, W)); };
    Image out(H, W);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double num = 0.0;
            double den = 0.0;
            for (int oy = -wr; oy <= wr; ++oy) {
                for (int ox = -wr; ox <= wr; ++ox) {
                    double ssd = 0.0;
                    for (int ky = -pr; ky <= pr; ++ky) {
                        for (int kx = -pr; kx <= pr; ++kx) {
                            const double d = v(y + ky, x + kx) - v(y + oy + ky, x + ox + kx);
                            ssd += d * d;
                        }
                    }
                    const double wgt = std::exp(-(ssd / (patch * patch)) / (h * h));
                    num += wgt * v(y + oy, x + ox);
                    den += wgt;
                }
            }
            out(y, x) = num / den;
        }
    }
    return out;
}

// Non-separable 2-D Gaussian convolution with reflect borders.
Image brute_force_gaussian(const Image& img, double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k2((2 * r + 1) * (2 * r + 1));
    double sum = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
            k2[(dy + r) * (2 * r + 1) + dx + r] = v;
            sum += v;
        }
    }
    Image out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    acc += k2[(dy + r) * (2 * r + 1) + dx + r] / sum *
                           img(reflect_index(y + dy, img.height()), reflect_index(x + dx, img.width()));
                }
            }
            out(y, x) = acc;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("gaussian kernel radius and normalization") {
    const auto taps = gaussian_kernel(2.0);
    CHECK(taps.size() == 13);  // ceil(3*2) = 6
    double sum = 0.0;
    for (double t : taps) sum += t;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(gaussian_kernel(1.5).size() == 11);
    CHECK_THROWS_AS((void)gaussian_kernel(0.0), InvalidArgument);
}

TEST_CASE("gaussian filter: impulse response equals the squared kernel peak") {
    Image impulse(33, 33, 0.0);
    impulse(16, 16) = 1.0;
    const Image out = gaussian_filter(impulse, 2.0);
    const auto taps = gaussian_kernel(2.0);
    const double peak = taps[taps.size() / 2];
    CHECK(out(16, 16) == doctest::Approx(peak * peak).epsilon(1e-14));
    CHECK(max_abs_diff(out, brute_force_gaussian(impulse, 2.0)) < 1e-14);
}

TEST_CASE("gaussian filter matches the 2-D brute force with reflect borders") {
    const Image img = random_image(14, 11, 21);
    CHECK(max_abs_diff(gaussian_filter(img, 1.3), brute_force_gaussian(img, 1.3)) < 1e-13);
}

TEST_CASE("gaussian filter preserves the mean when the border band is flat") {
    // Reflect padding only redistributes weight near the border, so the mean
    // is exact once the band within the kernel radius is constant.
    Image img(40, 40, 0.4);
    const Image inner = random_image(20, 20, 5);
    img.paste(inner, 10, 10);
    const Image out = gaussian_filter(img, 2.0);
    CHECK(std::abs(mean(out) - mean(img)) < 1e-6);
}

TEST_CASE("stronger blur lowers PSNR against the original") {
    const Image scene = synthetic_scene(64, 64, 3);
    CHECK(psnr(gaussian_filter(scene, 4.0), scene) < psnr(gaussian_filter(scene, 1.0), scene));
}

TEST_CASE("all filters are idempotent on constant images") {
    const Image flat(20, 17, 0.37);
    CHECK(max_abs_diff(gaussian_filter(flat, 1.5), flat) < 1e-14);
    CHECK(max_abs_diff(bilateral_filter(flat, 2.0, 0.1), flat) < 1e-14);
    CHECK(max_abs_diff(nlm_filter(flat, 3, 7, 0.08), flat) < 1e-14);
}

TEST_CASE("bilateral with a huge range sigma degenerates to the gaussian") {
    const Image img = random_image(24, 19, 8);
    CHECK(max_abs_diff(bilateral_filter(img, 1.5, 1e6), gaussian_filter(img, 1.5)) < 1e-6);
}

TEST_CASE("bilateral preserves a step edge") {
    Image step(9, 16, 0.0);
    for (int y = 0; y < 9; ++y) {
        for (int x = 8; x < 16; ++x) step(y, x) = 1.0;
    }
    const Image out = bilateral_filter(step, 2.0, 0.05);
    for (int y = 0; y < 9; ++y) {
        CHECK(std::abs(out(y, 7) - 0.0) < 0.05);
        CHECK(std::abs(out(y, 8) - 1.0) < 0.05);
    }
    CHECK_THROWS_AS((void)bilateral_filter(step, 0.0, 0.1), InvalidArgument);
}

TEST_CASE("nlm matches a brute-force double loop") {
    const Image clean = synthetic_scene(16, 16, 4);
    const Image noisy = add_noise(clean, {NoiseKind::gaussian, 25.0, 3});
    CHECK(max_abs_diff(nlm_filter(noisy, 3, 7, 0.08), brute_force_nlm(noisy, 3, 7, 0.08)) < 1e-9);
    CHECK(max_abs_diff(nlm_filter(noisy, 5, 9, 0.1), brute_force_nlm(noisy, 5, 9, 0.1)) < 1e-9);
}

TEST_CASE("nlm gives a pixel's twin the same weight as itself") {
    const Image half = random_image(16, 16, 31);
    Image twins(16, 32);
    twins.paste(half, 0, 0);
    twins.paste(half, 0, 16);
    const int y = 7;
    const int x = 6;  // patch (radius 3) stays inside the left half
    const Image weights = nlm_weights(twins, y, x, 7, 33, 0.08);
    const double self = weights(16, 16);
    const double twin = weights(16, 16 + 16);
    CHECK(self == 1.0);
    CHECK(twin == doctest::Approx(self).epsilon(1e-15));
}

TEST_CASE("nlm rejects even sizes") {
    CHECK_THROWS_AS((void)nlm_filter(Image(8, 8), 4, 7, 0.1), InvalidArgument);
    CHECK_THROWS_AS((void)nlm_filter(Image(8, 8), 3, 6, 0.1), InvalidArgument);
    CHECK_THROWS_AS((void)nlm_filter(Image(8, 8), 3, 7, 0.0), InvalidArgument);
}

TEST_CASE("every filter reduces MSE on a noisy constant image") {
    const Image flat(48, 48, 0.5);
    const Image noisy = add_noise(flat, {NoiseKind::gaussian, 25.0, 77});
    const double before = mse(noisy, flat);
    CHECK(mse(gaussian_filter(noisy, 1.5), flat) < before);
    CHECK(mse(bilateral_filter(noisy, 2.0, 0.2), flat) < before);
    ReliableFilterSpec nlm;
    nlm.kind = ReliableKind::nlm;
    CHECK(mse(reliable_denoise(noisy, nlm), flat) < before);
}

TEST_CASE("reliable_denoise dispatch") {
    const Image img = random_image(32, 32, 12);
    ReliableFilterSpec spec;
    spec.gaussian_sigma = 4.0;
    CHECK(reliable_denoise(img, spec) == gaussian_filter(img, 4.0));

    spec.kind = ReliableKind::bicubic_upscale;
    spec.scale = 4;
    const Image up = reliable_denoise(img, spec);
    CHECK(up.height() == 128);
    CHECK(up.width() == 128);
    CHECK(up == resize_bicubic(img, 128, 128));

    spec.scale = 5;
    CHECK_THROWS_AS((void)reliable_denoise(img, spec), InvalidArgument);
    spec = {};
    spec.gaussian_sigma = -1.0;
    CHECK_THROWS_AS((void)reliable_denoise(img, spec), InvalidArgument);
    CHECK(parse_reliable_kind("nlm") == ReliableKind::nlm);
    CHECK_THROWS_AS((void)parse_reliable_kind("bm3d"), InvalidArgument);
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ccid/transforms.hpp"
#include "test_support.hpp"

using namespace ccid;
using ccid::testing::max_abs_diff;
using ccid::testing::random_image;

namespace {

// Direct evaluation of the 2-D DCT-II sum with orthonormal a(u).
DctSpectrum brute_force_dct(const Image& img) {
    const int n = img.height();
    const int m = img.width();
    DctSpectrum out(n, m);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < m; ++v) {
            const double au = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            const double av = v == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < m; ++j) {
                    acc += img(i, j) * std::cos(std::numbers::pi * u / (2.0 * n) * (2 * i + 1)) *
                           std::cos(std::numbers::pi * v / (2.0 * m) * (2 * j + 1));
                }
            }
            out(u, v) = au * av * acc;
        }
    }
    return out;
}

double energy(const Image& img) {
    double e = 0.0;
    for (double v : img.pixels()) e += v * v;
    return e;
}

}  // namespace

TEST_CASE("dct2 of a constant image is DC only") {
    const Image flat(6, 10, 0.7);
    const DctSpectrum f = dct2(flat);
    CHECK(f(0, 0) == doctest::Approx(0.7 * std::sqrt(60.0)).epsilon(1e-14));
    for (std::size_t i = 1; i < f.coeffs.size(); ++i) CHECK(std::abs(f.coeffs[i]) < 1e-9);
}

TEST_CASE("dct2 matches the brute-force sum") {
    for (auto [h, w] : {std::pair{4, 4}, std::pair{5, 3}, std::pair{1, 6}}) {
        const Image img = random_image(h, w, 100 + h * 10 + w);
        const DctSpectrum fast = dct2(img);
        const DctSpectrum slow = brute_force_dct(img);
        for (std::size_t i = 0; i < fast.coeffs.size(); ++i) {
            CHECK(std::abs(fast.coeffs[i] - slow.coeffs[i]) < 1e-9);
        }
    }
}

TEST_CASE("dct2 and idct2 are inverse and energy preserving") {
    const Image img = random_image(64, 48, 5);
    const DctSpectrum f = dct2(img);
    CHECK(max_abs_diff(idct2(f), img) < 1e-9);
    double coeff_energy = 0.0;
    for (double c : f.coeffs) coeff_energy += c * c;
    CHECK(std::abs(coeff_energy - energy(img)) / energy(img) < 1e-9);

    DctSpectrum s(5, 7);
    SplitMix64 rng(3);
    for (double& c : s.coeffs) c = rng.uniform() - 0.5;
    const DctSpectrum back = dct2(idct2(s));
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) CHECK(std::abs(back.coeffs[i] - s.coeffs[i]) < 1e-9);
}

TEST_CASE("idct2 of a DC spectrum is constant, and it is linear") {
    DctSpectrum dc(4, 6);
    dc(0, 0) = std::sqrt(24.0) * 0.25;
    const Image flat = idct2(dc);
    for (double v : flat.pixels()) CHECK(v == doctest::Approx(0.25).epsilon(1e-13));

    DctSpectrum a(8, 8);
    DctSpectrum b(8, 8);
    SplitMix64 rng(17);
    for (double& c : a.coeffs) c = rng.uniform();
    for (double& c : b.coeffs) c = rng.uniform();
    DctSpectrum combo(8, 8);
    for (std::size_t i = 0; i < combo.coeffs.size(); ++i) combo.coeffs[i] = 2.5 * a.coeffs[i] - 0.75 * b.coeffs[i];
    const Image lhs = idct2(combo);
    const Image ia = idct2(a);
    const Image ib = idct2(b);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        CHECK(std::abs(lhs.pixels()[i] - (2.5 * ia.pixels()[i] - 0.75 * ib.pixels()[i])) < 1e-9);
    }
}

TEST_CASE("one-level Haar on a 2x2 block matches hand computation") {
    const double a = 0.9, b = 0.2, c = 0.4, d = 0.7;
    const Image block(2, 2, std::vector<double>{a, b, c, d});
    const WaveletPyramid p = dwt2(block, Wavelet::haar, 1);
    REQUIRE(p.details.size() == 1);
    CHECK(p.approx(0, 0) == doctest::Approx((a + b + c + d) / 2).epsilon(1e-15));
    CHECK(p.details[0].horizontal(0, 0) == doctest::Approx(((a + c) - (b + d)) / 2).epsilon(1e-15));
    CHECK(p.details[0].vertical(0, 0) == doctest::Approx(((a + b) - (c + d)) / 2).epsilon(1e-15));
    CHECK(p.details[0].diagonal(0, 0) == doctest::Approx((a - b - c + d) / 2).epsilon(1e-15));
}

TEST_CASE("constant image has zero details and scaled approximation") {
    const Image flat(32, 32, 0.3);
    for (Wavelet wv : {Wavelet::haar, Wavelet::db2}) {
        for (int levels = 1; levels <= 3; ++levels) {
            const WaveletPyramid p = dwt2(flat, wv, levels);
            for (double v : p.approx.pixels()) CHECK(v == doctest::Approx(0.3 * std::pow(2.0, levels)).epsilon(1e-12));
            for (const auto& bands : p.details) {
                for (const Image* band : {&bands.horizontal, &bands.vertical, &bands.diagonal}) {
                    for (double v : band->pixels()) CHECK(std::abs(v) < 1e-12);
                }
            }
            CHECK(max_abs_diff(idwt2(p), flat) < 1e-12);
        }
    }
}

TEST_CASE("dwt2/idwt2 perfect reconstruction and Parseval") {
    const Image img = random_image(64, 64, 77);
    for (Wavelet wv : {Wavelet::haar, Wavelet::db2}) {
        for (int levels = 1; levels <= 3; ++levels) {
            const WaveletPyramid p = dwt2(img, wv, levels);
            CHECK(max_abs_diff(idwt2(p), img) < 1e-9);
            CHECK(std::abs(p.energy() - energy(img)) / energy(img) < 1e-9);
        }
    }
}

TEST_CASE("odd sizes reconstruct exactly through reflect padding") {
    for (auto [h, w] : {std::pair{37, 29}, std::pair{9, 8}, std::pair{15, 23}}) {
        const Image img = random_image(h, w, h * 100 + w);
        for (Wavelet wv : {Wavelet::haar, Wavelet::db2}) {
            const int levels = std::min(3, max_dwt_levels(h, w));
            const WaveletPyramid p = dwt2(img, wv, levels);
            CHECK(max_abs_diff(idwt2(p), img) < 1e-9);
        }
    }
    const WaveletPyramid p = dwt2(random_image(37, 29, 1), Wavelet::haar, 3);
    CHECK(p.details[2].horizontal.height() == 19);  // ceil(37/2)
    CHECK(p.details[1].horizontal.height() == 10);
    CHECK(p.details[0].horizontal.height() == 5);
    CHECK(p.approx.width() == 4);  // 29 -> 15 -> 8 -> 4
}

TEST_CASE("dwt2 is linear") {
    const Image x = random_image(16, 16, 1);
    const Image y = random_image(16, 16, 2);
    Image combo(16, 16);
    for (std::size_t i = 0; i < combo.size(); ++i) combo.pixels()[i] = 0.3 * x.pixels()[i] + 1.7 * y.pixels()[i];
    const WaveletPyramid pc = dwt2(combo, Wavelet::db2, 2);
    const WaveletPyramid px = dwt2(x, Wavelet::db2, 2);
    const WaveletPyramid py = dwt2(y, Wavelet::db2, 2);
    for (std::size_t i = 0; i < pc.approx.size(); ++i) {
        CHECK(std::abs(pc.approx.pixels()[i] - (0.3 * px.approx.pixels()[i] + 1.7 * py.approx.pixels()[i])) < 1e-9);
    }
    for (std::size_t i = 0; i < pc.details[1].diagonal.size(); ++i) {
        CHECK(std::abs(pc.details[1].diagonal.pixels()[i] -
                       (0.3 * px.details[1].diagonal.pixels()[i] + 1.7 * py.details[1].diagonal.pixels()[i])) < 1e-9);
    }
}

TEST_CASE("dwt2 rejects too many levels and idwt2 rejects broken pyramids") {
    CHECK(max_dwt_levels(8, 8) == 3);
    CHECK_THROWS_AS((void)dwt2(Image(8, 8), Wavelet::haar, 4), InvalidArgument);
    CHECK_THROWS_AS((void)dwt2(Image(8, 8), Wavelet::haar, 0), InvalidArgument);
    WaveletPyramid p = dwt2(random_image(16, 16, 3), Wavelet::haar, 2);
    p.details[0].diagonal = Image(3, 3);
    CHECK_THROWS_AS((void)idwt2(p), InvalidArgument);
}

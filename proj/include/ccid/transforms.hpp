#pragma once

#include <string>
#include <vector>

#include "ccid/image.hpp"

namespace ccid {

/// Full-image orthonormal type-II DCT coefficients, row-major F(u, v) with
/// u the vertical and v the horizontal frequency index.
struct DctSpectrum {
    int height = 0;
    int width = 0;
    std::vector<double> coeffs;

    DctSpectrum() = default;
    DctSpectrum(int h, int w) : height(h), width(w), coeffs(static_cast<std::size_t>(h) * w, 0.0) {}

    double& operator()(int u, int v) noexcept { return coeffs[static_cast<std::size_t>(u) * width + v]; }
    double operator()(int u, int v) const noexcept { return coeffs[static_cast<std::size_t>(u) * width + v]; }
};

/// F(u,v) = a(u) a(v) sum_ij f(i,j) cos(pi u (2i+1) / 2N) cos(pi v (2j+1) / 2M),
/// a(0) = sqrt(1/N), a(u>0) = sqrt(2/N).
[[nodiscard]] DctSpectrum dct2(const Image& img);
[[nodiscard]] Image idct2(const DctSpectrum& spectrum);

enum class Wavelet { haar, db2 };

[[nodiscard]] Wavelet parse_wavelet(const std::string& name);
[[nodiscard]] std::string to_string(Wavelet w);

/// Analysis low-pass taps of the orthonormal wavelet.
[[nodiscard]] std::vector<double> wavelet_lowpass(Wavelet w);

/// Detail bands of one decomposition level.
///
/// Band naming for the 2x2 Haar block {{a, b}, {c, d}}:
///   horizontal = ((a + c) - (b + d)) / 2   (high-pass along rows)
///   vertical   = ((a + b) - (c + d)) / 2   (high-pass along columns)
///   diagonal   = (a - b - c + d) / 2
/// and approx = (a + b + c + d) / 2.
struct DetailBands {
    Image horizontal;
    Image vertical;
    Image diagonal;
    int source_height = 0;  ///< size of the signal decomposed at this level,
    int source_width = 0;   ///< before reflect padding to even length
};

/// Multilevel separable DWT with periodic extension. Odd-sized signals are
/// reflect-padded to even length first; the original sizes are kept so that
/// reconstruction crops back exactly.
struct WaveletPyramid {
    Wavelet wavelet = Wavelet::haar;
    int levels = 0;
    Image approx;
    std::vector<DetailBands> details;  ///< coarsest (level L) first, finest (level 1) last

    /// Sum of squared coefficients over all bands.
    [[nodiscard]] double energy() const;
};

[[nodiscard]] WaveletPyramid dwt2(const Image& img, Wavelet wavelet, int levels);
[[nodiscard]] Image idwt2(const WaveletPyramid& pyramid);

/// Largest level count accepted by dwt2 for the given image size.
[[nodiscard]] int max_dwt_levels(int height, int width) noexcept;

}  // namespace ccid

#pragma once

#include <string>
#include <vector>

#include "ccid/image.hpp"

namespace ccid {

enum class ReliableKind { gaussian, bilateral, nlm, bicubic_upscale };

[[nodiscard]] ReliableKind parse_reliable_kind(const std::string& name);
[[nodiscard]] std::string to_string(ReliableKind kind);

/// Parameters for the "reliable" (low-prior) restoration path.
struct ReliableFilterSpec {
    ReliableKind kind = ReliableKind::gaussian;
    double gaussian_sigma = 1.5;
    double bilateral_sigma_space = 2.0;
    double bilateral_sigma_range = 0.1;
    int nlm_patch = 7;
    int nlm_window = 21;
    double nlm_h = 0.08;
    int scale = 4;  ///< bicubic_upscale only

    void validate() const;
    /// Stable textual form, used as a cache key.
    [[nodiscard]] std::string key() const;
};

/// Normalized 1-D Gaussian taps over [-r, r], r = ceil(3 sigma).
[[nodiscard]] std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with reflect-101 borders.
[[nodiscard]] Image gaussian_filter(const Image& img, double sigma);

/// Bilateral filter; spatial window radius ceil(3 sigma_space), reflect borders.
[[nodiscard]] Image bilateral_filter(const Image& img, double sigma_space, double sigma_range);

/// Plain non-local means: weight exp(-d2 / h^2) with d2 the mean squared
/// difference between the patches around the pixel and the candidate.
[[nodiscard]] Image nlm_filter(const Image& img, int patch, int window, double h);

/// Unnormalized NLM weights of every window candidate for pixel (y, x), as a
/// window x window grid centred on the pixel.
[[nodiscard]] Image nlm_weights(const Image& img, int y, int x, int patch, int window, double h);

[[nodiscard]] Image reliable_denoise(const Image& img, const ReliableFilterSpec& spec);

}  // namespace ccid

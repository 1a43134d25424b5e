#pragma once

#include <string>
#include <vector>

#include "ccid/confidence_map.hpp"
#include "ccid/image.hpp"
#include "ccid/transforms.hpp"

namespace ccid {

enum class FusionMethod { dwt, dwt_corr, dct };

[[nodiscard]] FusionMethod parse_fusion_method(const std::string& name);
[[nodiscard]] std::string to_string(FusionMethod method);

/// Fusion weight w steers from the reliable image (0) to the hallucinatory
/// image (1).
struct FusionParams {
    FusionMethod method = FusionMethod::dct;
    double weight = 0.5;
    bool guided = false;
    double threshold = 0.8;
    double mask_scale = 0.1;  ///< a
    double mask_eps = 1e-3;   ///< epsilon
    double corr_eps = 1e-6;
    int levels = 3;
    Wavelet wavelet = Wavelet::haar;

    void validate() const;
};

/// Guided DWT works on 8x8 regions with a 2-level Haar decomposition.
inline constexpr int kPatchLevels = 2;
/// Number of equispaced weight levels used by guided DCT fusion.
inline constexpr int kDctWeightLevels = 17;

/// Gaussian low-pass mask over normalized DCT frequencies (u/h, v/w):
///   M = exp(-(nu_y^2 + nu_x^2) / (2 s)),  s = a (1 / (1 - w + eps) - 1).
/// Defined for w in (0, 1); row-major, h x w.
[[nodiscard]] std::vector<double> dct_mask(int height, int width, double weight, double a, double eps);

/// idct2(R + M o (H - R)); w == 0 and w == 1 return the inputs unchanged.
[[nodiscard]] Image fuse_dct(const Image& reliable, const Image& hallucinatory, const FusionParams& params);

/// Blend factor of DWT band group b (0 = approximation, L = finest details):
/// clamp(w (L + 1) - b, 0, 1). Coarse bands switch to the hallucinatory
/// image first.
[[nodiscard]] double band_alpha(double weight, int levels, int band);

/// Coefficient-wise (1 - alpha_b) r + alpha_b h over an L-level pyramid.
[[nodiscard]] Image fuse_dwt(const Image& reliable, const Image& hallucinatory, const FusionParams& params);

/// Similarity between two detail coefficients, in [0, 1]; 1 when equal.
[[nodiscard]] double coefficient_similarity(double r, double h, double eps);

/// fuse_dwt where each detail coefficient's blend is scaled by
/// (w + (1 - w) m), m = coefficient_similarity(r, h). Agreeing coefficients
/// keep the band schedule; disagreeing ones lean towards the reliable image.
[[nodiscard]] Image fuse_dwt_corr(const Image& reliable, const Image& hallucinatory, const FusionParams& params);

/// Confidence-adjusted weight clamp(w (1 + c - t), 0, 1).
[[nodiscard]] double region_weight(double weight, double confidence, double threshold);

/// Patch-wise DWT fusion with one weight per 8x8 region. Images whose sides
/// are not multiples of 8 are reflect-padded, fused, then cropped.
[[nodiscard]] Image fuse_dwt_regions(const Image& reliable, const Image& hallucinatory, const Image& region_weights,
                                     const FusionParams& params);

/// Patch-wise unguided fusion: every region uses the global weight.
[[nodiscard]] Image fuse_dwt_patchwise(const Image& reliable, const Image& hallucinatory, const FusionParams& params);

/// Patch-wise DWT fusion with region_weight(w, c_region, t) per 8x8 region.
[[nodiscard]] Image fuse_dwt_guided(const Image& reliable, const Image& hallucinatory, const ConfidenceMap& conf,
                                    const FusionParams& params);

/// Confidence map upsampled to pixel resolution (bicubic), clamped to [0,1].
[[nodiscard]] Image upsample_confidence(const ConfidenceMap& conf, int height, int width);

/// Pixel-wise DCT fusion. Per-pixel weights region_weight(w, c_pix, t) are
/// placed on a 17-level grid; fuse_dct runs once per needed level and each
/// pixel interpolates linearly between its two bracketing levels.
[[nodiscard]] Image fuse_dct_guided(const Image& reliable, const Image& hallucinatory, const ConfidenceMap& conf,
                                    const FusionParams& params);

/// Dispatch on params.method / params.guided. Guided fusion needs `conf`.
[[nodiscard]] Image fuse(const Image& reliable, const Image& hallucinatory, const FusionParams& params,
                         const ConfidenceMap* conf = nullptr);

}  // namespace ccid

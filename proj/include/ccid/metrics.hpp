#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ccid/fusion.hpp"
#include "ccid/image.hpp"

namespace ccid {

/// PSNR of identical images. Written as "inf" in CSV and JSON.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// Mean squared difference in [0,1] pixel units.
[[nodiscard]] double mse(const Image& a, const Image& b);

/// 10 log10(1 / mse), peak 1.0; kInfinitePsnr for identical images.
[[nodiscard]] double psnr(const Image& a, const Image& b);
[[nodiscard]] double psnr_from_mse(double mse_value);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Mean SSIM over every fully contained Gaussian window (no padding).
/// Requires both sides >= the window size.
[[nodiscard]] double ssim(const Image& a, const Image& b, const SsimOptions& opts = {});

struct QualityScores {
    double psnr = 0.0;
    double ssim = 0.0;
    double mse = 0.0;
};

[[nodiscard]] QualityScores score(const Image& candidate, const Image& reference);

/// Fusion quality over a grid of weights.
struct SweepResult {
    std::vector<double> weights;
    std::vector<double> psnr;
    std::vector<double> ssim;
    std::vector<double> mse;

    double best_w_psnr = 0.0;
    double best_w_ssim = 0.0;
    double best_w_mse = 0.0;

    /// metric(best w) - metric(w = 1), i.e. relative to the hallucinatory input.
    double delta_psnr = 0.0;
    double delta_ssim = 0.0;
    double delta_mse = 0.0;
};

/// Evenly spaced grid 0, 1/n, ..., 1.
[[nodiscard]] std::vector<double> weight_grid(int intervals);

/// Fuses at every grid weight (params.weight is overridden) and scores each
/// result against `ground_truth`. Guided methods need `conf`.
[[nodiscard]] SweepResult sweep(const Image& reliable, const Image& hallucinatory, const Image& ground_truth,
                                const FusionParams& params, const std::vector<double>& grid,
                                const ConfidenceMap* conf = nullptr);

/// CSV with header "w,psnr,ssim,mse" and trailing "# key=value" comments.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

/// "%.6g", with "inf" for infinities.
[[nodiscard]] std::string format_metric(double v);

}  // namespace ccid

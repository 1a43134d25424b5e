#pragma once

#include <vector>

#include "ccid/confidence_map.hpp"
#include "ccid/image.hpp"
#include "ccid/nn/network.hpp"
#include "ccid/nn/optim.hpp"

namespace ccid::models {

/// Three (conv 3x3 + ReLU + avgpool2) blocks, 3->16->32->32 channels, then a
/// 1x1 conv to one channel and a sigmoid. Output is 8x smaller on each axis.
[[nodiscard]] nn::Network confidence_network();

/// Stacks (noisy, reliable, residual) into the network's 3-channel input.
[[nodiscard]] nn::Tensor confidence_input(const Image& noisy, const Image& reliable, const Image& residual);

/// Forward pass on an input whose height and width are multiples of 8.
[[nodiscard]] ConfidenceMap predict_confidence(const nn::Tensor& input, const nn::ModelParams& params);

/// Any image size: reflect-pads the three channels to multiples of 8 and
/// returns a ceil(H/8) x ceil(W/8) map.
[[nodiscard]] ConfidenceMap predict_confidence(const Image& noisy, const Image& reliable, const Image& residual,
                                               const nn::ModelParams& params);

/// Per 8x8 region: c = 1 - mean(|clean - dnn| * 255) / sigma_max, clamped to
/// [0, 1]. Sizes that are not multiples of 8 are reflect-padded first.
[[nodiscard]] ConfidenceMap confidence_ground_truth(const Image& clean, const Image& dnn_denoised,
                                                   double sigma_max = 100.0);

struct FiveNumber {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Quartiles with linear interpolation between order statistics.
[[nodiscard]] FiveNumber five_number_summary(std::vector<double> values);

/// Pooled over every output cell. `signed_diff` is target - prediction, so a
/// negative value means the network was over-confident there.
struct ConfidenceStats {
    FiveNumber signed_diff;
    FiveNumber abs_diff;
    double mean_signed_diff = 0.0;
    double fraction_below_005 = 0.0;  ///< share of cells with |diff| < 0.05
    std::size_t cells = 0;
};

[[nodiscard]] ConfidenceStats confidence_stats(const std::vector<ConfidenceMap>& predictions,
                                               const std::vector<ConfidenceMap>& targets);

}  // namespace ccid::models

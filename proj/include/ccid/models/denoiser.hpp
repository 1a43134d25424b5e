#pragma once

#include <vector>

#include "ccid/image.hpp"
#include "ccid/nn/network.hpp"
#include "ccid/nn/optim.hpp"

namespace ccid::models {

/// Residual CNN: conv 1->width + ReLU, (depth - 2) x conv width->width + ReLU,
/// conv width->1. All kernels 3x3, no batch normalization.
struct DenoiserSpec {
    int depth = 8;
    int width = 32;

    void validate() const;
    [[nodiscard]] nn::Network network() const;
};

struct DnnOutput {
    Image denoised;
    Image residual;  ///< predicted noise; denoised = noisy - residual
};

/// Recovers depth and width from a parameter set laid out by
/// DenoiserSpec::network(). Throws InvalidArgument for anything else.
[[nodiscard]] DenoiserSpec infer_denoiser_spec(const nn::ModelParams& params);

/// Seeded He initialisation; what train_denoiser starts from.
[[nodiscard]] nn::ModelParams init_denoiser(const DenoiserSpec& spec, std::uint64_t seed);

[[nodiscard]] DnnOutput denoise_dnn(const Image& noisy, const nn::ModelParams& params, const DenoiserSpec& spec);

struct DenoiserTraining {
    int patch = 40;
    int stride = 40;
    double sigma = 25.0;
};

struct DenoiserTrainResult {
    nn::ModelParams params;
    double initial_loss = 0.0;         ///< residual MSE of the initial weights over the first epoch's samples
    std::vector<double> loss_history;  ///< mean residual MSE per epoch
};

/// Residual-learning training on synthetic Gaussian pairs. Every epoch draws
/// fresh noise and a random dihedral variant per patch; all randomness
/// derives from config.seed. Throws std::runtime_error on a non-finite loss.
[[nodiscard]] DenoiserTrainResult train_denoiser(const std::vector<Image>& clean_images, const nn::TrainConfig& config,
                                                 const DenoiserSpec& spec, const DenoiserTraining& data = {});

}  // namespace ccid::models

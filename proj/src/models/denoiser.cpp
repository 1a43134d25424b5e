#include "ccid/models/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ccid::models {

void DenoiserSpec::validate() const {
    if (depth < 2) throw InvalidArgument("denoiser depth must be at least 2");
    if (width < 1) throw InvalidArgument("denoiser width must be positive");
}

nn::Network DenoiserSpec::network() const {
    validate();
    nn::Network net;
    net.conv("conv0", 1, width, 3).relu();
    for (int i = 1; i < depth - 1; ++i) net.conv("conv" + std::to_string(i), width, width, 3).relu();
    net.conv("conv" + std::to_string(depth - 1), width, 1, 3);
    return net;
}

DenoiserSpec infer_denoiser_spec(const nn::ModelParams& params) {
    const nn::Tensor* first = params.find("conv0.weight");
    if (first == nullptr || first->rank() != 4) throw InvalidArgument("parameters do not describe a denoiser");
    DenoiserSpec spec{static_cast<int>(params.size() / 2), first->dim(0)};
    if (spec.depth < 2) throw InvalidArgument("parameters do not describe a denoiser");
    spec.network().check(params);
    return spec;
}

nn::ModelParams init_denoiser(const DenoiserSpec& spec, std::uint64_t seed) {
    return spec.network().init(mix_seed({seed, 0x696e6974ULL}));
}

DnnOutput denoise_dnn(const Image& noisy, const nn::ModelParams& params, const DenoiserSpec& spec) {
    const nn::Network net = spec.network();
    net.check(params);
    const nn::Tensor residual = net.forward(params, nn::tensor_from_image<float>(noisy));
    DnnOutput out{Image(noisy.height(), noisy.width()), nn::image_from_tensor(residual)};
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        out.denoised.pixels()[i] = noisy.pixels()[i] - out.residual.pixels()[i];
    }
    return out;
}

namespace {

struct Sample {
    nn::Tensor noisy;
    nn::Tensor noise;
};

// Noisy patch and its true residual for one (epoch, patch) pair.
Sample make_sample(const Image& patch, std::uint64_t seed, int epoch, std::size_t index, double sigma) {
    SplitMix64 rng(mix_seed({seed, 0x64656e6fULL, static_cast<std::uint64_t>(epoch), index}));
    const Image clean = augment_dihedral(patch, static_cast<int>(rng() % 8));
    const Image noisy = add_noise(clean, {NoiseKind::gaussian, sigma, rng()});
    Image noise(clean.height(), clean.width());
    for (std::size_t i = 0; i < clean.size(); ++i) noise.pixels()[i] = noisy.pixels()[i] - clean.pixels()[i];
    return {nn::tensor_from_image<float>(noisy), nn::tensor_from_image<float>(noise)};
}

}  // namespace

DenoiserTrainResult train_denoiser(const std::vector<Image>& clean_images, const nn::TrainConfig& config,
                                   const DenoiserSpec& spec, const DenoiserTraining& data) {
    config.validate();
    if (clean_images.empty()) throw InvalidArgument("train_denoiser needs at least one image");
    const nn::Network net = spec.network();

    std::vector<Image> patches;
    for (const Image& img : clean_images) {
        for (Image& p : extract_patches(img, data.patch, data.stride)) patches.push_back(std::move(p));
    }

    DenoiserTrainResult result{init_denoiser(spec, config.seed), 0.0, {}};
    if (config.epochs == 0) return result;

    {
        double total = 0.0;
        for (std::size_t i = 0; i < patches.size(); ++i) {
            const Sample s = make_sample(patches[i], config.seed, 0, i, data.sigma);
            total += nn::mse_loss(net.forward(result.params, s.noisy), s.noise).loss;
        }
        result.initial_loss = total / static_cast<double>(patches.size());
    }

    nn::AdamState adam;
    std::vector<std::size_t> order(patches.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    nn::Trace<float> trace;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        SplitMix64 shuffle_rng(mix_seed({config.seed, 0x73687566ULL, static_cast<std::uint64_t>(epoch)}));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            nn::ModelParams grads = result.params.zeros_like();
            for (std::size_t b = start; b < end; ++b) {
                const Sample s = make_sample(patches[order[b]], config.seed, epoch, order[b], data.sigma);
                const nn::Tensor out = net.forward(result.params, s.noisy, &trace);
                const nn::LossResult<float> loss = nn::mse_loss(out, s.noise);
                if (!std::isfinite(loss.loss)) {
                    throw std::runtime_error("denoiser training diverged (non-finite loss) in epoch " +
                                             std::to_string(epoch));
                }
                epoch_loss += loss.loss;
                net.backward(result.params, trace, loss.grad, grads);
            }
            const float scale = 1.0f / static_cast<float>(end - start);
            for (auto& e : grads.entries()) {
                for (float& v : e.tensor.values()) v *= scale;
            }
            nn::adam_step(result.params, grads, adam, config);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return result;
}

}  // namespace ccid::models

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ccid/confidence_map.hpp"
#include "ccid/filters.hpp"
#include "ccid/image.hpp"
#include "ccid/models/denoiser.hpp"
#include "ccid/nn/optim.hpp"
#include "ccid/nn/tensor.hpp"

namespace ccid::models {

/// Bumped whenever item synthesis changes, so stale cache files are ignored.
inline constexpr std::uint32_t kGeneratorVersion = 1;

struct DatasetItem {
    nn::Tensor input;   ///< (3, P, P): noisy, reliable, residual
    nn::Tensor target;  ///< (1, P/8, P/8), block-error confidence
    double sigma = 0.0;
    std::size_t image = 0;
    int offset_y = 0;
    int offset_x = 0;
    int augmentation = 0;
};

struct DatasetOptions {
    int patch = 40;
    double sigma_max = 100.0;
    std::uint64_t seed = 0;
    std::filesystem::path cache_dir;  ///< empty: keep in memory only
};

struct BuildCounter {
    std::size_t computed = 0;
    std::size_t reused = 0;
};

struct Dataset {
    std::vector<DatasetItem> items;
    BuildCounter counter;
};

/// Noise level of one item, uniform on [0, 100), a pure function of its key.
[[nodiscard]] double item_sigma(std::uint64_t seed, std::uint64_t image_hash, int offset_y, int offset_x,
                                int augmentation);

/// Content hash of an image's size and pixel values.
[[nodiscard]] std::uint64_t image_hash(const Image& img);

/// For every non-overlapping patch of every image and each of the 8 dihedral
/// variants: draws sigma, adds Gaussian noise, runs the denoiser and the
/// reliable filter, and computes the block-error confidence target from the clean patch.
/// Items are written to `cache_dir` and read back on later calls with the
/// same inputs. Item order is image, patch (row-major), augmentation.
[[nodiscard]] Dataset build_dataset(const std::vector<Image>& images, const nn::ModelParams& denoiser,
                                    const DenoiserSpec& spec, const ReliableFilterSpec& filter,
                                    const DatasetOptions& options);

/// Cache item encoding: "CCIDDATA", u32 version, u32 height, u32 width,
/// f32 sigma, then noisy, reliable, residual and target planes as f32.
void save_item(const DatasetItem& item, const std::filesystem::path& path);
/// Returns false when the file is missing or not a valid item of this shape.
[[nodiscard]] bool load_item(const std::filesystem::path& path, int patch, DatasetItem& item);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// Seeded shuffle of 0..n-1; the last 10 % (at least one item when n > 1)
/// becomes validation.
[[nodiscard]] Split split_indices(std::size_t n, std::uint64_t seed);

struct ConfidenceTrainResult {
    nn::ModelParams params;
    Split split;
    std::vector<double> train_loss;  ///< per epoch, mean asymmetric SSE per output cell
    std::vector<double> val_loss;
};

[[nodiscard]] ConfidenceTrainResult train_confidence(const Dataset& dataset, const nn::TrainConfig& config);

struct ConfidenceEval {
    double loss = 0.0;               ///< mean asymmetric SSE per cell
    double mean_signed_error = 0.0;  ///< mean(prediction - target)
};

[[nodiscard]] ConfidenceEval evaluate_confidence(const nn::ModelParams& params, const Dataset& dataset,
                                                 const std::vector<std::size_t>& indices, double p_under,
                                                 double p_over);
/// Same metrics for a predictor that outputs `value` everywhere.
[[nodiscard]] ConfidenceEval evaluate_constant(double value, const Dataset& dataset,
                                               const std::vector<std::size_t>& indices, double p_under,
                                               double p_over);

}  // namespace ccid::models

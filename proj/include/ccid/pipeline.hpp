#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ccid/confidence_map.hpp"
#include "ccid/filters.hpp"
#include "ccid/fusion.hpp"
#include "ccid/image.hpp"
#include "ccid/models/denoiser.hpp"
#include "ccid/nn/tensor.hpp"

namespace ccid {

enum class PipelineMode { denoise, super_resolution };

[[nodiscard]] PipelineMode parse_pipeline_mode(const std::string& name);
[[nodiscard]] std::string to_string(PipelineMode mode);

/// Raised when a command needs a model that was not supplied or could not be
/// read. The message names the offending path.
class ModelUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Trained parameters shared read-only by every request.
struct LoadedModels {
    std::optional<nn::ModelParams> denoiser;
    models::DenoiserSpec denoiser_spec;
    std::optional<nn::ModelParams> confidence;
};

/// Empty paths leave the corresponding model unset. A path that does not
/// exist or fails to parse raises ModelUnavailable.
[[nodiscard]] LoadedModels load_models(const std::filesystem::path& denoiser_path,
                                       const std::filesystem::path& confidence_path);

struct PipelineConfig {
    PipelineMode mode = PipelineMode::denoise;
    ReliableFilterSpec reliable;
    FusionParams fusion;
    std::filesystem::path denoiser_params_path;
    std::filesystem::path confidence_params_path;
    std::uint64_t seed = 0;

    /// Super-resolution pairs with the bicubic upscaler and nothing else;
    /// denoising accepts every other reliable filter.
    void validate() const;
};

/// Everything fusion needs, computed once per input and reliable filter.
struct Artifacts {
    Image reliable;
    Image dnn;       ///< hallucinatory image
    Image residual;  ///< denoising: predicted noise; super-resolution: dnn - reliable
    std::optional<ConfidenceMap> confidence;
};

/// Denoising mode: reliable filter plus the learned denoiser on `input`.
/// Needs models.denoiser.
[[nodiscard]] Artifacts denoise_artifacts(const Image& input, const ReliableFilterSpec& reliable,
                                          const LoadedModels& models);

/// Super-resolution mode: bicubic upscale of the low-resolution `input`
/// against an externally produced high-resolution `hallucinatory` image,
/// which must be exactly `scale` times larger.
[[nodiscard]] Artifacts super_resolution_artifacts(const Image& input, const Image& hallucinatory,
                                                   const ReliableFilterSpec& reliable);

/// Runs the confidence net on (noisy, reliable, residual).
[[nodiscard]] ConfidenceMap predict_artifact_confidence(const Image& noisy, const Artifacts& artifacts,
                                                        const nn::ModelParams& confidence);

}  // namespace ccid

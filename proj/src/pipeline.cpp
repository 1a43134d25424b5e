#include "ccid/pipeline.hpp"

#include <system_error>

#include "ccid/models/confidence.hpp"
#include "ccid/nn/serialize.hpp"

namespace ccid {

PipelineMode parse_pipeline_mode(const std::string& name) {
    if (name == "denoise") return PipelineMode::denoise;
    if (name == "super_resolution" || name == "sr") return PipelineMode::super_resolution;
    throw InvalidArgument("unknown mode '" + name + "' (expected denoise or super_resolution)");
}

std::string to_string(PipelineMode mode) {
    return mode == PipelineMode::denoise ? "denoise" : "super_resolution";
}

namespace {

nn::ModelParams read_model(const std::filesystem::path& path, const char* what) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw ModelUnavailable(std::string(what) + " model file not found: " + path.string());
    }
    try {
        return nn::load_params(path);
    } catch (const std::exception& e) {
        throw ModelUnavailable(std::string(what) + " model file " + path.string() + " is unreadable: " + e.what());
    }
}

}  // namespace

LoadedModels load_models(const std::filesystem::path& denoiser_path, const std::filesystem::path& confidence_path) {
    LoadedModels models;
    if (!denoiser_path.empty()) {
        nn::ModelParams params = read_model(denoiser_path, "denoiser");
        try {
            models.denoiser_spec = models::infer_denoiser_spec(params);
        } catch (const InvalidArgument& e) {
            throw ModelUnavailable("denoiser model file " + denoiser_path.string() + ": " + e.what());
        }
        models.denoiser = std::move(params);
    }
    if (!confidence_path.empty()) {
        nn::ModelParams file = read_model(confidence_path, "confidence");
        nn::ModelParams params = models::confidence_network().layout();
        try {
            params.assign_from(file);
        } catch (const InvalidArgument& e) {
            throw ModelUnavailable("confidence model file " + confidence_path.string() + ": " + e.what());
        }
        models.confidence = std::move(params);
    }
    return models;
}

void PipelineConfig::validate() const {
    reliable.validate();
    fusion.validate();
    const bool upscale = reliable.kind == ReliableKind::bicubic_upscale;
    if (mode == PipelineMode::super_resolution && !upscale) {
        throw InvalidArgument("super_resolution mode requires the bicubic_upscale reliable filter");
    }
    if (mode == PipelineMode::denoise && upscale) {
        throw InvalidArgument("bicubic_upscale is only available in super_resolution mode");
    }
}

Artifacts denoise_artifacts(const Image& input, const ReliableFilterSpec& reliable, const LoadedModels& models) {
    if (!models.denoiser) throw ModelUnavailable("no denoiser model loaded");
    if (reliable.kind == ReliableKind::bicubic_upscale) {
        throw InvalidArgument("bicubic_upscale is only available in super_resolution mode");
    }
    models::DnnOutput dnn = models::denoise_dnn(input, *models.denoiser, models.denoiser_spec);
    return {reliable_denoise(input, reliable), std::move(dnn.denoised), std::move(dnn.residual), std::nullopt};
}

Artifacts super_resolution_artifacts(const Image& input, const Image& hallucinatory,
                                     const ReliableFilterSpec& reliable) {
    if (reliable.kind != ReliableKind::bicubic_upscale) {
        throw InvalidArgument("super_resolution mode requires the bicubic_upscale reliable filter");
    }
    reliable.validate();
    if (hallucinatory.height() != input.height() * reliable.scale ||
        hallucinatory.width() != input.width() * reliable.scale) {
        throw InvalidArgument("hallucinatory image must be " + std::to_string(reliable.scale) +
                              "x the input size");
    }
    Artifacts out{reliable_denoise(input, reliable), hallucinatory, Image(hallucinatory.height(), hallucinatory.width()),
                  std::nullopt};
    for (std::size_t i = 0; i < out.residual.size(); ++i) {
        out.residual.pixels()[i] = out.dnn.pixels()[i] - out.reliable.pixels()[i];
    }
    return out;
}

ConfidenceMap predict_artifact_confidence(const Image& noisy, const Artifacts& artifacts,
                                          const nn::ModelParams& confidence) {
    return models::predict_confidence(noisy, artifacts.reliable, artifacts.residual, confidence);
}

}  // namespace ccid

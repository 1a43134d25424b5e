// Command-line front end: denoising, fusion, sweeps, dataset generation,
// training and the HTTP service.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ccid/io.hpp"
#include "ccid/metrics.hpp"
#include "ccid/models/confidence.hpp"
#include "ccid/models/dataset.hpp"
#include "ccid/models/denoiser.hpp"
#include "ccid/nn/serialize.hpp"
#include "ccid/pipeline.hpp"
#include "ccid/service.hpp"
#include "ccid/synthetic.hpp"

namespace fs = std::filesystem;
using namespace ccid;

namespace {

class CommandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Files written by one command. They land under temporary names first and
// are renamed into place by commit(); anything uncommitted is removed.
class OutputSet {
public:
    OutputSet() = default;
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet() {
        std::error_code ec;
        for (const auto& [tmp, final_path] : pending_) fs::remove(tmp, ec);
    }

    fs::path stage(const fs::path& final_path) {
        if (final_path.has_parent_path()) fs::create_directories(final_path.parent_path());
        fs::path tmp = final_path;
        tmp.replace_filename("." + final_path.stem().string() + ".partial" + final_path.extension().string());
        pending_.emplace_back(tmp, final_path);
        return tmp;
    }

    void commit() {
        for (const auto& [tmp, final_path] : pending_) fs::rename(tmp, final_path);
        pending_.clear();
    }

private:
    std::vector<std::pair<fs::path, fs::path>> pending_;
};

void write_text(OutputSet& out, const fs::path& path, const std::string& text) {
    std::ofstream f(out.stage(path), std::ios::binary);
    f << text;
    if (!f) throw CommandError("cannot write " + path.string());
}

std::vector<Image> load_corpus(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw CommandError("corpus directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".png" || ext == ".pgm")) files.push_back(entry.path());
    }
    if (files.empty()) throw CommandError("corpus directory " + dir.string() + " contains no .png or .pgm images");
    std::sort(files.begin(), files.end());
    std::vector<Image> images;
    images.reserve(files.size());
    for (const auto& f : files) images.push_back(load_image(f));
    return images;
}

fs::path default_cache_dir() {
    if (const char* env = std::getenv("CCID_CACHE_DIR"); env != nullptr && *env != '\0') return env;
    return "ccid-cache";
}

std::string confidence_json(const ConfidenceMap& map) {
    return nlohmann::json{{"gh", map.rows}, {"gw", map.cols}, {"values", map.values}}.dump();
}

ConfidenceMap read_confidence_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw CommandError("confidence map not found: " + path.string());
    try {
        const auto j = nlohmann::json::parse(f);
        ConfidenceMap map(j.at("gh").get<int>(), j.at("gw").get<int>());
        map.values = j.at("values").get<std::vector<double>>();
        map.validate();
        return map;
    } catch (const nlohmann::json::exception& e) {
        throw CommandError("malformed confidence map " + path.string() + ": " + e.what());
    }
}

// Flags shared by several subcommands.
struct ReliableFlags {
    std::string kind = "gaussian";
    ReliableFilterSpec spec;

    void add(CLI::App& app) {
        app.add_option("--filter", kind, "reliable filter: gaussian, bilateral, nlm, bicubic_upscale")
            ->capture_default_str();
        app.add_option("--filter-sigma", spec.gaussian_sigma, "Gaussian filter sigma (pixels)")->capture_default_str();
        app.add_option("--sigma-space", spec.bilateral_sigma_space, "bilateral spatial sigma")->capture_default_str();
        app.add_option("--sigma-range", spec.bilateral_sigma_range, "bilateral range sigma")->capture_default_str();
        app.add_option("--nlm-patch", spec.nlm_patch, "NLM patch size")->capture_default_str();
        app.add_option("--nlm-window", spec.nlm_window, "NLM search window")->capture_default_str();
        app.add_option("--nlm-h", spec.nlm_h, "NLM filtering strength")->capture_default_str();
        app.add_option("--scale", spec.scale, "upscale factor for bicubic_upscale")->capture_default_str();
    }
    ReliableFilterSpec resolve() {
        spec.kind = parse_reliable_kind(kind);
        spec.validate();
        return spec;
    }
};

struct FusionFlags {
    std::string method = "dct";
    std::string wavelet = "haar";
    FusionParams params;

    void add(CLI::App& app, bool with_weight = true) {
        app.add_option("--method", method, "fusion method: dct, dwt, dwt_corr")->capture_default_str();
        if (with_weight) app.add_option("--weight", params.weight, "fusion weight in [0, 1]")->capture_default_str();
        app.add_flag("--guided", params.guided, "modulate the weight with the confidence map");
        app.add_option("--threshold", params.threshold, "confidence threshold t")->capture_default_str();
        app.add_option("--mask-scale", params.mask_scale, "DCT mask scale a")->capture_default_str();
        app.add_option("--mask-eps", params.mask_eps, "DCT mask epsilon")->capture_default_str();
        app.add_option("--levels", params.levels, "DWT decomposition levels")->capture_default_str();
        app.add_option("--wavelet", wavelet, "DWT wavelet: haar, db2")->capture_default_str();
    }
    FusionParams resolve() {
        params.method = parse_fusion_method(method);
        params.wavelet = parse_wavelet(wavelet);
        params.validate();
        return params;
    }
};

struct NoiseFlags {
    std::optional<double> sigma;
    std::string kind = "gaussian";
    std::uint64_t seed = 0;

    void add(CLI::App& app) {
        app.add_option("--add-noise", sigma, "degrade the input with synthetic noise of this std (8-bit scale)");
        app.add_option("--noise-kind", kind, "gaussian or poisson (std matched to --add-noise)")
            ->capture_default_str();
    }
    Image apply(const Image& img) const {
        if (!sigma) return img;
        return add_noise(img, {parse_noise_kind(kind), *sigma, seed});
    }
};

struct TrainFlags {
    nn::TrainConfig config;
    void add(CLI::App& app) {
        app.add_option("--epochs", config.epochs)->capture_default_str();
        app.add_option("--batch-size", config.batch_size)->capture_default_str();
        app.add_option("--lr", config.learning_rate, "Adam learning rate")->capture_default_str();
        app.add_option("--weight-decay", config.weight_decay)->capture_default_str();
    }
};

// --- denoise -------------------------------------------------------------

struct DenoiseCommand {
    fs::path input, output_dir, denoiser, confidence, hallucinatory;
    std::string mode = "denoise";
    ReliableFlags reliable;
    FusionFlags fusion;
    NoiseFlags noise;
    std::uint64_t seed = 0;

    void add(CLI::App& root) {
        CLI::App* app = root.add_subcommand("denoise", "run the full pipeline on one image");
        app->add_option("--input", input, "noisy (or low-resolution) image")->required();
        app->add_option("--output-dir", output_dir, "directory for the output images")->required();
        app->add_option("--denoiser", denoiser, "denoiser parameter file");
        app->add_option("--confidence", confidence, "confidence net parameter file");
        app->add_option("--mode", mode, "denoise or super_resolution")->capture_default_str();
        app->add_option("--hallucinatory", hallucinatory, "high-resolution learned output (super_resolution)");
        app->add_option("--seed", seed, "seed for --add-noise")->capture_default_str();
        reliable.add(*app);
        fusion.add(*app);
        noise.add(*app);
        app->callback([this] { run(); });
    }

    void run() {
        PipelineConfig config;
        config.mode = parse_pipeline_mode(mode);
        config.reliable = reliable.resolve();
        config.fusion = fusion.resolve();
        config.denoiser_params_path = denoiser;
        config.confidence_params_path = confidence;
        config.seed = seed;
        config.validate();
        noise.seed = seed;

        const Image in = noise.apply(load_image(input));
        Artifacts art;
        if (config.mode == PipelineMode::super_resolution) {
            if (hallucinatory.empty()) throw CommandError("super_resolution needs --hallucinatory");
            art = super_resolution_artifacts(in, load_image(hallucinatory), config.reliable);
        } else {
            if (denoiser.empty()) throw CommandError("denoise needs --denoiser <params file>");
            const LoadedModels models = load_models(denoiser, confidence);
            art = denoise_artifacts(in, config.reliable, models);
            if (models.confidence) art.confidence = predict_artifact_confidence(in, art, *models.confidence);
        }
        if (config.fusion.guided && !art.confidence) {
            throw CommandError("--guided needs --confidence <params file> in denoise mode");
        }

        OutputSet out;
        save_image(art.reliable, out.stage(output_dir / "reliable.png"));
        save_image(art.dnn, out.stage(output_dir / "dnn.png"));
        Image shifted = art.residual;
        for (double& v : shifted.pixels()) v += 0.5;
        save_image(shifted, out.stage(output_dir / "residual.png"));
        if (art.confidence) {
            save_rgb_png(colorize_confidence(*art.confidence, config.fusion.threshold),
                         out.stage(output_dir / "confidence.png"));
            write_text(out, output_dir / "confidence.json", confidence_json(*art.confidence));
        }
        const Image fused = fuse(art.reliable, art.dnn, config.fusion, art.confidence ? &*art.confidence : nullptr);
        save_image(fused, out.stage(output_dir / "fused.png"));
        out.commit();
    }
};

// --- fuse ----------------------------------------------------------------

struct FuseCommand {
    fs::path reliable, hallucinatory, confidence_map, output;
    FusionFlags fusion;

    void add(CLI::App& root) {
        CLI::App* app = root.add_subcommand("fuse", "fuse two existing images");
        app->add_option("--reliable", reliable)->required();
        app->add_option("--hallucinatory", hallucinatory)->required();
        app->add_option("--confidence-map", confidence_map, "JSON grid {gh, gw, values} for --guided");
        app->add_option("--output", output)->required();
        fusion.add(*app);
        app->callback([this] { run(); });
    }

    void run() {
        const FusionParams params = fusion.resolve();
        std::optional<ConfidenceMap> conf;
        if (!confidence_map.empty()) conf = read_confidence_json(confidence_map);
        if (params.guided && !conf) throw CommandError("--guided needs --confidence-map");
        const Image fused = fuse(load_image(reliable), load_image(hallucinatory), params, conf ? &*conf : nullptr);
        OutputSet out;
        save_image(fused, out.stage(output));
        out.commit();
    }
};

// --- sweep ---------------------------------------------------------------

struct SweepCommand {
    fs::path noisy, clean, reliable_path, hallucinatory_path, denoiser, confidence, output, save_fused;
    int intervals = 10;
    bool oracle = false;
    std::vector<double> weights;
    ReliableFlags reliable;
    FusionFlags fusion;
    NoiseFlags noise;
    std::uint64_t seed = 0;

    void add(CLI::App& root) {
        CLI::App* app = root.add_subcommand("sweep", "fusion quality over a grid of weights");
        app->add_option("--clean", clean, "ground-truth image")->required();
        app->add_option("--noisy", noisy, "noisy input; run through the reliable filter and the denoiser");
        app->add_option("--reliable", reliable_path, "precomputed reliable image (instead of --noisy)");
        app->add_option("--hallucinatory", hallucinatory_path, "precomputed hallucinatory image (instead of --noisy)");
        app->add_option("--denoiser", denoiser, "denoiser parameter file");
        app->add_option("--confidence", confidence, "confidence net parameter file (for --guided)");
        app->add_flag("--oracle-confidence", oracle, "derive the confidence map from --clean (upper bound)");
        app->add_option("--grid", intervals, "number of weight intervals; weights are k / grid")
            ->capture_default_str();
        app->add_option("--weights", weights, "explicit weight list (overrides --grid)")->delimiter(',');
        app->add_option("--output", output, "CSV path (default: stdout)");
        app->add_option("--save-fused", save_fused, "directory for fused_<w>.png per weight");
        app->add_option("--seed", seed, "seed for --add-noise")->capture_default_str();
        reliable.add(*app);
        fusion.add(*app, false);
        noise.add(*app);
        app->callback([this] { run(); });
    }

    void run() {
        const FusionParams params = fusion.resolve();
        const Image gt = load_image(clean);
        Image rel, hal;
        std::optional<ConfidenceMap> conf;
        if (!reliable_path.empty() || !hallucinatory_path.empty()) {
            if (reliable_path.empty() || hallucinatory_path.empty()) {
                throw CommandError("--reliable and --hallucinatory go together");
            }
            rel = load_image(reliable_path);
            hal = load_image(hallucinatory_path);
            if (params.guided && !oracle) throw CommandError("--guided with precomputed images needs --oracle-confidence");
        } else {
            if (noisy.empty() && !noise.sigma) throw CommandError("sweep needs --noisy, --add-noise or --reliable/--hallucinatory");
            if (denoiser.empty()) throw CommandError("sweep needs --denoiser <params file>");
            noise.seed = seed;
            const Image in = noise.apply(noisy.empty() ? gt : load_image(noisy));
            const LoadedModels models = load_models(denoiser, confidence);
            Artifacts art = denoise_artifacts(in, reliable.resolve(), models);
            if (params.guided) {
                if (!models.confidence) throw CommandError("--guided needs --confidence <params file>");
                conf = predict_artifact_confidence(in, art, *models.confidence);
            }
            rel = std::move(art.reliable);
            hal = std::move(art.dnn);
        }

        if (oracle) conf = models::confidence_ground_truth(gt, hal);
        const std::vector<double> grid = weights.empty() ? weight_grid(intervals) : weights;
        const SweepResult result = sweep(rel, hal, gt, params, grid, conf ? &*conf : nullptr);

        OutputSet out;
        if (!save_fused.empty()) {
            for (double w : grid) {
                FusionParams p = params;
                p.weight = w;
                save_image(fuse(rel, hal, p, conf ? &*conf : nullptr),
                           out.stage(save_fused / ("fused_" + format_metric(w) + ".png")));
            }
        }
        std::ostringstream csv;
        write_sweep_csv(result, csv);
        if (output.empty()) {
            std::cout << csv.str();
        } else {
            write_text(out, output, csv.str());
        }
        out.commit();
    }
};

// --- dataset and training ------------------------------------------------

struct GenDatasetCommand {
    fs::path corpus, denoiser, cache_dir;
    ReliableFlags reliable;
    models::DatasetOptions options;

    void add(CLI::App& root) {
        CLI::App* app = root.add_subcommand("gen-dataset", "build the confidence training set into the cache");
        app->add_option("--corpus", corpus, "directory of clean training images")->required();
        app->add_option("--denoiser", denoiser, "denoiser parameter file")->required();
        app->add_option("--cache-dir", cache_dir, "item cache (default: $CCID_CACHE_DIR or ./ccid-cache)");
        app->add_option("--patch", options.patch)->capture_default_str();
        app->add_option("--seed", options.seed)->capture_default_str();
        reliable.add(*app);
        app->callback([this] { run(); });
    }

    models::Dataset build() {
        const std::vector<Image> images = load_corpus(corpus);
        const LoadedModels m = load_models(denoiser, {});
        options.cache_dir = cache_dir.empty() ? default_cache_dir() : cache_dir;
        return models::build_dataset(images, *m.denoiser, m.denoiser_spec, reliable.resolve(), options);
    }

    void run() {
        const models::Dataset ds = build();
        std::cout << "items=" << ds.items.size() << " computed=" << ds.counter.computed
                  << " reused=" << ds.counter.reused << " cache=" << options.cache_dir.string() << "\n";
    }
};

struct TrainDenoiserCommand {
    fs::path corpus, output, loss_csv;
    models::DenoiserSpec spec;
    models::DenoiserTraining data;
    TrainFlags train;

    void add(CLI::App& root) {
        CLI::App* app = root.add_subcommand("train-denoiser", "train the residual denoiser on clean images");
        app->add_option("--corpus", corpus, "directory of clean training images")->required();
        app->add_option("--output", output, "parameter file to write")->required();
        app->add_option("--loss-csv", loss_csv, "per-epoch loss history");
        app->add_option("--depth", spec.depth)->capture_default_str();
        app->add_option("--width", spec.width)->capture_default_str();
        app->add_option("--sigma", data.sigma, "training noise std (8-bit scale)")->capture_default_str();
        app->add_option("--patch", data.patch)->capture_default_str();
        app->add_option("--stride", data.stride)->capture_default_str();
        app->add_option("--seed", train.config.seed)->capture_default_str();
        train.add(*app);
        app->callback([this] { run(); });
    }

    void run() {
        const std::vector<Image> images = load_corpus(corpus);
        const models::DenoiserTrainResult r = models::train_denoiser(images, train.config, spec, data);
        OutputSet out;
        nn::save_params(r.params, out.stage(output));
        if (!loss_csv.empty()) {
            std::ostringstream csv;
            csv.precision(9);
            csv << "epoch,loss\n";
            for (std::size_t e = 0; e < r.loss_history.size(); ++e) csv << e + 1 << ',' << r.loss_history[e] << '\n';
            write_text(out, loss_csv, csv.str());
        }
        out.commit();
        std::cout << "initial_loss=" << r.initial_loss;
        if (!r.loss_history.empty()) std::cout << " final_loss=" << r.loss_history.back();
        std::cout << "\n";
    }
};

struct TrainConfidenceCommand {
    GenDatasetCommand dataset;
    fs::path output, loss_csv;
    TrainFlags train;

    void add(CLI::App& root) {
        CLI::App* app = root.add_subcommand("train-confidence", "train the confidence net on the cached dataset");
        app->add_option("--corpus", dataset.corpus, "directory of clean training images")->required();
        app->add_option("--denoiser", dataset.denoiser, "denoiser parameter file")->required();
        app->add_option("--cache-dir", dataset.cache_dir, "item cache (default: $CCID_CACHE_DIR or ./ccid-cache)");
        app->add_option("--patch", dataset.options.patch)->capture_default_str();
        app->add_option("--output", output, "parameter file to write")->required();
        app->add_option("--loss-csv", loss_csv, "per-epoch train/validation loss");
        app->add_option("--seed", train.config.seed, "seeds the dataset, the split and training")
            ->capture_default_str();
        app->add_option("--p-under", train.config.p_under, "penalty when the prediction is below the target")
            ->capture_default_str();
        app->add_option("--p-over", train.config.p_over, "penalty when the prediction is above the target")
            ->capture_default_str();
        dataset.reliable.add(*app);
        train.add(*app);
        app->callback([this] { run(); });
    }

    void run() {
        dataset.options.seed = train.config.seed;
        const models::Dataset ds = dataset.build();
        const models::ConfidenceTrainResult r = models::train_confidence(ds, train.config);
        OutputSet out;
        nn::save_params(r.params, out.stage(output));
        if (!loss_csv.empty()) {
            std::ostringstream csv;
            csv.precision(9);
            csv << "epoch,train_loss,val_loss\n";
            for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
                csv << e + 1 << ',' << r.train_loss[e] << ',' << r.val_loss[e] << '\n';
            }
            write_text(out, loss_csv, csv.str());
        }
        out.commit();
        const auto base = models::evaluate_constant(0.8, ds, r.split.val, train.config.p_under, train.config.p_over);
        const auto eval =
            models::evaluate_confidence(r.params, ds, r.split.val, train.config.p_under, train.config.p_over);
        std::cout << "items=" << ds.items.size() << " computed=" << ds.counter.computed
                  << " reused=" << ds.counter.reused << "\nval_loss=" << eval.loss
                  << " constant_0.8_loss=" << base.loss << " mean_signed_error=" << eval.mean_signed_error << "\n";
    }
};

struct SynthCorpusCommand {
    fs::path output;
    int count = 20;
    int size = 80;
    std::uint64_t seed = 0;

    void add(CLI::App& root) {
        CLI::App* app = root.add_subcommand("synth-corpus", "write procedurally generated grayscale scenes");
        app->add_option("--output", output, "directory to write into")->required();
        app->add_option("--count", count)->capture_default_str();
        app->add_option("--size", size, "side length in pixels")->capture_default_str();
        app->add_option("--seed", seed)->capture_default_str();
        app->callback([this] { run(); });
    }

    void run() {
        const std::vector<Image> images = synthetic_corpus(count, size, size, seed);
        OutputSet out;
        for (std::size_t i = 0; i < images.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "scene_%03zu.png", i);
            save_image(images[i], out.stage(output / name));
        }
        out.commit();
    }
};

struct ServeCommand {
    fs::path denoiser, confidence;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_sessions = 32;

    void add(CLI::App& root) {
        CLI::App* app = root.add_subcommand("serve", "start the HTTP service");
        app->add_option("--port", port)->capture_default_str();
        app->add_option("--host", host)->capture_default_str();
        app->add_option("--denoiser", denoiser, "denoiser parameter file");
        app->add_option("--confidence", confidence, "confidence net parameter file");
        app->add_option("--max-sessions", max_sessions)->capture_default_str();
        app->callback([this] { run(); });
    }

    void run() {
        service::ServiceOptions options;
        options.max_sessions = max_sessions;
        service::Service svc(load_models(denoiser, confidence), options);
        std::cerr << "listening on http://" << host << ":" << port << "\n";
        if (!service::serve(svc, host, port)) throw CommandError("cannot listen on " + host + ":" + std::to_string(port));
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence-guided image restoration workbench"};
    app.require_subcommand(1);

    DenoiseCommand denoise;
    FuseCommand fuse_cmd;
    SweepCommand sweep_cmd;
    GenDatasetCommand gen_dataset;
    TrainDenoiserCommand train_denoiser;
    TrainConfidenceCommand train_confidence;
    SynthCorpusCommand synth_corpus;
    ServeCommand serve;
    denoise.add(app);
    fuse_cmd.add(app);
    sweep_cmd.add(app);
    gen_dataset.add(app);
    train_denoiser.add(app);
    train_confidence.add(app);
    synth_corpus.add(app);
    serve.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "ccid: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

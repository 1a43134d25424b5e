#include "ccid/models/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>
#include <system_error>

#include "ccid/hash.hpp"
#include "ccid/models/confidence.hpp"
#include "ccid/nn/ops.hpp"

namespace ccid::models {

namespace {

constexpr char kMagic[8] = {'C', 'C', 'I', 'D', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kItemFormat = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint64_t noise_seed(std::uint64_t seed, std::uint64_t img_hash, int oy, int ox, int aug) {
    return mix_seed({seed, img_hash, static_cast<std::uint64_t>(oy), static_cast<std::uint64_t>(ox),
                     static_cast<std::uint64_t>(aug), 0x6e6f697365ULL});
}

// Channels are stored as f32, so the target is computed from the rounded
// values; recomputing it from a cache file then reproduces it exactly.
nn::Tensor target_from_channels(const Image& clean, const nn::Tensor& input, double sigma_max) {
    const int h = input.dim(1);
    const int w = input.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Image dnn(h, w);
    for (std::size_t i = 0; i < plane; ++i) {
        dnn.pixels()[i] = static_cast<double>(input[i]) - static_cast<double>(input[2 * plane + i]);
    }
    const ConfidenceMap map = confidence_ground_truth(clean, dnn, sigma_max);
    return nn::Tensor({1, map.rows, map.cols}, std::vector<float>(map.values.begin(), map.values.end()));
}

}  // namespace

std::uint64_t image_hash(const Image& img) {
    Fnv1a h;
    h.value(img.height()).value(img.width()).values(img.pixels());
    return h.digest();
}

double item_sigma(std::uint64_t seed, std::uint64_t img_hash, int offset_y, int offset_x, int augmentation) {
    SplitMix64 rng(mix_seed({seed, img_hash, static_cast<std::uint64_t>(offset_y),
                             static_cast<std::uint64_t>(offset_x), static_cast<std::uint64_t>(augmentation),
                             0x7369676dULL}));
    return 100.0 * rng.uniform();
}

void save_item(const DatasetItem& item, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes(kMagic, kMagic + sizeof kMagic);
    put_u32(bytes, kItemFormat);
    put_u32(bytes, static_cast<std::uint32_t>(item.input.dim(1)));
    put_u32(bytes, static_cast<std::uint32_t>(item.input.dim(2)));
    put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(item.sigma)));
    for (float v : item.input.values()) put_u32(bytes, std::bit_cast<std::uint32_t>(v));
    for (float v : item.target.values()) put_u32(bytes, std::bit_cast<std::uint32_t>(v));

    // Write to a sibling temp file and rename, so readers never see a
    // half-written item.
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (out) out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw std::runtime_error("cannot write dataset item " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw std::runtime_error("cannot move dataset item into place: " + path.string());
    }
}

bool load_item(const std::filesystem::path& path, int patch, DatasetItem& item) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t plane = static_cast<std::size_t>(patch) * patch;
    const std::size_t cells = plane / 64;
    const std::size_t expected = sizeof kMagic + 16 + 4 * (3 * plane + cells);
    if (bytes.size() != expected || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) return false;
    const std::uint8_t* p = bytes.data() + sizeof kMagic;
    if (get_u32(p) != kItemFormat || get_u32(p + 4) != static_cast<std::uint32_t>(patch) ||
        get_u32(p + 8) != static_cast<std::uint32_t>(patch)) {
        return false;
    }
    item.sigma = std::bit_cast<float>(get_u32(p + 12));
    p += 16;
    item.input = nn::Tensor({3, patch, patch});
    for (float& v : item.input.values()) {
        v = std::bit_cast<float>(get_u32(p));
        p += 4;
    }
    item.target = nn::Tensor({1, patch / 8, patch / 8});
    for (float& v : item.target.values()) {
        v = std::bit_cast<float>(get_u32(p));
        p += 4;
    }
    return true;
}

Dataset build_dataset(const std::vector<Image>& images, const nn::ModelParams& denoiser, const DenoiserSpec& spec,
                      const ReliableFilterSpec& filter, const DatasetOptions& options) {
    if (images.empty()) throw InvalidArgument("build_dataset needs at least one image");
    if (options.patch < 8 || options.patch % 8 != 0) throw InvalidArgument("dataset patch must be a multiple of 8");
    filter.validate();
    if (filter.kind == ReliableKind::bicubic_upscale) {
        throw InvalidArgument("the dataset reliable channel must be a denoising filter");
    }
    spec.network().check(denoiser);
    if (!options.cache_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(options.cache_dir, ec);
        if (ec) throw std::runtime_error("cannot create cache directory " + options.cache_dir.string());
    }

    // Everything besides the per-item key that influences an item's content.
    Fnv1a context;
    context.value(kGeneratorVersion)
        .value(options.seed)
        .value(options.patch)
        .value(options.sigma_max)
        .value(nn::content_hash(denoiser))
        .text(filter.key());

    Dataset ds;
    for (std::size_t idx = 0; idx < images.size(); ++idx) {
        const Image& img = images[idx];
        const std::uint64_t ih = image_hash(img);
        for (const auto& [oy, ox] : patch_offsets(img.height(), img.width(), options.patch, options.patch)) {
            const Image base = img.crop(oy, ox, options.patch, options.patch);
            for (int aug = 0; aug < 8; ++aug) {
                DatasetItem item;
                item.image = idx;
                item.offset_y = oy;
                item.offset_x = ox;
                item.augmentation = aug;
                item.sigma = item_sigma(options.seed, ih, oy, ox, aug);

                std::filesystem::path file;
                if (!options.cache_dir.empty()) {
                    Fnv1a key = context;
                    key.value(ih).value(oy).value(ox).value(aug).value(item.sigma);
                    file = options.cache_dir / (key.hex() + ".ccd");
                    if (load_item(file, options.patch, item)) {
                        ++ds.counter.reused;
                        ds.items.push_back(std::move(item));
                        continue;
                    }
                }

                const Image clean = augment_dihedral(base, aug);
                const Image noisy =
                    add_noise(clean, {NoiseKind::gaussian, item.sigma, noise_seed(options.seed, ih, oy, ox, aug)});
                const DnnOutput dnn = denoise_dnn(noisy, denoiser, spec);
                item.input = confidence_input(noisy, reliable_denoise(noisy, filter), dnn.residual);
                item.target = target_from_channels(clean, item.input, options.sigma_max);
                item.sigma = static_cast<float>(item.sigma);
                if (!file.empty()) save_item(item, file);
                ++ds.counter.computed;
                ds.items.push_back(std::move(item));
            }
        }
    }
    return ds;
}

Split split_indices(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("cannot split an empty dataset");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(mix_seed({seed, 0x73706c6974ULL}));
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = n / 10;
    if (n_val == 0 && n > 1) n_val = 1;
    Split s;
    s.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    s.val.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    return s;
}

ConfidenceEval evaluate_confidence(const nn::ModelParams& params, const Dataset& dataset,
                                   const std::vector<std::size_t>& indices, double p_under, double p_over) {
    const nn::Network net = confidence_network();
    net.check(params);
    ConfidenceEval e;
    std::size_t cells = 0;
    for (std::size_t i : indices) {
        const DatasetItem& item = dataset.items.at(i);
        const nn::Tensor out = net.forward(params, item.input);
        e.loss += nn::asymmetric_sse(out, item.target, p_under, p_over).loss;
        for (std::size_t k = 0; k < out.size(); ++k) e.mean_signed_error += double(out[k]) - double(item.target[k]);
        cells += out.size();
    }
    if (cells > 0) {
        e.loss /= static_cast<double>(cells);
        e.mean_signed_error /= static_cast<double>(cells);
    }
    return e;
}

ConfidenceEval evaluate_constant(double value, const Dataset& dataset, const std::vector<std::size_t>& indices,
                                 double p_under, double p_over) {
    ConfidenceEval e;
    std::size_t cells = 0;
    for (std::size_t i : indices) {
        const nn::Tensor& target = dataset.items.at(i).target;
        const nn::Tensor out(target.shape(), static_cast<float>(value));
        e.loss += nn::asymmetric_sse(out, target, p_under, p_over).loss;
        for (std::size_t k = 0; k < out.size(); ++k) e.mean_signed_error += double(out[k]) - double(target[k]);
        cells += out.size();
    }
    if (cells > 0) {
        e.loss /= static_cast<double>(cells);
        e.mean_signed_error /= static_cast<double>(cells);
    }
    return e;
}

ConfidenceTrainResult train_confidence(const Dataset& dataset, const nn::TrainConfig& config) {
    config.validate();
    if (dataset.items.empty()) throw InvalidArgument("train_confidence needs a nonempty dataset");
    const nn::Network net = confidence_network();

    ConfidenceTrainResult result{net.init(mix_seed({config.seed, 0x636f6e66ULL})),
                                 split_indices(dataset.items.size(), config.seed),
                                 {},
                                 {}};
    std::vector<std::size_t> order = result.split.train;
    nn::AdamState adam;
    nn::Trace<float> trace;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        SplitMix64 rng(mix_seed({config.seed, 0x65706f6368ULL, static_cast<std::uint64_t>(epoch)}));
        std::shuffle(order.begin(), order.end(), rng);

        double total = 0.0;
        std::size_t cells = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            nn::ModelParams grads = result.params.zeros_like();
            for (std::size_t b = start; b < end; ++b) {
                const DatasetItem& item = dataset.items[order[b]];
                const nn::Tensor out = net.forward(result.params, item.input, &trace);
                const auto loss = nn::asymmetric_sse(out, item.target, config.p_under, config.p_over);
                if (!std::isfinite(loss.loss)) {
                    throw std::runtime_error("confidence training diverged (non-finite loss) in epoch " +
                                             std::to_string(epoch));
                }
                total += loss.loss;
                cells += out.size();
                net.backward(result.params, trace, loss.grad, grads);
            }
            const float scale = 1.0f / static_cast<float>(end - start);
            for (auto& e : grads.entries()) {
                for (float& v : e.tensor.values()) v *= scale;
            }
            nn::adam_step(result.params, grads, adam, config);
        }
        result.train_loss.push_back(cells > 0 ? total / static_cast<double>(cells) : 0.0);
        result.val_loss.push_back(
            evaluate_confidence(result.params, dataset, result.split.val, config.p_under, config.p_over).loss);
    }
    return result;
}

}  // namespace ccid::models

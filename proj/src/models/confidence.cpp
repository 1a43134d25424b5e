#include "ccid/models/confidence.hpp"

#include <algorithm>
#include <cmath>

namespace ccid::models {

nn::Network confidence_network() {
    nn::Network net;
    net.conv("block1", 3, 16, 3).relu().avgpool2();
    net.conv("block2", 16, 32, 3).relu().avgpool2();
    net.conv("block3", 32, 32, 3).relu().avgpool2();
    net.conv("head", 32, 1, 1).sigmoid();
    return net;
}

nn::Tensor confidence_input(const Image& noisy, const Image& reliable, const Image& residual) {
    require_same_shape(noisy, reliable, "confidence_input");
    require_same_shape(noisy, residual, "confidence_input");
    const int h = noisy.height();
    const int w = noisy.width();
    nn::Tensor t({3, h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const Image* channels[] = {&noisy, &reliable, &residual};
    for (std::size_t c = 0; c < 3; ++c) {
        std::copy(channels[c]->pixels().begin(), channels[c]->pixels().end(), t.data() + c * plane);
    }
    return t;
}

ConfidenceMap predict_confidence(const nn::Tensor& input, const nn::ModelParams& params) {
    if (input.rank() != 3 || input.dim(0) != 3) throw InvalidArgument("confidence input must be (3, H, W)");
    if (input.dim(1) % kConfidenceCell != 0 || input.dim(2) % kConfidenceCell != 0) {
        throw InvalidArgument("confidence input height and width must be multiples of 8");
    }
    const nn::Network net = confidence_network();
    net.check(params);
    const nn::Tensor out = net.forward(params, input);
    ConfidenceMap map(out.dim(1), out.dim(2));
    std::copy(out.values().begin(), out.values().end(), map.values.begin());
    return map;
}

namespace {

int round_up8(int n) { return (n + kConfidenceCell - 1) / kConfidenceCell * kConfidenceCell; }

}  // namespace

ConfidenceMap predict_confidence(const Image& noisy, const Image& reliable, const Image& residual,
                                 const nn::ModelParams& params) {
    const int h = round_up8(noisy.height());
    const int w = round_up8(noisy.width());
    return predict_confidence(
        confidence_input(pad_reflect(noisy, h, w), pad_reflect(reliable, h, w), pad_reflect(residual, h, w)), params);
}

ConfidenceMap confidence_ground_truth(const Image& clean, const Image& dnn_denoised, double sigma_max) {
    require_same_shape(clean, dnn_denoised, "confidence_ground_truth");
    if (!(sigma_max > 0.0)) throw InvalidArgument("sigma_max must be positive");
    const int h = round_up8(clean.height());
    const int w = round_up8(clean.width());
    const Image a = pad_reflect(clean, h, w);
    const Image b = pad_reflect(dnn_denoised, h, w);
    ConfidenceMap map(h / kConfidenceCell, w / kConfidenceCell);
    for (int r = 0; r < map.rows; ++r) {
        for (int c = 0; c < map.cols; ++c) {
            double err = 0.0;
            for (int y = 0; y < kConfidenceCell; ++y) {
                for (int x = 0; x < kConfidenceCell; ++x) {
                    const int py = r * kConfidenceCell + y;
                    const int px = c * kConfidenceCell + x;
                    err += std::abs(a(py, px) - b(py, px));
                }
            }
            const double mean_err = err / (kConfidenceCell * kConfidenceCell) * 255.0;
            map(r, c) = std::clamp(1.0 - mean_err / sigma_max, 0.0, 1.0);
        }
    }
    return map;
}

FiveNumber five_number_summary(std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("five_number_summary of an empty set");
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] + frac * (values[hi] - values[lo]);
    };
    return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back()};
}

ConfidenceStats confidence_stats(const std::vector<ConfidenceMap>& predictions,
                                 const std::vector<ConfidenceMap>& targets) {
    if (predictions.empty() || predictions.size() != targets.size()) {
        throw InvalidArgument("confidence_stats needs equally many predictions and targets");
    }
    std::vector<double> diffs;
    std::vector<double> abs_diffs;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].rows != targets[i].rows || predictions[i].cols != targets[i].cols) {
            throw InvalidArgument("confidence_stats: map " + std::to_string(i) + " has mismatched dims");
        }
        for (std::size_t k = 0; k < targets[i].values.size(); ++k) {
            const double d = targets[i].values[k] - predictions[i].values[k];
            diffs.push_back(d);
            abs_diffs.push_back(std::abs(d));
        }
    }
    ConfidenceStats s;
    s.cells = diffs.size();
    double sum = 0.0;
    std::size_t small = 0;
    for (double d : diffs) {
        sum += d;
        if (std::abs(d) < 0.05) ++small;
    }
    s.mean_signed_diff = sum / static_cast<double>(s.cells);
    s.fraction_below_005 = static_cast<double>(small) / static_cast<double>(s.cells);
    s.signed_diff = five_number_summary(std::move(diffs));
    s.abs_diff = five_number_summary(std::move(abs_diffs));
    return s;
}

}  // namespace ccid::models

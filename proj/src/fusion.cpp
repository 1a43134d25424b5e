#include "ccid/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace ccid {

FusionMethod parse_fusion_method(const std::string& name) {
    if (name == "dct") return FusionMethod::dct;
    if (name == "dwt") return FusionMethod::dwt;
    if (name == "dwt_corr" || name == "dwt-corr") return FusionMethod::dwt_corr;
    throw InvalidArgument("unknown fusion method '" + name + "' (expected dct, dwt or dwt_corr)");
}

std::string to_string(FusionMethod method) {
    switch (method) {
        case FusionMethod::dct: return "dct";
        case FusionMethod::dwt: return "dwt";
        case FusionMethod::dwt_corr: return "dwt_corr";
    }
    return "unknown";
}

void FusionParams::validate() const {
    if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("fusion weight must lie in [0, 1]");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0, 1]");
    if (!(mask_scale > 0.0)) throw InvalidArgument("mask scale must be positive");
    if (!(mask_eps > 0.0)) throw InvalidArgument("mask epsilon must be positive");
    if (!(corr_eps > 0.0)) throw InvalidArgument("correlation epsilon must be positive");
    if (levels < 1) throw InvalidArgument("DWT levels must be >= 1");
}

std::vector<double> dct_mask(int height, int width, double weight, double a, double eps) {
    const double s = a * (1.0 / (1.0 - weight + eps) - 1.0);
    std::vector<double> mask(static_cast<std::size_t>(height) * width);
    for (int u = 0; u < height; ++u) {
        const double ny = static_cast<double>(u) / height;
        for (int v = 0; v < width; ++v) {
            const double nx = static_cast<double>(v) / width;
            mask[static_cast<std::size_t>(u) * width + v] = std::exp(-(ny * ny + nx * nx) / (2.0 * s));
        }
    }
    mask[0] = 1.0;
    return mask;
}

namespace {

bool is_endpoint(double w, const Image& reliable, const Image& hallucinatory, Image& out) {
    if (w <= 0.0) {
        out = reliable;
        return true;
    }
    if (w >= 1.0) {
        out = hallucinatory;
        return true;
    }
    return false;
}

// Both spectra of a DCT fusion, reused across several weights.
struct DctPair {
    DctSpectrum reliable;
    DctSpectrum hallucinatory;
};

Image fuse_spectra(const DctPair& pair, double weight, const FusionParams& params) {
    const auto mask = dct_mask(pair.reliable.height, pair.reliable.width, weight, params.mask_scale, params.mask_eps);
    DctSpectrum mixed = pair.reliable;
    for (std::size_t i = 0; i < mixed.coeffs.size(); ++i) {
        mixed.coeffs[i] += mask[i] * (pair.hallucinatory.coeffs[i] - pair.reliable.coeffs[i]);
    }
    return idct2(mixed);
}

// corr_eps <= 0 disables the coefficient-similarity term.
Image fuse_dwt_impl(const Image& reliable, const Image& hallucinatory, double weight, int levels, Wavelet wavelet,
                    double corr_eps) {
    WaveletPyramid r = dwt2(reliable, wavelet, levels);
    const WaveletPyramid h = dwt2(hallucinatory, wavelet, levels);

    const double a0 = band_alpha(weight, levels, 0);
    auto ra = r.approx.pixels();
    auto ha = h.approx.pixels();
    for (std::size_t i = 0; i < ra.size(); ++i) ra[i] = (1.0 - a0) * ra[i] + a0 * ha[i];

    for (int b = 1; b <= levels; ++b) {
        const double alpha = band_alpha(weight, levels, b);
        DetailBands& rd = r.details[b - 1];
        const DetailBands& hd = h.details[b - 1];
        const std::pair<Image*, const Image*> bands[] = {
            {&rd.horizontal, &hd.horizontal}, {&rd.vertical, &hd.vertical}, {&rd.diagonal, &hd.diagonal}};
        for (auto [rb, hb] : bands) {
            auto rp = rb->pixels();
            auto hp = hb->pixels();
            for (std::size_t i = 0; i < rp.size(); ++i) {
                double a = alpha;
                if (corr_eps > 0.0) a *= weight + (1.0 - weight) * coefficient_similarity(rp[i], hp[i], corr_eps);
                rp[i] = (1.0 - a) * rp[i] + a * hp[i];
            }
        }
    }
    return idwt2(r);
}

}  // namespace

Image fuse_dct(const Image& reliable, const Image& hallucinatory, const FusionParams& params) {
    require_same_shape(reliable, hallucinatory, "fuse_dct");
    params.validate();
    Image out;
    if (is_endpoint(params.weight, reliable, hallucinatory, out)) return out;
    return fuse_spectra({dct2(reliable), dct2(hallucinatory)}, params.weight, params);
}

double band_alpha(double weight, int levels, int band) {
    return std::clamp(weight * (levels + 1) - band, 0.0, 1.0);
}

Image fuse_dwt(const Image& reliable, const Image& hallucinatory, const FusionParams& params) {
    require_same_shape(reliable, hallucinatory, "fuse_dwt");
    params.validate();
    Image out;
    if (is_endpoint(params.weight, reliable, hallucinatory, out)) return out;
    return fuse_dwt_impl(reliable, hallucinatory, params.weight, params.levels, params.wavelet, 0.0);
}

double coefficient_similarity(double r, double h, double eps) {
    return std::clamp((2.0 * r * h + eps) / (r * r + h * h + eps), 0.0, 1.0);
}

Image fuse_dwt_corr(const Image& reliable, const Image& hallucinatory, const FusionParams& params) {
    require_same_shape(reliable, hallucinatory, "fuse_dwt_corr");
    params.validate();
    Image out;
    if (is_endpoint(params.weight, reliable, hallucinatory, out)) return out;
    return fuse_dwt_impl(reliable, hallucinatory, params.weight, params.levels, params.wavelet, params.corr_eps);
}

double region_weight(double weight, double confidence, double threshold) {
    return std::clamp(weight * (1.0 + confidence - threshold), 0.0, 1.0);
}

Image fuse_dwt_regions(const Image& reliable, const Image& hallucinatory, const Image& region_weights,
                       const FusionParams& params) {
    require_same_shape(reliable, hallucinatory, "fuse_dwt_regions");
    params.validate();
    const int h = reliable.height();
    const int w = reliable.width();
    const int rows = confidence_rows(h);
    const int cols = confidence_cols(w);
    if (region_weights.height() != rows || region_weights.width() != cols) {
        throw InvalidArgument("region weight grid must be " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    const Image r = pad_reflect(reliable, rows * kConfidenceCell, cols * kConfidenceCell);
    const Image hl = pad_reflect(hallucinatory, rows * kConfidenceCell, cols * kConfidenceCell);
    const double corr = params.method == FusionMethod::dwt_corr ? params.corr_eps : 0.0;

    Image out(r.height(), r.width());
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const int y0 = i * kConfidenceCell;
            const int x0 = j * kConfidenceCell;
            const double wr = region_weights(i, j);
            Image rp = r.crop(y0, x0, kConfidenceCell, kConfidenceCell);
            Image hp = hl.crop(y0, x0, kConfidenceCell, kConfidenceCell);
            Image fused;
            if (!is_endpoint(wr, rp, hp, fused)) {
                fused = fuse_dwt_impl(rp, hp, wr, kPatchLevels, Wavelet::haar, corr);
            }
            out.paste(fused, y0, x0);
        }
    }
    return (out.height() == h && out.width() == w) ? out : out.crop(0, 0, h, w);
}

Image fuse_dwt_patchwise(const Image& reliable, const Image& hallucinatory, const FusionParams& params) {
    params.validate();
    const Image weights(confidence_rows(reliable.height()), confidence_cols(reliable.width()), params.weight);
    return fuse_dwt_regions(reliable, hallucinatory, weights, params);
}

Image fuse_dwt_guided(const Image& reliable, const Image& hallucinatory, const ConfidenceMap& conf,
                      const FusionParams& params) {
    params.validate();
    if (!conf.matches(reliable.height(), reliable.width())) {
        throw InvalidArgument("confidence map " + std::to_string(conf.rows) + "x" + std::to_string(conf.cols) +
                              " does not match image " + std::to_string(reliable.height()) + "x" +
                              std::to_string(reliable.width()));
    }
    Image weights(conf.rows, conf.cols);
    for (int i = 0; i < conf.rows; ++i) {
        for (int j = 0; j < conf.cols; ++j) weights(i, j) = region_weight(params.weight, conf(i, j), params.threshold);
    }
    return fuse_dwt_regions(reliable, hallucinatory, weights, params);
}

Image upsample_confidence(const ConfidenceMap& conf, int height, int width) {
    if (!conf.matches(height, width)) throw InvalidArgument("confidence map does not match image size");
    const Image grid = to_image(conf);
    Image full = resize_bicubic(grid, conf.rows * kConfidenceCell, conf.cols * kConfidenceCell);
    if (full.height() != height || full.width() != width) full = full.crop(0, 0, height, width);
    return clamp01(full);
}

Image fuse_dct_guided(const Image& reliable, const Image& hallucinatory, const ConfidenceMap& conf,
                      const FusionParams& params) {
    require_same_shape(reliable, hallucinatory, "fuse_dct_guided");
    params.validate();
    const int h = reliable.height();
    const int w = reliable.width();
    const Image conf_px = upsample_confidence(conf, h, w);

    constexpr int steps = kDctWeightLevels - 1;
    std::vector<int> lower(conf_px.size());
    std::vector<double> frac(conf_px.size());
    std::vector<bool> needed(kDctWeightLevels, false);
    for (std::size_t i = 0; i < conf_px.size(); ++i) {
        const double wp = region_weight(params.weight, conf_px.pixels()[i], params.threshold) * steps;
        const int k = std::min(static_cast<int>(std::floor(wp)), steps - 1);
        lower[i] = k;
        frac[i] = wp - k;
        needed[k] = true;
        if (frac[i] > 0.0) needed[k + 1] = true;
    }

    std::optional<DctPair> spectra;
    std::vector<Image> level_out(kDctWeightLevels);
    for (int k = 0; k < kDctWeightLevels; ++k) {
        if (!needed[k]) continue;
        if (k == 0) {
            level_out[k] = reliable;
        } else if (k == steps) {
            level_out[k] = hallucinatory;
        } else {
            if (!spectra) spectra = DctPair{dct2(reliable), dct2(hallucinatory)};
            level_out[k] = fuse_spectra(*spectra, static_cast<double>(k) / steps, params);
        }
    }

    Image out(h, w);
    auto op = out.pixels();
    for (std::size_t i = 0; i < op.size(); ++i) {
        const int k = lower[i];
        const double f = frac[i];
        const double lo = level_out[k].pixels()[i];
        op[i] = f > 0.0 ? (1.0 - f) * lo + f * level_out[k + 1].pixels()[i] : lo;
    }
    return out;
}

Image fuse(const Image& reliable, const Image& hallucinatory, const FusionParams& params, const ConfidenceMap* conf) {
    if (params.guided) {
        if (conf == nullptr) throw InvalidArgument("guided fusion requires a confidence map");
        if (params.method == FusionMethod::dct) return fuse_dct_guided(reliable, hallucinatory, *conf, params);
        return fuse_dwt_guided(reliable, hallucinatory, *conf, params);
    }
    switch (params.method) {
        case FusionMethod::dct: return fuse_dct(reliable, hallucinatory, params);
        case FusionMethod::dwt: return fuse_dwt(reliable, hallucinatory, params);
        case FusionMethod::dwt_corr: return fuse_dwt_corr(reliable, hallucinatory, params);
    }
    throw InvalidArgument("unhandled fusion method");
}

}  // namespace ccid

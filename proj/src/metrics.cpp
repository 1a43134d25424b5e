#include "ccid/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace ccid {

double mse(const Image& a, const Image& b) {
    require_same_shape(a, b, "mse");
    double acc = 0.0;
    auto pa = a.pixels();
    auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = pa[i] - pb[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pa.size());
}

double psnr_from_mse(double mse_value) {
    if (mse_value <= 0.0) return kInfinitePsnr;
    return 10.0 * std::log10(1.0 / mse_value);
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

namespace {

// "Valid" separable correlation with a symmetric 1-D kernel.
Image filter_valid(const Image& img, const std::vector<double>& taps) {
    const int n = static_cast<int>(taps.size());
    const int h = img.height();
    const int w = img.width();
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    Image tmp(h, ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += taps[k] * img(y, x + k);
            tmp(y, x) = acc;
        }
    }
    Image out(oh, ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += taps[k] * tmp(y + k, x);
            out(y, x) = acc;
        }
    }
    return out;
}

Image multiply(const Image& a, const Image& b) {
    Image out = a;
    auto po = out.pixels();
    auto pb = b.pixels();
    for (std::size_t i = 0; i < po.size(); ++i) po[i] *= pb[i];
    return out;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimOptions& opts) {
    require_same_shape(a, b, "ssim");
    if (a.height() < opts.window || a.width() < opts.window) {
        throw InvalidArgument("ssim needs images of at least " + std::to_string(opts.window) + "x" +
                              std::to_string(opts.window));
    }
    std::vector<double> taps(opts.window);
    double sum = 0.0;
    const int r = opts.window / 2;
    for (int k = 0; k < opts.window; ++k) {
        const double d = k - r;
        taps[k] = std::exp(-d * d / (2.0 * opts.sigma * opts.sigma));
        sum += taps[k];
    }
    for (double& t : taps) t /= sum;

    const double c1 = (opts.k1 * opts.dynamic_range) * (opts.k1 * opts.dynamic_range);
    const double c2 = (opts.k2 * opts.dynamic_range) * (opts.k2 * opts.dynamic_range);

    const Image mu_a = filter_valid(a, taps);
    const Image mu_b = filter_valid(b, taps);
    const Image e_aa = filter_valid(multiply(a, a), taps);
    const Image e_bb = filter_valid(multiply(b, b), taps);
    const Image e_ab = filter_valid(multiply(a, b), taps);

    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a.pixels()[i];
        const double mb = mu_b.pixels()[i];
        const double var_a = e_aa.pixels()[i] - ma * ma;
        const double var_b = e_bb.pixels()[i] - mb * mb;
        const double cov = e_ab.pixels()[i] - ma * mb;
        acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
    return acc / static_cast<double>(mu_a.size());
}

QualityScores score(const Image& candidate, const Image& reference) {
    QualityScores s;
    s.mse = mse(candidate, reference);
    s.psnr = psnr_from_mse(s.mse);
    s.ssim = ssim(candidate, reference);
    return s;
}

std::vector<double> weight_grid(int intervals) {
    if (intervals < 1) throw InvalidArgument("weight grid needs at least one interval");
    std::vector<double> grid(intervals + 1);
    for (int i = 0; i <= intervals; ++i) grid[i] = static_cast<double>(i) / intervals;
    return grid;
}

SweepResult sweep(const Image& reliable, const Image& hallucinatory, const Image& ground_truth,
                  const FusionParams& params, const std::vector<double>& grid, const ConfidenceMap* conf) {
    require_same_shape(reliable, ground_truth, "sweep");
    if (grid.empty()) throw InvalidArgument("sweep grid is empty");
    SweepResult res;
    res.weights = grid;
    for (double w : grid) {
        if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("sweep weights must lie in [0, 1]");
        FusionParams p = params;
        p.weight = w;
        const QualityScores s = score(fuse(reliable, hallucinatory, p, conf), ground_truth);
        res.psnr.push_back(s.psnr);
        res.ssim.push_back(s.ssim);
        res.mse.push_back(s.mse);
    }

    // PSNR is a decreasing function of MSE, so both share one extremum.
    std::size_t best_mse = 0;
    std::size_t best_ssim = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (res.mse[i] < res.mse[best_mse]) best_mse = i;
        if (res.ssim[i] > res.ssim[best_ssim]) best_ssim = i;
    }
    res.best_w_mse = grid[best_mse];
    res.best_w_psnr = grid[best_mse];
    res.best_w_ssim = grid[best_ssim];

    const QualityScores at_one = score(hallucinatory, ground_truth);
    auto diff = [](double a, double b) { return a == b ? 0.0 : a - b; };  // inf - inf
    res.delta_psnr = diff(res.psnr[best_mse], at_one.psnr);
    res.delta_ssim = res.ssim[best_ssim] - at_one.ssim;
    res.delta_mse = res.mse[best_mse] - at_one.mse;
    return res;
}

std::string format_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
    out << "w,psnr,ssim,mse\n";
    for (std::size_t i = 0; i < result.weights.size(); ++i) {
        out << format_metric(result.weights[i]) << ',' << format_metric(result.psnr[i]) << ','
            << format_metric(result.ssim[i]) << ',' << format_metric(result.mse[i]) << '\n';
    }
    out << "# best_psnr_w=" << format_metric(result.best_w_psnr) << '\n';
    out << "# best_ssim_w=" << format_metric(result.best_w_ssim) << '\n';
    out << "# best_mse_w=" << format_metric(result.best_w_mse) << '\n';
    out << "# delta_psnr=" << format_metric(result.delta_psnr) << '\n';
    out << "# delta_ssim=" << format_metric(result.delta_ssim) << '\n';
    out << "# delta_mse=" << format_metric(result.delta_mse) << '\n';
}

}  // namespace ccid

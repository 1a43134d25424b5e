#include "ccid/transforms.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace ccid {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Orthonormal DCT-II basis, row u = frequency. Cached per size.
std::shared_ptr<const RowMatrix> dct_basis(int n) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const RowMatrix>> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    auto basis = std::make_shared<RowMatrix>(n, n);
    const double a0 = std::sqrt(1.0 / n);
    const double a1 = std::sqrt(2.0 / n);
    for (int u = 0; u < n; ++u) {
        const double a = u == 0 ? a0 : a1;
        for (int i = 0; i < n; ++i) {
            (*basis)(u, i) = a * std::cos(std::numbers::pi * u * (2.0 * i + 1.0) / (2.0 * n));
        }
    }
    if (cache.size() > 64) cache.clear();
    cache.emplace(n, basis);
    return basis;
}

}  // namespace

DctSpectrum dct2(const Image& img) {
    const int h = img.height();
    const int w = img.width();
    const auto rows = dct_basis(h);
    const auto cols = dct_basis(w);
    Eigen::Map<const RowMatrix> x(img.pixels().data(), h, w);
    DctSpectrum out(h, w);
    Eigen::Map<RowMatrix> f(out.coeffs.data(), h, w);
    f.noalias() = (*rows) * x * cols->transpose();
    return out;
}

Image idct2(const DctSpectrum& spectrum) {
    const int h = spectrum.height;
    const int w = spectrum.width;
    if (h < 1 || w < 1 || spectrum.coeffs.size() != static_cast<std::size_t>(h) * w) {
        throw InvalidArgument("malformed DCT spectrum");
    }
    const auto rows = dct_basis(h);
    const auto cols = dct_basis(w);
    Eigen::Map<const RowMatrix> f(spectrum.coeffs.data(), h, w);
    Image out(h, w);
    Eigen::Map<RowMatrix> x(out.pixels().data(), h, w);
    x.noalias() = rows->transpose() * f * (*cols);
    return out;
}

Wavelet parse_wavelet(const std::string& name) {
    if (name == "haar") return Wavelet::haar;
    if (name == "db2") return Wavelet::db2;
    throw InvalidArgument("unknown wavelet '" + name + "' (expected haar or db2)");
}

std::string to_string(Wavelet w) { return w == Wavelet::haar ? "haar" : "db2"; }

std::vector<double> wavelet_lowpass(Wavelet w) {
    if (w == Wavelet::haar) return {std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0};
    const double s3 = std::sqrt(3.0);
    const double norm = 4.0 * std::numbers::sqrt2;
    return {(1.0 + s3) / norm, (3.0 + s3) / norm, (3.0 - s3) / norm, (1.0 - s3) / norm};
}

double WaveletPyramid::energy() const {
    auto sq = [](const Image& img) {
        double acc = 0.0;
        for (double v : img.pixels()) acc += v * v;
        return acc;
    };
    double total = sq(approx);
    for (const auto& d : details) total += sq(d.horizontal) + sq(d.vertical) + sq(d.diagonal);
    return total;
}

int max_dwt_levels(int height, int width) noexcept {
    int levels = 0;
    while ((2 << levels) <= std::min(height, width)) ++levels;
    return levels;
}

namespace {

struct FilterBank {
    std::vector<double> low;
    std::vector<double> high;
};

FilterBank make_bank(Wavelet w) {
    FilterBank bank;
    bank.low = wavelet_lowpass(w);
    const std::size_t n = bank.low.size();
    bank.high.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        bank.high[i] = sign * bank.low[n - 1 - i];
    }
    return bank;
}

// One periodic analysis step over a strided signal of even length n.
void analyze(const FilterBank& bank, const double* in, std::ptrdiff_t in_stride, int n, double* low,
             double* high, std::ptrdiff_t out_stride) {
    const int half = n / 2;
    const int taps = static_cast<int>(bank.low.size());
    for (int k = 0; k < half; ++k) {
        double lo = 0.0;
        double hi = 0.0;
        for (int t = 0; t < taps; ++t) {
            const double v = in[((2 * k + t) % n) * in_stride];
            lo += bank.low[t] * v;
            hi += bank.high[t] * v;
        }
        low[k * out_stride] = lo;
        high[k * out_stride] = hi;
    }
}

// Transpose of analyze(); out must be zeroed, length n.
void synthesize(const FilterBank& bank, const double* low, const double* high, std::ptrdiff_t in_stride, int n,
                double* out, std::ptrdiff_t out_stride) {
    const int half = n / 2;
    const int taps = static_cast<int>(bank.low.size());
    for (int k = 0; k < half; ++k) {
        const double lo = low[k * in_stride];
        const double hi = high[k * in_stride];
        for (int t = 0; t < taps; ++t) {
            out[((2 * k + t) % n) * out_stride] += bank.low[t] * lo + bank.high[t] * hi;
        }
    }
}

int even_up(int n) { return n + (n & 1); }

}  // namespace

WaveletPyramid dwt2(const Image& img, Wavelet wavelet, int levels) {
    if (levels < 1) throw InvalidArgument("dwt2 needs at least one level");
    if (levels > max_dwt_levels(img.height(), img.width())) {
        throw InvalidArgument("dwt2: " + std::to_string(levels) + " levels is too many for a " +
                              std::to_string(img.height()) + "x" + std::to_string(img.width()) + " image");
    }
    const FilterBank bank = make_bank(wavelet);
    WaveletPyramid pyr;
    pyr.wavelet = wavelet;
    pyr.levels = levels;
    pyr.details.resize(levels);

    Image current = img;
    for (int level = 0; level < levels; ++level) {
        const int sh = current.height();
        const int sw = current.width();
        const Image padded = pad_reflect(current, even_up(sh), even_up(sw));
        const int h = padded.height();
        const int w = padded.width();
        const int hh = h / 2;
        const int hw = w / 2;

        // Rows: left half low-pass, right half high-pass.
        Image rows(h, w);
        for (int y = 0; y < h; ++y) {
            analyze(bank, padded.row(y).data(), 1, w, rows.row(y).data(), rows.row(y).data() + hw, 1);
        }
        // Columns: top half low-pass, bottom half high-pass.
        Image both(h, w);
        for (int x = 0; x < w; ++x) {
            analyze(bank, rows.pixels().data() + x, w, h, both.pixels().data() + x, both.pixels().data() + hh * w + x,
                    w);
        }
        DetailBands& bands = pyr.details[levels - 1 - level];
        bands.source_height = sh;
        bands.source_width = sw;
        bands.horizontal = both.crop(0, hw, hh, hw);
        bands.vertical = both.crop(hh, 0, hh, hw);
        bands.diagonal = both.crop(hh, hw, hh, hw);
        current = both.crop(0, 0, hh, hw);
    }
    pyr.approx = std::move(current);
    return pyr;
}

Image idwt2(const WaveletPyramid& pyr) {
    if (pyr.levels < 1 || static_cast<int>(pyr.details.size()) != pyr.levels) {
        throw InvalidArgument("idwt2: pyramid level count does not match its detail bands");
    }
    const FilterBank bank = make_bank(pyr.wavelet);
    Image current = pyr.approx;
    for (const auto& bands : pyr.details) {
        const int hh = current.height();
        const int hw = current.width();
        for (const Image* band : {&bands.horizontal, &bands.vertical, &bands.diagonal}) {
            if (band->height() != hh || band->width() != hw) {
                throw InvalidArgument("idwt2: inconsistent band dimensions");
            }
        }
        if (even_up(bands.source_height) != 2 * hh || even_up(bands.source_width) != 2 * hw) {
            throw InvalidArgument("idwt2: recorded source size does not match band dimensions");
        }
        const int h = 2 * hh;
        const int w = 2 * hw;
        Image both(h, w);
        both.paste(current, 0, 0);
        both.paste(bands.horizontal, 0, hw);
        both.paste(bands.vertical, hh, 0);
        both.paste(bands.diagonal, hh, hw);

        Image rows(h, w, 0.0);
        for (int x = 0; x < w; ++x) {
            synthesize(bank, both.pixels().data() + x, both.pixels().data() + hh * w + x, w, h,
                       rows.pixels().data() + x, w);
        }
        Image out(h, w, 0.0);
        for (int y = 0; y < h; ++y) {
            synthesize(bank, rows.row(y).data(), rows.row(y).data() + hw, 1, w, out.row(y).data(), 1);
        }
        current = (h == bands.source_height && w == bands.source_width)
                      ? std::move(out)
                      : out.crop(0, 0, bands.source_height, bands.source_width);
    }
    return current;
}

}  // namespace ccid

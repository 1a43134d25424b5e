#include "ccid/filters.hpp"

#include <cmath>
#include <sstream>

namespace ccid {

ReliableKind parse_reliable_kind(const std::string& name) {
    if (name == "gaussian") return ReliableKind::gaussian;
    if (name == "bilateral") return ReliableKind::bilateral;
    if (name == "nlm") return ReliableKind::nlm;
    if (name == "bicubic_upscale" || name == "bicubic") return ReliableKind::bicubic_upscale;
    throw InvalidArgument("unknown reliable filter '" + name + "'");
}

std::string to_string(ReliableKind kind) {
    switch (kind) {
        case ReliableKind::gaussian: return "gaussian";
        case ReliableKind::bilateral: return "bilateral";
        case ReliableKind::nlm: return "nlm";
        case ReliableKind::bicubic_upscale: return "bicubic_upscale";
    }
    return "unknown";
}

void ReliableFilterSpec::validate() const {
    switch (kind) {
        case ReliableKind::gaussian:
            if (!(gaussian_sigma > 0.0)) throw InvalidArgument("gaussian_sigma must be positive");
            break;
        case ReliableKind::bilateral:
            if (!(bilateral_sigma_space > 0.0) || !(bilateral_sigma_range > 0.0)) {
                throw InvalidArgument("bilateral sigmas must be positive");
            }
            break;
        case ReliableKind::nlm:
            if (nlm_patch < 1 || nlm_patch % 2 == 0 || nlm_window < 1 || nlm_window % 2 == 0) {
                throw InvalidArgument("nlm patch and window must be odd and positive");
            }
            if (!(nlm_h > 0.0)) throw InvalidArgument("nlm h must be positive");
            break;
        case ReliableKind::bicubic_upscale:
            if (scale < 2 || scale > 4) throw InvalidArgument("upscale factor must be 2, 3 or 4");
            break;
    }
}

std::string ReliableFilterSpec::key() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind);
    switch (kind) {
        case ReliableKind::gaussian: os << ":" << gaussian_sigma; break;
        case ReliableKind::bilateral: os << ":" << bilateral_sigma_space << ":" << bilateral_sigma_range; break;
        case ReliableKind::nlm: os << ":" << nlm_patch << ":" << nlm_window << ":" << nlm_h; break;
        case ReliableKind::bicubic_upscale: os << ":" << scale; break;
    }
    return os.str();
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        taps[k + radius] = std::exp(-(k * k) / (2.0 * sigma * sigma));
        sum += taps[k + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

Image gaussian_filter(const Image& img, double sigma) {
    const auto taps = gaussian_kernel(sigma);
    const int radius = static_cast<int>(taps.size() / 2);
    const int h = img.height();
    const int w = img.width();

    Image tmp(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * img(y, reflect_index(x + k, w));
            tmp(y, x) = acc;
        }
    }
    Image out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * tmp(reflect_index(y + k, h), x);
            out(y, x) = acc;
        }
    }
    return out;
}

Image bilateral_filter(const Image& img, double sigma_space, double sigma_range) {
    if (!(sigma_space > 0.0) || !(sigma_range > 0.0)) throw InvalidArgument("bilateral sigmas must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_space));
    const int side = 2 * radius + 1;
    std::vector<double> spatial(static_cast<std::size_t>(side) * side);
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            spatial[(dy + radius) * side + dx + radius] =
                std::exp(-(dy * dy) / (2.0 * sigma_space * sigma_space)) *
                std::exp(-(dx * dx) / (2.0 * sigma_space * sigma_space));
        }
    }
    const double range_scale = -1.0 / (2.0 * sigma_range * sigma_range);
    const int h = img.height();
    const int w = img.width();
    Image out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double centre = img(y, x);
            double num = 0.0;
            double den = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int sy = reflect_index(y + dy, h);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const double v = img(sy, reflect_index(x + dx, w));
                    const double diff = v - centre;
                    const double wgt = spatial[(dy + radius) * side + dx + radius] * std::exp(diff * diff * range_scale);
                    num += wgt * v;
                    den += wgt;
                }
            }
            out(y, x) = num / den;
        }
    }
    return out;
}

namespace {

void check_nlm_args(int patch, int window, double h) {
    if (patch < 1 || patch % 2 == 0) throw InvalidArgument("nlm patch size must be odd, got " + std::to_string(patch));
    if (window < 1 || window % 2 == 0) {
        throw InvalidArgument("nlm window size must be odd, got " + std::to_string(window));
    }
    if (!(h > 0.0)) throw InvalidArgument("nlm h must be positive");
}

}  // namespace

Image nlm_filter(const Image& img, int patch, int window, double h) {
    check_nlm_args(patch, window, h);
    const int pr = patch / 2;
    const int wr = window / 2;
    const int margin = pr + wr;
    const int height = img.height();
    const int width = img.width();
    const int ph = height + 2 * margin;
    const int pw = width + 2 * margin;

    // Reflect-padded copy so every patch and candidate read is a plain index.
    std::vector<double> padded(static_cast<std::size_t>(ph) * pw);
    for (int y = 0; y < ph; ++y) {
        const int sy = reflect_index(y - margin, height);
        for (int x = 0; x < pw; ++x) padded[y * pw + x] = img(sy, reflect_index(x - margin, width));
    }
    auto at = [&](int y, int x) { return padded[static_cast<std::size_t>(y) * pw + x]; };

    // Offsets are processed one at a time: squared differences over the
    // region the patches can touch, then box sums from an integral image.
    const int rh = height + 2 * pr;
    const int rw = width + 2 * pr;
    std::vector<double> integral(static_cast<std::size_t>(rh + 1) * (rw + 1));
    std::vector<double> num(static_cast<std::size_t>(height) * width, 0.0);
    std::vector<double> den(static_cast<std::size_t>(height) * width, 0.0);
    const double inv_h2 = 1.0 / (h * h);
    const double inv_area = 1.0 / (patch * patch);

    for (int oy = -wr; oy <= wr; ++oy) {
        for (int ox = -wr; ox <= wr; ++ox) {
            for (int y = 0; y < rh; ++y) {
                double row_sum = 0.0;
                for (int x = 0; x < rw; ++x) {
                    const int py = y + wr;  // region origin sits at padded (wr, wr)
                    const int px = x + wr;
                    const double d = at(py, px) - at(py + oy, px + ox);
                    row_sum += d * d;
                    integral[(y + 1) * (rw + 1) + x + 1] = integral[y * (rw + 1) + x + 1] + row_sum;
                }
            }
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) {
                    const int y0 = y;
                    const int x0 = x;
                    const int y1 = y + patch;
                    const int x1 = x + patch;
                    const double box = integral[y1 * (rw + 1) + x1] - integral[y0 * (rw + 1) + x1] -
                                       integral[y1 * (rw + 1) + x0] + integral[y0 * (rw + 1) + x0];
                    const double d2 = std::max(box * inv_area, 0.0);
                    const double wgt = std::exp(-d2 * inv_h2);
                    const std::size_t i = static_cast<std::size_t>(y) * width + x;
                    num[i] += wgt * at(y + margin + oy, x + margin + ox);
                    den[i] += wgt;
                }
            }
        }
    }
    Image out(height, width);
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = num[i] / den[i];
    return out;
}

Image nlm_weights(const Image& img, int y, int x, int patch, int window, double h) {
    check_nlm_args(patch, window, h);
    const int pr = patch / 2;
    const int wr = window / 2;
    const int height = img.height();
    const int width = img.width();
    auto value = [&](int yy, int xx) { return img(reflect_index(yy, height), reflect_index(xx, width)); };
    Image weights(window, window);
    for (int oy = -wr; oy <= wr; ++oy) {
        for (int ox = -wr; ox <= wr; ++ox) {
            double ssd = 0.0;
            for (int ky = -pr; ky <= pr; ++ky) {
                for (int kx = -pr; kx <= pr; ++kx) {
                    const double d = value(y + ky, x + kx) - value(y + oy + ky, x + ox + kx);
                    ssd += d * d;
                }
            }
            weights(oy + wr, ox + wr) = std::exp(-(ssd / (patch * patch)) / (h * h));
        }
    }
    return weights;
}

Image reliable_denoise(const Image& img, const ReliableFilterSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case ReliableKind::gaussian: return gaussian_filter(img, spec.gaussian_sigma);
        case ReliableKind::bilateral:
            return bilateral_filter(img, spec.bilateral_sigma_space, spec.bilateral_sigma_range);
        case ReliableKind::nlm: return nlm_filter(img, spec.nlm_patch, spec.nlm_window, spec.nlm_h);
        case ReliableKind::bicubic_upscale:
            return resize_bicubic(img, img.height() * spec.scale, img.width() * spec.scale);
    }
    throw InvalidArgument("unhandled reliable filter");
}

}  // namespace ccid

#include "ccid/nn/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace ccid::nn {

namespace {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const Matrix<T>>;
template <typename T>
using Map = Eigen::Map<Matrix<T>>;

template <typename T>
void require_rank3(const BasicTensor<T>& t, const char* what) {
    if (t.rank() != 3) throw InvalidArgument(std::string(what) + ": expected a (C, H, W) tensor");
}

template <typename T>
int check_conv_shapes(const BasicTensor<T>& input, const BasicTensor<T>& kernel) {
    require_rank3(input, "conv2d");
    if (kernel.rank() != 4) throw InvalidArgument("conv2d: kernel must be (out, in, k, k)");
    const int k = kernel.dim(2);
    if (k != kernel.dim(3) || (k != 1 && k != 3)) throw InvalidArgument("conv2d: kernel must be 1x1 or 3x3");
    if (kernel.dim(1) != input.dim(0)) {
        throw InvalidArgument("conv2d: kernel expects " + std::to_string(kernel.dim(1)) + " input channels, got " +
                              std::to_string(input.dim(0)));
    }
    return k;
}

// Per-thread scratch matrices. Column buffers are megabytes at training
// sizes; reusing them avoids an mmap/munmap pair per convolution.
template <typename T>
Matrix<T>& scratch(int slot) {
    thread_local Matrix<T> buffers[2];
    return buffers[slot];
}

// Column matrix of shape (C*k*k, H*W): row (c, ky, kx) holds the input shifted
// by (ky - r, kx - r) with zeros outside.
template <typename T>
const Matrix<T>& im2col(const BasicTensor<T>& input, int k) {
    const int c_in = input.dim(0);
    const int h = input.dim(1);
    const int w = input.dim(2);
    const int r = k / 2;
    Matrix<T>& col = scratch<T>(0);
    col.setZero(static_cast<Eigen::Index>(c_in) * k * k, static_cast<Eigen::Index>(h) * w);
    for (int c = 0; c < c_in; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* dst = col.row((c * k + ky) * k + kx).data();
                const int dy = ky - r;
                const int dx = kx - r;
                const int x0 = std::max(0, -dx);
                const int x1 = std::min(w, w - dx);
                for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                    const T* src = input.data() + (static_cast<std::size_t>(c) * h + y + dy) * w;
                    T* out = dst + static_cast<std::size_t>(y) * w;
                    for (int x = x0; x < x1; ++x) out[x] = src[x + dx];
                }
            }
        }
    }
    return col;
}

template <typename T>
void col2im_add(const Matrix<T>& col, int k, BasicTensor<T>& grad_input) {
    const int c_in = grad_input.dim(0);
    const int h = grad_input.dim(1);
    const int w = grad_input.dim(2);
    const int r = k / 2;
    for (int c = 0; c < c_in; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* src = col.row((c * k + ky) * k + kx).data();
                const int dy = ky - r;
                const int dx = kx - r;
                const int x0 = std::max(0, -dx);
                const int x1 = std::min(w, w - dx);
                for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                    T* dst = &grad_input(c, y + dy, 0);
                    const T* in = src + static_cast<std::size_t>(y) * w;
                    for (int x = x0; x < x1; ++x) dst[x + dx] += in[x];
                }
            }
        }
    }
}

template <typename T>
void require_same(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
    if (!a.same_shape(b)) throw InvalidArgument(std::string(what) + ": shape mismatch");
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel, const BasicTensor<T>& bias) {
    const int k = check_conv_shapes(input, kernel);
    const int c_out = kernel.dim(0);
    if (bias.rank() != 1 || bias.dim(0) != c_out) throw InvalidArgument("conv2d: bias length must equal out channels");
    const int h = input.dim(1);
    const int w = input.dim(2);
    const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
    const Eigen::Index depth = static_cast<Eigen::Index>(input.dim(0)) * k * k;

    BasicTensor<T> out({c_out, h, w});
    Map<T> y(out.data(), c_out, hw);
    const MapC<T> kmat(kernel.data(), c_out, depth);
    if (k == 1) {
        y.noalias() = kmat * MapC<T>(input.data(), depth, hw);
    } else {
        y.noalias() = kmat * im2col(input, k);
    }
    for (int o = 0; o < c_out; ++o) y.row(o).array() += bias[o];
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                             const BasicTensor<T>& kernel) {
    const int k = check_conv_shapes(input, kernel);
    const int c_out = kernel.dim(0);
    const int h = input.dim(1);
    const int w = input.dim(2);
    if (grad_out.rank() != 3 || grad_out.dim(0) != c_out || grad_out.dim(1) != h || grad_out.dim(2) != w) {
        throw InvalidArgument("conv2d_backward: grad_out shape does not match the forward output");
    }
    const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
    const Eigen::Index depth = static_cast<Eigen::Index>(input.dim(0)) * k * k;
    const MapC<T> g(grad_out.data(), c_out, hw);
    const MapC<T> kmat(kernel.data(), c_out, depth);

    ConvGrads<T> grads{BasicTensor<T>(input.shape()), BasicTensor<T>(kernel.shape()), BasicTensor<T>({c_out})};
    for (int o = 0; o < c_out; ++o) {
        double acc = 0.0;
        const T* row = grad_out.data() + static_cast<std::size_t>(o) * hw;
        for (Eigen::Index i = 0; i < hw; ++i) acc += row[i];
        grads.bias[o] = static_cast<T>(acc);
    }

    Map<T> gk(grads.kernel.data(), c_out, depth);
    if (k == 1) {
        const MapC<T> x(input.data(), depth, hw);
        gk.noalias() = g * x.transpose();
        Map<T>(grads.input.data(), depth, hw).noalias() = kmat.transpose() * g;
    } else {
        const Matrix<T>& col = im2col(input, k);
        gk.noalias() = g * col.transpose();
        Matrix<T>& gcol = scratch<T>(1);
        gcol.noalias() = kmat.transpose() * g;
        col2im_add(gcol, k, grads.input);
    }
    return grads;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& t) {
    BasicTensor<T> out = t;
    for (T& v : out.values()) v = v > T(0) ? v : T(0);
    return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad, const BasicTensor<T>& input) {
    require_same(grad, input, "relu_backward");
    BasicTensor<T> out = grad;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(input[i] > T(0))) out[i] = T(0);
    }
    return out;
}

template <typename T>
BasicTensor<T> avgpool2(const BasicTensor<T>& t) {
    require_rank3(t, "avgpool2");
    const int c = t.dim(0);
    const int h = t.dim(1);
    const int w = t.dim(2);
    if (h % 2 != 0 || w % 2 != 0) throw InvalidArgument("avgpool2: height and width must be even");
    BasicTensor<T> out({c, h / 2, w / 2});
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h / 2; ++y) {
            for (int x = 0; x < w / 2; ++x) {
                out(ch, y, x) = (t(ch, 2 * y, 2 * x) + t(ch, 2 * y, 2 * x + 1) + t(ch, 2 * y + 1, 2 * x) +
                                 t(ch, 2 * y + 1, 2 * x + 1)) /
                                T(4);
            }
        }
    }
    return out;
}

template <typename T>
BasicTensor<T> avgpool2_backward(const BasicTensor<T>& grad) {
    require_rank3(grad, "avgpool2_backward");
    const int c = grad.dim(0);
    const int h = grad.dim(1);
    const int w = grad.dim(2);
    BasicTensor<T> out({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < 2 * h; ++y) {
            for (int x = 0; x < 2 * w; ++x) out(ch, y, x) = grad(ch, y / 2, x / 2) / T(4);
        }
    }
    return out;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& t) {
    BasicTensor<T> out = t;
    for (T& v : out.values()) {
        // Split by sign so exp never overflows.
        if (v >= T(0)) {
            v = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            v = e / (T(1) + e);
        }
    }
    return out;
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& grad, const BasicTensor<T>& output) {
    require_same(grad, output, "sigmoid_backward");
    BasicTensor<T> out = grad;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= output[i] * (T(1) - output[i]);
    return out;
}

template <typename T>
LossResult<T> asymmetric_sse(const BasicTensor<T>& output, const BasicTensor<T>& target, double p_under,
                             double p_over) {
    require_same(output, target, "asymmetric_sse");
    LossResult<T> r{0.0, BasicTensor<T>(output.shape())};
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double d = static_cast<double>(output[i]) - static_cast<double>(target[i]);
        const double p = d < 0.0 ? p_under : p_over;
        r.loss += p * d * d;
        r.grad[i] = static_cast<T>(2.0 * p * d);
    }
    return r;
}

template <typename T>
LossResult<T> mse_loss(const BasicTensor<T>& output, const BasicTensor<T>& target) {
    require_same(output, target, "mse_loss");
    LossResult<T> r{0.0, BasicTensor<T>(output.shape())};
    const double n = static_cast<double>(output.size());
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double d = static_cast<double>(output[i]) - static_cast<double>(target[i]);
        r.loss += d * d;
        r.grad[i] = static_cast<T>(2.0 * d / n);
    }
    r.loss /= n;
    return r;
}

#define CCID_INSTANTIATE(T)                                                                                   \
    template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);     \
    template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                                      \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);                      \
    template BasicTensor<T> avgpool2(const BasicTensor<T>&);                                                  \
    template BasicTensor<T> avgpool2_backward(const BasicTensor<T>&);                                         \
    template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                                   \
    template BasicTensor<T> sigmoid_backward(const BasicTensor<T>&, const BasicTensor<T>&);                   \
    template LossResult<T> asymmetric_sse(const BasicTensor<T>&, const BasicTensor<T>&, double, double);      \
    template LossResult<T> mse_loss(const BasicTensor<T>&, const BasicTensor<T>&);

CCID_INSTANTIATE(float)
CCID_INSTANTIATE(double)

#undef CCID_INSTANTIATE

}  // namespace ccid::nn

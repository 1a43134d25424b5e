#include "ccid/nn/network.hpp"

#include <cmath>
#include <random>

#include "ccid/hash.hpp"

namespace ccid::nn {

namespace {

std::string weight_name(const Layer& l) { return l.name + ".weight"; }
std::string bias_name(const Layer& l) { return l.name + ".bias"; }

template <typename T>
void add_into(BasicTensor<T>& dst, const BasicTensor<T>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Network& Network::conv(std::string name, int in_channels, int out_channels, int kernel) {
    if (in_channels < 1 || out_channels < 1) throw InvalidArgument("conv layer needs positive channel counts");
    if (kernel != 1 && kernel != 3) throw InvalidArgument("conv layer kernel must be 1 or 3");
    for (const auto& l : layers_) {
        if (l.kind == LayerKind::conv && l.name == name) throw InvalidArgument("duplicate layer name '" + name + "'");
    }
    layers_.push_back({LayerKind::conv, std::move(name), in_channels, out_channels, kernel});
    return *this;
}

Network& Network::relu() {
    layers_.push_back({LayerKind::relu, {}});
    return *this;
}

Network& Network::avgpool2() {
    layers_.push_back({LayerKind::avgpool2, {}});
    return *this;
}

Network& Network::sigmoid() {
    layers_.push_back({LayerKind::sigmoid, {}});
    return *this;
}

ModelParams Network::layout() const {
    ModelParams p;
    for (const auto& l : layers_) {
        if (l.kind != LayerKind::conv) continue;
        p.add(weight_name(l), Tensor({l.out_channels, l.in_channels, l.kernel, l.kernel}));
        p.add(bias_name(l), Tensor({l.out_channels}));
    }
    return p;
}

ModelParams Network::init(std::uint64_t seed) const {
    ModelParams p = layout();
    SplitMix64 rng(seed);
    for (const auto& l : layers_) {
        if (l.kind != LayerKind::conv) continue;
        const double fan_in = static_cast<double>(l.in_channels) * l.kernel * l.kernel;
        std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
        for (float& v : p.at(weight_name(l)).values()) v = static_cast<float>(normal(rng));
    }
    return p;
}

template <typename T>
void Network::check(const BasicParams<T>& params) const {
    for (const auto& l : layers_) {
        if (l.kind != LayerKind::conv) continue;
        const auto& w = params.at(weight_name(l));
        const auto& b = params.at(bias_name(l));
        if (w.shape() != std::vector<int>{l.out_channels, l.in_channels, l.kernel, l.kernel} ||
            b.shape() != std::vector<int>{l.out_channels}) {
            throw InvalidArgument("parameters for layer '" + l.name + "' have the wrong shape");
        }
    }
}

template <typename T>
BasicTensor<T> Network::forward(const BasicParams<T>& params, const BasicTensor<T>& input, Trace<T>* trace) const {
    if (trace != nullptr) {
        trace->inputs.clear();
        trace->inputs.reserve(layers_.size());
    }
    BasicTensor<T> x = input;
    for (const auto& l : layers_) {
        BasicTensor<T> y;
        switch (l.kind) {
            case LayerKind::conv: y = conv2d(x, params.at(weight_name(l)), params.at(bias_name(l))); break;
            case LayerKind::relu: y = nn::relu(x); break;
            case LayerKind::avgpool2: y = nn::avgpool2(x); break;
            case LayerKind::sigmoid: y = nn::sigmoid(x); break;
        }
        if (trace != nullptr) trace->inputs.push_back(std::move(x));
        x = std::move(y);
    }
    if (trace != nullptr) trace->output = x;
    return x;
}

template <typename T>
BasicTensor<T> Network::backward(const BasicParams<T>& params, const Trace<T>& trace,
                                 const BasicTensor<T>& grad_output, BasicParams<T>& grads) const {
    if (trace.inputs.size() != layers_.size()) throw InvalidArgument("trace does not belong to this network");
    if (!grad_output.same_shape(trace.output)) throw InvalidArgument("grad_output shape does not match the output");
    BasicTensor<T> g = grad_output;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const Layer& l = layers_[i];
        const BasicTensor<T>& x = trace.inputs[i];
        switch (l.kind) {
            case LayerKind::conv: {
                ConvGrads<T> cg = conv2d_backward(g, x, params.at(weight_name(l)));
                add_into(grads.at(weight_name(l)), cg.kernel);
                add_into(grads.at(bias_name(l)), cg.bias);
                g = std::move(cg.input);
                break;
            }
            case LayerKind::relu: g = relu_backward(g, x); break;
            case LayerKind::avgpool2: g = avgpool2_backward(g); break;
            case LayerKind::sigmoid: {
                const BasicTensor<T>& y = i + 1 < layers_.size() ? trace.inputs[i + 1] : trace.output;
                g = sigmoid_backward(g, y);
                break;
            }
        }
    }
    return g;
}

std::uint64_t content_hash(const ModelParams& params) {
    Fnv1a h;
    for (const auto& e : params.entries()) {
        h.text(e.name);
        h.values(std::span<const int>(e.tensor.shape()));
        h.values(std::span<const float>(e.tensor.values()));
    }
    return h.digest();
}

#define CCID_INSTANTIATE(T)                                                                                        \
    template void Network::check(const BasicParams<T>&) const;                                                    \
    template BasicTensor<T> Network::forward(const BasicParams<T>&, const BasicTensor<T>&, Trace<T>*) const;       \
    template BasicTensor<T> Network::backward(const BasicParams<T>&, const Trace<T>&, const BasicTensor<T>&,       \
                                              BasicParams<T>&) const;

CCID_INSTANTIATE(float)
CCID_INSTANTIATE(double)

#undef CCID_INSTANTIATE

}  // namespace ccid::nn

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccid/nn/ops.hpp"
#include "ccid/nn/tensor.hpp"

namespace ccid::nn {

enum class LayerKind { conv, relu, avgpool2, sigmoid };

struct Layer {
    LayerKind kind;
    std::string name;  // conv only; parameters are "<name>.weight" and "<name>.bias"
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
};

/// Activations recorded by a forward pass: inputs[i] is what layer i saw,
/// `output` is the final result.
template <typename T>
struct Trace {
    std::vector<BasicTensor<T>> inputs;
    BasicTensor<T> output;
};

/// Plain feed-forward stack of the engine's layer types.
class Network {
public:
    Network& conv(std::string name, int in_channels, int out_channels, int kernel);
    Network& relu();
    Network& avgpool2();
    Network& sigmoid();

    [[nodiscard]] const std::vector<Layer>& layers() const noexcept { return layers_; }

    /// Parameter layout with zero values, in declaration order.
    [[nodiscard]] ModelParams layout() const;
    /// He-normal weights (std sqrt(2 / fan_in)), zero biases.
    [[nodiscard]] ModelParams init(std::uint64_t seed) const;
    /// Throws unless `params` holds every declared tensor with the right shape.
    template <typename T>
    void check(const BasicParams<T>& params) const;

    template <typename T>
    [[nodiscard]] BasicTensor<T> forward(const BasicParams<T>& params, const BasicTensor<T>& input,
                                         Trace<T>* trace = nullptr) const;

    /// Back-propagates `grad_output` through a recorded pass and adds the
    /// parameter gradients into `grads` (which must have this layout).
    /// Returns the gradient with respect to the network input.
    template <typename T>
    BasicTensor<T> backward(const BasicParams<T>& params, const Trace<T>& trace, const BasicTensor<T>& grad_output,
                            BasicParams<T>& grads) const;

private:
    std::vector<Layer> layers_;
};

}  // namespace ccid::nn

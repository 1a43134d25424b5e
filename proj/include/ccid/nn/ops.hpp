#pragma once

#include "ccid/nn/tensor.hpp"

// Layer primitives. All are pure functions of their arguments and are
// instantiated for float (training) and double (gradient checks).

namespace ccid::nn {

/// Zero-padded "same" cross-correlation. input (C, H, W), kernel (O, C, k, k)
/// with k in {1, 3}, bias rank 1 of length O. Output (O, H, W).
template <typename T>
[[nodiscard]] BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                                    const BasicTensor<T>& bias);

template <typename T>
struct ConvGrads {
    BasicTensor<T> input;
    BasicTensor<T> kernel;
    BasicTensor<T> bias;
};

template <typename T>
[[nodiscard]] ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                           const BasicTensor<T>& kernel);

template <typename T>
[[nodiscard]] BasicTensor<T> relu(const BasicTensor<T>& t);
/// Passes `grad` where `input` > 0; the subgradient at 0 is 0.
template <typename T>
[[nodiscard]] BasicTensor<T> relu_backward(const BasicTensor<T>& grad, const BasicTensor<T>& input);

/// 2x2 mean with stride 2; H and W must be even.
template <typename T>
[[nodiscard]] BasicTensor<T> avgpool2(const BasicTensor<T>& t);
template <typename T>
[[nodiscard]] BasicTensor<T> avgpool2_backward(const BasicTensor<T>& grad);

template <typename T>
[[nodiscard]] BasicTensor<T> sigmoid(const BasicTensor<T>& t);
/// Takes the forward *output*, not the input.
template <typename T>
[[nodiscard]] BasicTensor<T> sigmoid_backward(const BasicTensor<T>& grad, const BasicTensor<T>& output);

template <typename T>
struct LossResult {
    double loss = 0.0;
    BasicTensor<T> grad;
};

/// sum (o - t)^2 * p, with p = p_under where o < t and p_over where o >= t.
template <typename T>
[[nodiscard]] LossResult<T> asymmetric_sse(const BasicTensor<T>& output, const BasicTensor<T>& target, double p_under,
                                           double p_over);

/// mean (o - t)^2 over all elements.
template <typename T>
[[nodiscard]] LossResult<T> mse_loss(const BasicTensor<T>& output, const BasicTensor<T>& target);

}  // namespace ccid::nn

#pragma once

#include <cstdint>
#include <vector>

#include "ccid/nn/tensor.hpp"

namespace ccid::nn {

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    int batch_size = 16;
    int epochs = 10;
    std::uint64_t seed = 0;
    double p_under = 1.0;
    double p_over = 4.0;

    /// Throws InvalidArgument on non-positive sizes or p_over < p_under.
    void validate() const;
};

/// First and second moment estimates, laid out like the parameters.
struct AdamState {
    std::int64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// One Adam update (beta1 0.9, beta2 0.999, eps 1e-8, bias corrected).
/// Weight decay is decoupled: params are scaled by (1 - lr * wd) first.
/// An empty state is initialised to zeros on the first call.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config);

}  // namespace ccid::nn

#include "ccid/nn/optim.hpp"

#include <cmath>

namespace ccid::nn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (!(weight_decay >= 0.0)) throw InvalidArgument("weight decay must be non-negative");
    if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
    if (epochs < 0) throw InvalidArgument("epochs must be non-negative");
    if (!(p_under > 0.0)) throw InvalidArgument("p_under must be positive");
    if (!(p_over >= p_under)) throw InvalidArgument("p_over must be at least p_under");
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config) {
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;

    auto& entries = params.entries();
    const auto& gentries = grads.entries();
    if (entries.size() != gentries.size()) throw InvalidArgument("adam_step: gradient layout differs from params");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].name != gentries[i].name || !entries[i].tensor.same_shape(gentries[i].tensor)) {
            throw InvalidArgument("adam_step: gradient '" + gentries[i].name + "' does not match params");
        }
    }
    if (state.m.empty()) {
        for (const auto& e : entries) {
            state.m.emplace_back(e.tensor.size(), 0.0);
            state.v.emplace_back(e.tensor.size(), 0.0);
        }
    } else if (state.m.size() != entries.size()) {
        throw InvalidArgument("adam_step: optimizer state belongs to a different model");
    }

    ++state.step;
    const double lr = config.learning_rate;
    const double decay = 1.0 - lr * config.weight_decay;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& p = entries[i].tensor.values();
        const auto& g = gentries[i].tensor.values();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j];
            m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
            v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
            const double update = lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
            p[j] = static_cast<float>(static_cast<double>(p[j]) * decay - update);
        }
    }
}

}  // namespace ccid::nn

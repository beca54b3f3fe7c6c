#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "secnn/tensor.hpp"

namespace secnn {

// Mean categorical cross-entropy: -(1/N) sum_n log p_n[true class].
// Probabilities are clamped below at 1e-12 before the log.
template <typename T>
double cce_loss(const Tensor<T>& probabilities, const Tensor<T>& one_hot) {
    require_rank(probabilities, 2, "cce probabilities");
    require_shape(one_hot, probabilities.shape(), "cce labels");
    const std::size_t rows = probabilities.extent(0), classes = probabilities.extent(1);
    if (rows == 0) throw argument_error("cce_loss: empty batch");
    double total = 0.0;
    for (std::size_t n = 0; n < rows; ++n) {
        for (std::size_t k = 0; k < classes; ++k) {
            const double y = static_cast<double>(one_hot(n, k));
            if (y != 0.0) {
                const double p = std::max(static_cast<double>(probabilities(n, k)), 1e-12);
                total -= y * std::log(p);
            }
        }
    }
    return total / static_cast<double>(rows);
}

// Element-wise clamp to [-clip_value, +clip_value].
template <typename T>
Tensor<T> clip_elementwise(const Tensor<T>& gradient, T clip_value) {
    if (!(clip_value > T{0})) throw argument_error("clip_elementwise: clip_value must be > 0");
    Tensor<T> out(gradient.shape());
    for (std::size_t i = 0; i < gradient.size(); ++i) {
        out[i] = std::clamp(gradient[i], -clip_value, clip_value);
    }
    return out;
}

template <typename T>
void clip_elementwise_inplace(Tensor<T>& gradient, T clip_value) {
    if (!(clip_value > T{0})) throw argument_error("clip_elementwise: clip_value must be > 0");
    for (std::size_t i = 0; i < gradient.size(); ++i) {
        gradient[i] = std::clamp(gradient[i], -clip_value, clip_value);
    }
}

// Adam with bias correction. Gradients are expected to be clipped already;
// the clip value is carried here so the training loop has one place to
// read it from.
template <typename T>
struct AdamState {
    T learning_rate = static_cast<T>(1e-4);
    T beta1 = static_cast<T>(0.9);
    T beta2 = static_cast<T>(0.999);
    T epsilon = static_cast<T>(1e-7);
    T clip_value = static_cast<T>(1.0);
    std::uint64_t step_count = 0;
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;

    AdamState() = default;
    AdamState(T lr, T clip) : learning_rate(lr), clip_value(clip) {}
};

template <typename T>
void adam_step(AdamState<T>& state, const std::vector<Tensor<T>*>& params,
               const std::vector<const Tensor<T>*>& gradients) {
    if (params.size() != gradients.size()) {
        throw argument_error("adam_step: parameter and gradient counts differ");
    }
    if (state.m.empty()) {
        for (const Tensor<T>* p : params) {
            state.m.emplace_back(p->shape());
            state.v.emplace_back(p->shape());
        }
    }
    if (state.m.size() != params.size()) {
        throw argument_error("adam_step: state tracks a different parameter set");
    }
    state.step_count += 1;
    const T bc1 = static_cast<T>(1.0 - std::pow(static_cast<double>(state.beta1),
                                                static_cast<double>(state.step_count)));
    const T bc2 = static_cast<T>(1.0 - std::pow(static_cast<double>(state.beta2),
                                                static_cast<double>(state.step_count)));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<T>& p = *params[pi];
        const Tensor<T>& g = *gradients[pi];
        if (!p.same_shape(g) || !p.same_shape(state.m[pi])) {
            throw shape_error("adam_step: gradient shape " + shape_to_string(g.shape()) +
                              " does not match parameter " + shape_to_string(p.shape()));
        }
        Tensor<T>& m = state.m[pi];
        Tensor<T>& v = state.v[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (T{1} - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (T{1} - state.beta2) * g[i] * g[i];
            const T m_hat = m[i] / bc1;
            const T v_hat = v[i] / bc2;
            p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

}  // namespace secnn

#pragma once

#include <cmath>
#include <utility>

#include "secnn/kernels.hpp"
#include "secnn/rng.hpp"
#include "secnn/tensor.hpp"

// Squeeze-and-excitation channel attention. A descriptor is pooled per
// sample and channel, gated through a two-layer bottleneck (ReLU then
// sigmoid), and multiplied back onto the feature map. The gate values are
// sigmoid outputs, so the block can only attenuate a channel, never
// amplify it.

namespace secnn {

template <typename T>
struct SEBlockParams {
    std::size_t channels = 0;
    std::size_t ratio = 1;
    Tensor<T> reduce_w;  // [C, C/r]
    Tensor<T> reduce_b;  // [C/r]
    Tensor<T> expand_w;  // [C/r, C]
    Tensor<T> expand_b;  // [C]

    SEBlockParams(std::size_t channels_, std::size_t ratio_)
        : channels(channels_), ratio(ratio_) {
        if (ratio == 0 || channels == 0 || channels % ratio != 0) {
            throw config_error("se block: channel count " + std::to_string(channels) +
                               " is not divisible by reduction ratio " + std::to_string(ratio));
        }
        const std::size_t hidden = channels / ratio;
        reduce_w = Tensor<T>({channels, hidden});
        reduce_b = Tensor<T>({hidden});
        expand_w = Tensor<T>({hidden, channels});
        expand_b = Tensor<T>({channels});
    }

    std::size_t hidden_width() const { return channels / ratio; }

    // He-normal (truncated at +-2 stddev), biases zero; both layers feed
    // their fan-in to the draw.
    static SEBlockParams he_init(std::size_t channels, std::size_t ratio, Rng& rng) {
        SEBlockParams p(channels, ratio);
        const T std1 = static_cast<T>(std::sqrt(2.0 / static_cast<double>(channels)));
        const T std2 = static_cast<T>(std::sqrt(2.0 / static_cast<double>(p.hidden_width())));
        for (auto& w : p.reduce_w.values()) w = static_cast<T>(rng.truncated_normal(std1));
        for (auto& w : p.expand_w.values()) w = static_cast<T>(rng.truncated_normal(std2));
        return p;
    }
};

// Global average pooling: one descriptor value per sample and channel.
template <typename T>
Tensor<T> squeeze(const Tensor<T>& input) {
    require_rank(input, 4, "squeeze input");
    const std::size_t n_count = input.extent(0), height = input.extent(1),
                      width = input.extent(2), channels = input.extent(3);
    if (height * width == 0) throw argument_error("squeeze: empty spatial extent");
    Tensor<T> z({n_count, channels});
    const T* x = input.data();
    T* zd = z.data();
    const T inv = T{1} / static_cast<T>(height * width);
    for (std::size_t n = 0; n < n_count; ++n) {
        T* zrow = zd + n * channels;
        const T* img = x + n * height * width * channels;
        for (std::size_t p = 0; p < height * width; ++p) {
            for (std::size_t c = 0; c < channels; ++c) zrow[c] += img[p * channels + c];
        }
        for (std::size_t c = 0; c < channels; ++c) zrow[c] *= inv;
    }
    return z;
}

// Bottleneck gate: sigmoid(expand(relu(reduce(z)))). Accepts one descriptor
// [C] or a batch of them [N,C] and returns gates of the same shape, every
// element in (0,1).
template <typename T>
Tensor<T> excite(const Tensor<T>& z, const SEBlockParams<T>& params) {
    const bool single = z.rank() == 1;
    Tensor<T> zb = single ? z.reshaped({1, z.size()}) : z;
    require_rank(zb, 2, "excite descriptor");
    if (zb.extent(1) != params.channels) {
        throw shape_error("excite: descriptor length " + std::to_string(zb.extent(1)) +
                          " does not match channel count " + std::to_string(params.channels));
    }
    auto [a1, c1] = dense(zb, params.reduce_w, params.reduce_b);
    auto [hidden, cr] = relu(a1);
    auto [a2, c2] = dense(hidden, params.expand_w, params.expand_b);
    Tensor<T> s = sigmoid(a2);
    return single ? s.reshaped({params.channels}) : s;
}

// v_c(i,j) = s_c * u_c(i,j), with per-sample gate rows.
template <typename T>
Tensor<T> scale(const Tensor<T>& input, const Tensor<T>& gates) {
    require_rank(input, 4, "scale input");
    require_shape(gates, {input.extent(0), input.extent(3)}, "scale gates");
    const std::size_t channels = input.extent(3);
    const std::size_t plane = input.extent(1) * input.extent(2);
    Tensor<T> out(input.shape());
    const T* x = input.data();
    const T* s = gates.data();
    T* y = out.data();
    for (std::size_t n = 0; n < input.extent(0); ++n) {
        const T* srow = s + n * channels;
        const std::size_t base = n * plane * channels;
        for (std::size_t p = 0; p < plane; ++p) {
            for (std::size_t c = 0; c < channels; ++c) {
                y[base + p * channels + c] = srow[c] * x[base + p * channels + c];
            }
        }
    }
    return out;
}

template <typename T>
struct SECache {
    Tensor<T> input;
    Tensor<T> z;       // [N,C] descriptors
    Tensor<T> hidden;  // [N,C/r] after ReLU
    Tensor<T> gates;   // [N,C]
    bool consumed = false;

    bool valid() const { return !input.empty(); }
};

template <typename T>
std::pair<Tensor<T>, SECache<T>> se_forward(const Tensor<T>& input,
                                            const SEBlockParams<T>& params) {
    require_rank(input, 4, "se_forward input");
    Tensor<T> z = squeeze(input);
    auto [a1, c1] = dense(z, params.reduce_w, params.reduce_b);
    auto [hidden, cr] = relu(a1);
    auto [a2, c2] = dense(hidden, params.expand_w, params.expand_b);
    Tensor<T> gates = sigmoid(a2);
    Tensor<T> out = scale(input, gates);
    return {std::move(out), SECache<T>{input, std::move(z), std::move(hidden), std::move(gates)}};
}

template <typename T>
struct SEGrads {
    Tensor<T> input;
    Tensor<T> reduce_w;
    Tensor<T> reduce_b;
    Tensor<T> expand_w;
    Tensor<T> expand_b;
};

// Reverse-mode pass. The input gradient has two contributions: the direct
// s_c * g path through the scaling, and the path through the descriptor z
// (which spreads 1/(H*W) of the pooled gradient over every position).
template <typename T>
SEGrads<T> se_backward(SECache<T>& cache, const SEBlockParams<T>& params,
                       const Tensor<T>& upstream) {
    if (!cache.valid()) throw cache_error("se_backward: no forward cache");
    if (cache.consumed) throw cache_error("se_backward: cache already consumed");
    cache.consumed = true;
    require_shape(upstream, cache.input.shape(), "se_backward upstream");

    const std::size_t n_count = cache.input.extent(0), channels = cache.input.extent(3);
    const std::size_t plane = cache.input.extent(1) * cache.input.extent(2);
    const T* x = cache.input.data();
    const T* g = upstream.data();
    const T* s = cache.gates.data();

    // Direct path and the gate gradient ds[n,c] = sum_{i,j} g * u.
    Tensor<T> dinput(cache.input.shape());
    Tensor<T> dgates({n_count, channels});
    T* dx = dinput.data();
    T* ds = dgates.data();
    for (std::size_t n = 0; n < n_count; ++n) {
        const std::size_t base = n * plane * channels;
        for (std::size_t p = 0; p < plane; ++p) {
            for (std::size_t c = 0; c < channels; ++c) {
                const std::size_t ix = base + p * channels + c;
                dx[ix] = s[n * channels + c] * g[ix];
                ds[n * channels + c] += g[ix] * x[ix];
            }
        }
    }

    // Sigmoid: da2 = ds * s * (1 - s).
    Tensor<T> da2({n_count, channels});
    for (std::size_t i = 0; i < da2.size(); ++i) da2[i] = ds[i] * s[i] * (T{1} - s[i]);

    DenseCache<T> expand_cache{cache.hidden};
    DenseGrads<T> eg = dense_backward(expand_cache, params.expand_w, da2);

    // ReLU mask from the cached post-activation values.
    Tensor<T>& dhidden = eg.input;
    for (std::size_t i = 0; i < dhidden.size(); ++i) {
        if (!(cache.hidden[i] > T{0})) dhidden[i] = T{0};
    }

    DenseCache<T> reduce_cache{cache.z};
    DenseGrads<T> rg = dense_backward(reduce_cache, params.reduce_w, dhidden);

    // Descriptor path back into the input.
    const Tensor<T>& dz = rg.input;
    const T inv = T{1} / static_cast<T>(plane);
    for (std::size_t n = 0; n < n_count; ++n) {
        const std::size_t base = n * plane * channels;
        for (std::size_t p = 0; p < plane; ++p) {
            for (std::size_t c = 0; c < channels; ++c) {
                dx[base + p * channels + c] += dz[n * channels + c] * inv;
            }
        }
    }

    return SEGrads<T>{std::move(dinput), std::move(rg.weights), std::move(rg.bias),
                      std::move(eg.weights), std::move(eg.bias)};
}

}  // namespace secnn

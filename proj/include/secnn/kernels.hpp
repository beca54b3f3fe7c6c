#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <utility>
#include <vector>

#include "secnn/tensor.hpp"

// Raw numerical kernels. All of them are pure functions of their inputs;
// forward passes return whatever cache their backward pass needs. Reduction
// loops run in a fixed order so results are reproducible bit for bit.

namespace secnn {

namespace detail {

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void gemm_nn(std::size_t m_count, std::size_t k_count, std::size_t n_count,
             const T* a, const T* b, T* c) {
    for (std::size_t m = 0; m < m_count; ++m) {
        T* crow = c + m * n_count;
        const T* arow = a + m * k_count;
        for (std::size_t k = 0; k < k_count; ++k) {
            const T av = arow[k];
            const T* brow = b + k * n_count;
            for (std::size_t n = 0; n < n_count; ++n) crow[n] += av * brow[n];
        }
    }
}

// C[K,N] += A[M,K]^T * B[M,N]
template <typename T>
void gemm_tn(std::size_t m_count, std::size_t k_count, std::size_t n_count,
             const T* a, const T* b, T* c) {
    for (std::size_t m = 0; m < m_count; ++m) {
        const T* arow = a + m * k_count;
        const T* brow = b + m * n_count;
        for (std::size_t k = 0; k < k_count; ++k) {
            const T av = arow[k];
            T* crow = c + k * n_count;
            for (std::size_t n = 0; n < n_count; ++n) crow[n] += av * brow[n];
        }
    }
}

// C[M,K] += A[M,N] * B[K,N]^T
template <typename T>
void gemm_nt(std::size_t m_count, std::size_t k_count, std::size_t n_count,
             const T* a, const T* b, T* c) {
    for (std::size_t m = 0; m < m_count; ++m) {
        const T* arow = a + m * n_count;
        T* crow = c + m * k_count;
        for (std::size_t k = 0; k < k_count; ++k) {
            const T* brow = b + k * n_count;
            T acc{0};
            for (std::size_t n = 0; n < n_count; ++n) acc += arow[n] * brow[n];
            crow[k] += acc;
        }
    }
}

// Unrolls 3x3 neighborhoods of a zero-padded NHWC map into rows of
// [N*H*W, 9*C]; column index is (di*3+dj)*C + ci, which matches the
// row-major layout of a [3,3,Cin,Cout] kernel tensor.
template <typename T>
void im2col_3x3(const Tensor<T>& input, std::vector<T>& cols) {
    const std::size_t n_count = input.extent(0), height = input.extent(1),
                      width = input.extent(2), channels = input.extent(3);
    const std::size_t k_count = 9 * channels;
    cols.assign(n_count * height * width * k_count, T{0});
    const T* src = input.data();
    T* dst = cols.data();
    for (std::size_t n = 0; n < n_count; ++n) {
        const T* img = src + n * height * width * channels;
        for (std::size_t i = 0; i < height; ++i) {
            for (std::size_t j = 0; j < width; ++j) {
                T* row = dst + ((n * height + i) * width + j) * k_count;
                for (std::size_t di = 0; di < 3; ++di) {
                    const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + di) - 1;
                    if (si < 0 || si >= static_cast<std::ptrdiff_t>(height)) continue;
                    for (std::size_t dj = 0; dj < 3; ++dj) {
                        const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j + dj) - 1;
                        if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(width)) continue;
                        std::memcpy(row + (di * 3 + dj) * channels,
                                    img + (static_cast<std::size_t>(si) * width +
                                           static_cast<std::size_t>(sj)) * channels,
                                    channels * sizeof(T));
                    }
                }
            }
        }
    }
}

// Scatter-add of column gradients back onto the padded input positions.
template <typename T>
void col2im_3x3(const std::vector<T>& cols, Tensor<T>& dinput) {
    const std::size_t n_count = dinput.extent(0), height = dinput.extent(1),
                      width = dinput.extent(2), channels = dinput.extent(3);
    const std::size_t k_count = 9 * channels;
    T* dst = dinput.data();
    const T* src = cols.data();
    for (std::size_t n = 0; n < n_count; ++n) {
        T* img = dst + n * height * width * channels;
        for (std::size_t i = 0; i < height; ++i) {
            for (std::size_t j = 0; j < width; ++j) {
                const T* row = src + ((n * height + i) * width + j) * k_count;
                for (std::size_t di = 0; di < 3; ++di) {
                    const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + di) - 1;
                    if (si < 0 || si >= static_cast<std::ptrdiff_t>(height)) continue;
                    for (std::size_t dj = 0; dj < 3; ++dj) {
                        const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j + dj) - 1;
                        if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(width)) continue;
                        T* px = img + (static_cast<std::size_t>(si) * width +
                                       static_cast<std::size_t>(sj)) * channels;
                        const T* col = row + (di * 3 + dj) * channels;
                        for (std::size_t c = 0; c < channels; ++c) px[c] += col[c];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution, 3x3 kernels, stride 1, "same" zero padding.

template <typename T>
struct Conv2dCache {
    Tensor<T> input;
};

template <typename T>
std::pair<Tensor<T>, Conv2dCache<T>> conv2d(const Tensor<T>& input, const Tensor<T>& kernels,
                                            const Tensor<T>& bias) {
    require_rank(input, 4, "conv2d input");
    require_rank(kernels, 4, "conv2d kernels");
    if (kernels.extent(0) != 3 || kernels.extent(1) != 3) {
        throw shape_error("conv2d: only 3x3 kernels are supported, got " +
                          shape_to_string(kernels.shape()));
    }
    const std::size_t c_in = input.extent(3);
    if (kernels.extent(2) != c_in) {
        throw shape_error("conv2d: input has " + std::to_string(c_in) +
                          " channels but kernels expect " + std::to_string(kernels.extent(2)));
    }
    const std::size_t c_out = kernels.extent(3);
    require_shape(bias, {c_out}, "conv2d bias");

    const std::size_t rows = input.extent(0) * input.extent(1) * input.extent(2);
    std::vector<T> cols;
    detail::im2col_3x3(input, cols);

    Tensor<T> out({input.extent(0), input.extent(1), input.extent(2), c_out});
    T* o = out.data();
    for (std::size_t m = 0; m < rows; ++m) {
        std::memcpy(o + m * c_out, bias.data(), c_out * sizeof(T));
    }
    detail::gemm_nn(rows, 9 * c_in, c_out, cols.data(), kernels.data(), o);
    return {std::move(out), Conv2dCache<T>{input}};
}

template <typename T>
struct Conv2dGrads {
    Tensor<T> input;
    Tensor<T> kernels;
    Tensor<T> bias;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const Conv2dCache<T>& cache, const Tensor<T>& kernels,
                               const Tensor<T>& upstream) {
    const Tensor<T>& x = cache.input;
    const std::size_t rows = x.extent(0) * x.extent(1) * x.extent(2);
    const std::size_t c_in = x.extent(3), c_out = kernels.extent(3);
    require_shape(upstream, {x.extent(0), x.extent(1), x.extent(2), c_out}, "conv2d upstream");

    Conv2dGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(kernels.shape()), Tensor<T>({c_out})};

    const T* dy = upstream.data();
    T* dbias = g.bias.data();
    for (std::size_t m = 0; m < rows; ++m) {
        const T* row = dy + m * c_out;
        for (std::size_t co = 0; co < c_out; ++co) dbias[co] += row[co];
    }

    std::vector<T> cols;
    detail::im2col_3x3(x, cols);
    detail::gemm_tn(rows, 9 * c_in, c_out, cols.data(), dy, g.kernels.data());

    std::vector<T> dcols(rows * 9 * c_in, T{0});
    detail::gemm_nt(rows, 9 * c_in, c_out, dy, kernels.data(), dcols.data());
    detail::col2im_3x3(dcols, g.input);
    return g;
}

// ---------------------------------------------------------------------------
// 2x2 max pooling over disjoint windows; argmax positions are kept so the
// backward pass can route gradients.

struct MaxPoolCache {
    std::vector<std::size_t> input_shape;
    std::vector<std::uint32_t> argmax;  // flat input index per output element
};

template <typename T>
std::pair<Tensor<T>, MaxPoolCache> maxpool2x2(const Tensor<T>& input) {
    require_rank(input, 4, "maxpool2x2 input");
    const std::size_t n_count = input.extent(0), height = input.extent(1),
                      width = input.extent(2), channels = input.extent(3);
    if (height % 2 != 0 || width % 2 != 0) {
        throw shape_error("maxpool2x2: spatial extents must be even, got " +
                          shape_to_string(input.shape()));
    }
    Tensor<T> out({n_count, height / 2, width / 2, channels});
    MaxPoolCache cache{input.shape(), std::vector<std::uint32_t>(out.size())};
    const T* src = input.data();
    T* dst = out.data();
    std::size_t o = 0;
    for (std::size_t n = 0; n < n_count; ++n) {
        for (std::size_t i = 0; i < height; i += 2) {
            for (std::size_t j = 0; j < width; j += 2) {
                for (std::size_t c = 0; c < channels; ++c, ++o) {
                    std::size_t best = ((n * height + i) * width + j) * channels + c;
                    T best_v = src[best];
                    const std::size_t cand[3] = {
                        ((n * height + i) * width + j + 1) * channels + c,
                        ((n * height + i + 1) * width + j) * channels + c,
                        ((n * height + i + 1) * width + j + 1) * channels + c};
                    for (std::size_t k = 0; k < 3; ++k) {
                        if (src[cand[k]] > best_v) {
                            best_v = src[cand[k]];
                            best = cand[k];
                        }
                    }
                    dst[o] = best_v;
                    cache.argmax[o] = static_cast<std::uint32_t>(best);
                }
            }
        }
    }
    return {std::move(out), std::move(cache)};
}

template <typename T>
Tensor<T> maxpool2x2_backward(const MaxPoolCache& cache, const Tensor<T>& upstream) {
    Tensor<T> dinput(cache.input_shape);
    if (upstream.size() != cache.argmax.size()) {
        throw shape_error("maxpool2x2 backward: upstream shape " +
                          shape_to_string(upstream.shape()) + " does not match cache");
    }
    T* dst = dinput.data();
    const T* dy = upstream.data();
    for (std::size_t o = 0; o < cache.argmax.size(); ++o) dst[cache.argmax[o]] += dy[o];
    return dinput;
}

// ---------------------------------------------------------------------------
// Fully connected layer: out = input * weights + bias.

template <typename T>
struct DenseCache {
    Tensor<T> input;
};

template <typename T>
std::pair<Tensor<T>, DenseCache<T>> dense(const Tensor<T>& input, const Tensor<T>& weights,
                                          const Tensor<T>& bias) {
    require_rank(input, 2, "dense input");
    require_rank(weights, 2, "dense weights");
    const std::size_t rows = input.extent(0), d_in = input.extent(1),
                      d_out = weights.extent(1);
    if (weights.extent(0) != d_in) {
        throw shape_error("dense: input width " + std::to_string(d_in) +
                          " does not match weight rows " + std::to_string(weights.extent(0)));
    }
    require_shape(bias, {d_out}, "dense bias");
    Tensor<T> out({rows, d_out});
    T* o = out.data();
    for (std::size_t m = 0; m < rows; ++m) std::memcpy(o + m * d_out, bias.data(), d_out * sizeof(T));
    detail::gemm_nn(rows, d_in, d_out, input.data(), weights.data(), o);
    return {std::move(out), DenseCache<T>{input}};
}

template <typename T>
struct DenseGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const DenseCache<T>& cache, const Tensor<T>& weights,
                             const Tensor<T>& upstream) {
    const Tensor<T>& x = cache.input;
    const std::size_t rows = x.extent(0), d_in = x.extent(1), d_out = weights.extent(1);
    require_shape(upstream, {rows, d_out}, "dense upstream");
    DenseGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(weights.shape()), Tensor<T>({d_out})};
    const T* dy = upstream.data();
    T* dbias = g.bias.data();
    for (std::size_t m = 0; m < rows; ++m) {
        const T* row = dy + m * d_out;
        for (std::size_t k = 0; k < d_out; ++k) dbias[k] += row[k];
    }
    detail::gemm_tn(rows, d_in, d_out, x.data(), dy, g.weights.data());
    detail::gemm_nt(rows, d_in, d_out, dy, weights.data(), g.input.data());
    return g;
}

// ---------------------------------------------------------------------------
// Activations.

struct ReluCache {
    std::vector<std::uint8_t> positive;
};

template <typename T>
std::pair<Tensor<T>, ReluCache> relu(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    ReluCache cache{std::vector<std::uint8_t>(input.size())};
    const T* x = input.data();
    T* y = out.data();
    for (std::size_t i = 0; i < input.size(); ++i) {
        const bool pos = x[i] > T{0};
        y[i] = pos ? x[i] : T{0};
        cache.positive[i] = pos ? 1 : 0;
    }
    return {std::move(out), std::move(cache)};
}

template <typename T>
Tensor<T> relu_backward(const ReluCache& cache, const Tensor<T>& upstream) {
    if (upstream.size() != cache.positive.size()) {
        throw shape_error("relu backward: upstream size does not match cache");
    }
    Tensor<T> dinput(upstream.shape());
    const T* dy = upstream.data();
    T* dx = dinput.data();
    for (std::size_t i = 0; i < cache.positive.size(); ++i) dx[i] = cache.positive[i] ? dy[i] : T{0};
    return dinput;
}

template <typename T>
T sigmoid_scalar(T x) {
    // Split on sign so exp never overflows.
    if (x >= T{0}) {
        return T{1} / (T{1} + std::exp(-x));
    }
    const T e = std::exp(x);
    return e / (T{1} + e);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    const T* x = input.data();
    T* y = out.data();
    for (std::size_t i = 0; i < input.size(); ++i) y[i] = sigmoid_scalar(x[i]);
    return out;
}

// Row softmax with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& input) {
    require_rank(input, 2, "softmax input");
    const std::size_t rows = input.extent(0), k_count = input.extent(1);
    if (k_count < 2) {
        throw argument_error("softmax: need at least 2 classes, got " + std::to_string(k_count));
    }
    Tensor<T> out(input.shape());
    const T* x = input.data();
    T* y = out.data();
    for (std::size_t m = 0; m < rows; ++m) {
        const T* row = x + m * k_count;
        T* orow = y + m * k_count;
        T mx = row[0];
        for (std::size_t k = 1; k < k_count; ++k) mx = std::max(mx, row[k]);
        T sum{0};
        for (std::size_t k = 0; k < k_count; ++k) {
            orow[k] = std::exp(row[k] - mx);
            sum += orow[k];
        }
        for (std::size_t k = 0; k < k_count; ++k) orow[k] /= sum;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Batch normalization over N*H*W per channel.

enum class Mode { train, infer };

template <typename T>
struct BatchNormParams {
    Tensor<T> gamma;
    Tensor<T> beta;
    Tensor<T> moving_mean;
    Tensor<T> moving_var;
    T momentum = T{0.99};
    T epsilon = T{1e-3};

    explicit BatchNormParams(std::size_t channels)
        : gamma(Tensor<T>::full({channels}, T{1})),
          beta(Tensor<T>({channels})),
          moving_mean(Tensor<T>({channels})),
          moving_var(Tensor<T>::full({channels}, T{1})) {}

    std::size_t channels() const { return gamma.size(); }
};

template <typename T>
struct BatchNormCache {
    Tensor<T> normalized;       // x-hat, before the affine step
    std::vector<T> inv_std;     // per channel
};

template <typename T>
std::pair<Tensor<T>, BatchNormCache<T>> batchnorm(const Tensor<T>& input,
                                                  BatchNormParams<T>& params, Mode mode) {
    require_rank(input, 4, "batchnorm input");
    const std::size_t n_count = input.extent(0), height = input.extent(1),
                      width = input.extent(2), channels = input.extent(3);
    if (n_count == 0) throw argument_error("batchnorm: empty batch");
    if (channels != params.channels()) {
        throw shape_error("batchnorm: input has " + std::to_string(channels) +
                          " channels but params carry " + std::to_string(params.channels()));
    }
    const std::size_t per_channel = n_count * height * width;
    const std::size_t total = input.size();
    const T* x = input.data();

    Tensor<T> out(input.shape());
    BatchNormCache<T> cache;

    if (mode == Mode::infer) {
        std::vector<T> scale(channels), shift(channels);
        for (std::size_t c = 0; c < channels; ++c) {
            const T inv = T{1} / std::sqrt(params.moving_var[c] + params.epsilon);
            scale[c] = params.gamma[c] * inv;
            shift[c] = params.beta[c] - params.moving_mean[c] * scale[c];
        }
        T* y = out.data();
        for (std::size_t i = 0; i < total; i += channels) {
            for (std::size_t c = 0; c < channels; ++c) y[i + c] = x[i + c] * scale[c] + shift[c];
        }
        return {std::move(out), std::move(cache)};
    }

    std::vector<T> mean(channels, T{0}), var(channels, T{0});
    for (std::size_t i = 0; i < total; i += channels) {
        for (std::size_t c = 0; c < channels; ++c) mean[c] += x[i + c];
    }
    for (std::size_t c = 0; c < channels; ++c) mean[c] /= static_cast<T>(per_channel);
    for (std::size_t i = 0; i < total; i += channels) {
        for (std::size_t c = 0; c < channels; ++c) {
            const T d = x[i + c] - mean[c];
            var[c] += d * d;
        }
    }
    for (std::size_t c = 0; c < channels; ++c) var[c] /= static_cast<T>(per_channel);

    cache.normalized = Tensor<T>(input.shape());
    cache.inv_std.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        cache.inv_std[c] = T{1} / std::sqrt(var[c] + params.epsilon);
    }
    T* xh = cache.normalized.data();
    T* y = out.data();
    for (std::size_t i = 0; i < total; i += channels) {
        for (std::size_t c = 0; c < channels; ++c) {
            const T h = (x[i + c] - mean[c]) * cache.inv_std[c];
            xh[i + c] = h;
            y[i + c] = params.gamma[c] * h + params.beta[c];
        }
    }
    for (std::size_t c = 0; c < channels; ++c) {
        params.moving_mean[c] = params.momentum * params.moving_mean[c] +
                                (T{1} - params.momentum) * mean[c];
        params.moving_var[c] = params.momentum * params.moving_var[c] +
                               (T{1} - params.momentum) * var[c];
    }
    return {std::move(out), std::move(cache)};
}

template <typename T>
struct BatchNormGrads {
    Tensor<T> input;
    Tensor<T> gamma;
    Tensor<T> beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache,
                                     const BatchNormParams<T>& params,
                                     const Tensor<T>& upstream) {
    if (cache.normalized.empty()) {
        throw cache_error("batchnorm backward: no train-mode forward cache");
    }
    require_shape(upstream, cache.normalized.shape(), "batchnorm upstream");
    const std::size_t channels = params.channels();
    const std::size_t total = upstream.size();
    const std::size_t per_channel = total / channels;

    BatchNormGrads<T> g{Tensor<T>(upstream.shape()), Tensor<T>({channels}), Tensor<T>({channels})};
    const T* dy = upstream.data();
    const T* xh = cache.normalized.data();
    T* dgamma = g.gamma.data();
    T* dbeta = g.beta.data();
    for (std::size_t i = 0; i < total; i += channels) {
        for (std::size_t c = 0; c < channels; ++c) {
            dgamma[c] += dy[i + c] * xh[i + c];
            dbeta[c] += dy[i + c];
        }
    }
    // dx = gamma * inv_std * (dy - dbeta/M - xhat * dgamma/M)
    const T inv_m = T{1} / static_cast<T>(per_channel);
    std::vector<T> k1(channels), k2(channels), k3(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        const T gi = params.gamma[c] * cache.inv_std[c];
        k1[c] = gi;
        k2[c] = gi * dbeta[c] * inv_m;
        k3[c] = gi * dgamma[c] * inv_m;
    }
    T* dx = g.input.data();
    for (std::size_t i = 0; i < total; i += channels) {
        for (std::size_t c = 0; c < channels; ++c) {
            dx[i + c] = k1[c] * dy[i + c] - k2[c] - k3[c] * xh[i + c];
        }
    }
    return g;
}

}  // namespace secnn

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "secnn/kernels.hpp"
#include "secnn/rng.hpp"
#include "secnn/se_block.hpp"

namespace secnn {

// One registered parameter tensor. Gradients live next to their values;
// moving batch-norm statistics are registered but not trainable.
template <typename T>
struct ParamSlot {
    std::string name;
    Tensor<T>* value;
    Tensor<T>* grad;
    bool trainable;
};

template <typename T>
class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
    // Consumes the cache from the preceding train-mode forward and
    // accumulates parameter gradients in place.
    virtual Tensor<T> backward(const Tensor<T>& upstream) = 0;
    virtual void collect_params(std::vector<ParamSlot<T>>& out) {}
    virtual std::size_t param_count() const { return 0; }
    // Per-sample shape chaining (no batch axis).
    virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;
    virtual std::string kind() const = 0;

    const std::string& name() const { return name_; }

protected:
    [[noreturn]] void missing_cache() const {
        throw cache_error(name_ + ": backward without a preceding train-mode forward");
    }

private:
    std::string name_;
};

template <typename T>
class Conv2dLayer final : public Layer<T> {
public:
    Conv2dLayer(std::string name, std::size_t c_in, std::size_t c_out, Rng& rng)
        : Layer<T>(std::move(name)),
          kernels_({3, 3, c_in, c_out}),
          bias_({c_out}),
          kernels_grad_({3, 3, c_in, c_out}),
          bias_grad_({c_out}) {
        const T stddev = static_cast<T>(std::sqrt(2.0 / (9.0 * static_cast<double>(c_in))));
        for (auto& w : kernels_.values()) w = static_cast<T>(rng.truncated_normal(stddev));
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        auto [out, cache] = conv2d(x, kernels_, bias_);
        if (mode == Mode::train) cache_ = std::move(cache);
        return std::move(out);
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (!cache_) this->missing_cache();
        Conv2dGrads<T> g = conv2d_backward(*cache_, kernels_, upstream);
        cache_.reset();
        accumulate(kernels_grad_, g.kernels);
        accumulate(bias_grad_, g.bias);
        return std::move(g.input);
    }

    void collect_params(std::vector<ParamSlot<T>>& out) override {
        out.push_back({this->name() + ".kernels", &kernels_, &kernels_grad_, true});
        out.push_back({this->name() + ".bias", &bias_, &bias_grad_, true});
    }

    std::size_t param_count() const override { return kernels_.size() + bias_.size(); }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return {in[0], in[1], kernels_.extent(3)};
    }

    std::string kind() const override { return "conv2d"; }

private:
    static void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }

    Tensor<T> kernels_, bias_, kernels_grad_, bias_grad_;
    std::optional<Conv2dCache<T>> cache_;
};

template <typename T>
class ReluLayer final : public Layer<T> {
public:
    using Layer<T>::Layer;

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        auto [out, cache] = relu(x);
        if (mode == Mode::train) cache_ = std::move(cache);
        return std::move(out);
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (!cache_) this->missing_cache();
        Tensor<T> dx = relu_backward(*cache_, upstream);
        cache_.reset();
        return dx;
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return in;
    }

    std::string kind() const override { return "relu"; }

private:
    std::optional<ReluCache> cache_;
};

template <typename T>
class BatchNormLayer final : public Layer<T> {
public:
    BatchNormLayer(std::string name, std::size_t channels)
        : Layer<T>(std::move(name)),
          params_(channels),
          gamma_grad_({channels}),
          beta_grad_({channels}) {}

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        auto [out, cache] = batchnorm(x, params_, mode);
        if (mode == Mode::train) cache_ = std::move(cache);
        return std::move(out);
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (!cache_) this->missing_cache();
        BatchNormGrads<T> g = batchnorm_backward(*cache_, params_, upstream);
        cache_.reset();
        for (std::size_t i = 0; i < gamma_grad_.size(); ++i) {
            gamma_grad_[i] += g.gamma[i];
            beta_grad_[i] += g.beta[i];
        }
        return std::move(g.input);
    }

    void collect_params(std::vector<ParamSlot<T>>& out) override {
        out.push_back({this->name() + ".gamma", &params_.gamma, &gamma_grad_, true});
        out.push_back({this->name() + ".beta", &params_.beta, &beta_grad_, true});
        out.push_back({this->name() + ".moving_mean", &params_.moving_mean, nullptr, false});
        out.push_back({this->name() + ".moving_var", &params_.moving_var, nullptr, false});
    }

    std::size_t param_count() const override { return 4 * params_.channels(); }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return in;
    }

    std::string kind() const override { return "batchnorm"; }

    BatchNormParams<T>& params() { return params_; }

private:
    BatchNormParams<T> params_;
    Tensor<T> gamma_grad_, beta_grad_;
    std::optional<BatchNormCache<T>> cache_;
};

template <typename T>
class SELayer final : public Layer<T> {
public:
    SELayer(std::string name, std::size_t channels, std::size_t ratio, Rng& rng)
        : Layer<T>(std::move(name)),
          params_(SEBlockParams<T>::he_init(channels, ratio, rng)),
          reduce_w_grad_(params_.reduce_w.shape()),
          reduce_b_grad_(params_.reduce_b.shape()),
          expand_w_grad_(params_.expand_w.shape()),
          expand_b_grad_(params_.expand_b.shape()) {}

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        auto [out, cache] = se_forward(x, params_);
        if (mode == Mode::train) cache_ = std::move(cache);
        return std::move(out);
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (!cache_) this->missing_cache();
        SEGrads<T> g = se_backward(*cache_, params_, upstream);
        cache_.reset();
        accumulate(reduce_w_grad_, g.reduce_w);
        accumulate(reduce_b_grad_, g.reduce_b);
        accumulate(expand_w_grad_, g.expand_w);
        accumulate(expand_b_grad_, g.expand_b);
        return std::move(g.input);
    }

    void collect_params(std::vector<ParamSlot<T>>& out) override {
        out.push_back({this->name() + ".reduce_w", &params_.reduce_w, &reduce_w_grad_, true});
        out.push_back({this->name() + ".reduce_b", &params_.reduce_b, &reduce_b_grad_, true});
        out.push_back({this->name() + ".expand_w", &params_.expand_w, &expand_w_grad_, true});
        out.push_back({this->name() + ".expand_b", &params_.expand_b, &expand_b_grad_, true});
    }

    std::size_t param_count() const override {
        return params_.reduce_w.size() + params_.reduce_b.size() + params_.expand_w.size() +
               params_.expand_b.size();
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return in;
    }

    std::string kind() const override { return "se_block"; }

    SEBlockParams<T>& params() { return params_; }

private:
    static void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }

    SEBlockParams<T> params_;
    Tensor<T> reduce_w_grad_, reduce_b_grad_, expand_w_grad_, expand_b_grad_;
    std::optional<SECache<T>> cache_;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
public:
    using Layer<T>::Layer;

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        auto [out, cache] = maxpool2x2(x);
        if (mode == Mode::train) cache_ = std::move(cache);
        return std::move(out);
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (!cache_) this->missing_cache();
        Tensor<T> dx = maxpool2x2_backward<T>(*cache_, upstream);
        cache_.reset();
        return dx;
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return {in[0] / 2, in[1] / 2, in[2]};
    }

    std::string kind() const override { return "maxpool2x2"; }

private:
    std::optional<MaxPoolCache> cache_;
};

template <typename T>
class FlattenLayer final : public Layer<T> {
public:
    using Layer<T>::Layer;

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        if (mode == Mode::train) input_shape_ = x.shape();
        const std::size_t n = x.extent(0);
        return x.reshaped({n, x.size() / n});
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (input_shape_.empty()) this->missing_cache();
        Tensor<T> dx = upstream.reshaped(input_shape_);
        input_shape_.clear();
        return dx;
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        std::size_t total = 1;
        for (std::size_t e : in) total *= e;
        return {total};
    }

    std::string kind() const override { return "flatten"; }

private:
    std::vector<std::size_t> input_shape_;
};

template <typename T>
class DenseLayer final : public Layer<T> {
public:
    DenseLayer(std::string name, std::size_t d_in, std::size_t d_out, Rng& rng)
        : Layer<T>(std::move(name)),
          weights_({d_in, d_out}),
          bias_({d_out}),
          weights_grad_({d_in, d_out}),
          bias_grad_({d_out}) {
        const T stddev = static_cast<T>(std::sqrt(2.0 / static_cast<double>(d_in)));
        for (auto& w : weights_.values()) w = static_cast<T>(rng.truncated_normal(stddev));
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        auto [out, cache] = dense(x, weights_, bias_);
        if (mode == Mode::train) cache_ = std::move(cache);
        return std::move(out);
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (!cache_) this->missing_cache();
        DenseGrads<T> g = dense_backward(*cache_, weights_, upstream);
        cache_.reset();
        for (std::size_t i = 0; i < weights_grad_.size(); ++i) weights_grad_[i] += g.weights[i];
        for (std::size_t i = 0; i < bias_grad_.size(); ++i) bias_grad_[i] += g.bias[i];
        return std::move(g.input);
    }

    void collect_params(std::vector<ParamSlot<T>>& out) override {
        out.push_back({this->name() + ".weights", &weights_, &weights_grad_, true});
        out.push_back({this->name() + ".bias", &bias_, &bias_grad_, true});
    }

    std::size_t param_count() const override { return weights_.size() + bias_.size(); }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return {weights_.extent(1)};
    }

    std::string kind() const override { return "dense"; }

private:
    Tensor<T> weights_, bias_, weights_grad_, bias_grad_;
    std::optional<DenseCache<T>> cache_;
};

// The probability head. Its backward never runs: the model applies the
// (probabilities - labels)/N shortcut directly at the softmax/loss junction.
template <typename T>
class SoftmaxLayer final : public Layer<T> {
public:
    using Layer<T>::Layer;

    Tensor<T> forward(const Tensor<T>& x, Mode) override { return softmax(x); }

    Tensor<T> backward(const Tensor<T>&) override {
        throw cache_error("softmax backward is folded into the loss junction");
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return in;
    }

    std::string kind() const override { return "softmax"; }
};

}  // namespace secnn

#pragma once

#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "secnn/layers.hpp"

namespace secnn {

// Topology of the sequential network: per-stage conv widths, which stages
// carry an SE block, the bottleneck ratio, and the classifier head. Every
// stage is conv -> relu -> batchnorm -> [se] -> maxpool (relu and batchnorm
// swap when relu_before_norm is off).
struct ModelConfig {
    std::size_t input_size = 32;
    std::size_t input_channels = 3;
    std::vector<std::size_t> conv_widths = {8, 16, 32, 64, 128};
    std::set<std::size_t> se_stages = {1, 2, 3, 4};
    std::size_t reduction = 4;
    std::size_t dense_width = 64;
    std::size_t classes = 2;
    bool relu_before_norm = true;

    void validate() const {
        if (conv_widths.empty()) throw config_error("model config: conv_widths is empty");
        if (input_channels == 0) throw config_error("model config: input_channels must be >= 1");
        if (classes < 2) throw config_error("model config: classes must be >= 2");
        if (dense_width == 0) throw config_error("model config: dense_width must be >= 1");
        if (reduction == 0) throw config_error("model config: reduction must be >= 1");
        const std::size_t stages = conv_widths.size();
        std::size_t divisor = 1;
        for (std::size_t s = 0; s < stages; ++s) divisor *= 2;
        if (input_size == 0 || input_size % divisor != 0) {
            throw config_error("model config: input_size " + std::to_string(input_size) +
                               " is not divisible by 2^" + std::to_string(stages) +
                               " (one halving per stage)");
        }
        for (std::size_t s : se_stages) {
            if (s >= stages) {
                throw config_error("model config: se stage " + std::to_string(s) +
                                   " out of range for " + std::to_string(stages) + " stages");
            }
            if (conv_widths[s] % reduction != 0) {
                throw config_error("model config: stage " + std::to_string(s) + " width " +
                                   std::to_string(conv_widths[s]) +
                                   " is not divisible by reduction " + std::to_string(reduction));
            }
        }
    }

    // 224x224x3, five conv stages 32..512, SE (r=16) on the four deepest
    // stages, dense width 512, two-class head.
    static ModelConfig reference() {
        ModelConfig c;
        c.input_size = 224;
        c.input_channels = 3;
        c.conv_widths = {32, 64, 128, 256, 512};
        c.se_stages = {1, 2, 3, 4};
        c.reduction = 16;
        c.dense_width = 512;
        c.classes = 2;
        return c;
    }

    ModelConfig without_se() const {
        ModelConfig c = *this;
        c.se_stages.clear();
        return c;
    }
};

template <typename T>
struct LayerInfo {
    std::string name;
    std::string kind;
    std::vector<std::size_t> output_shape;  // per sample
    std::size_t param_count;
};

template <typename T>
class SequentialModel {
public:
    SequentialModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
        config_.validate();
        Rng rng(derive_seed(seed));
        const std::size_t stages = config_.conv_widths.size();
        std::size_t c_in = config_.input_channels;
        for (std::size_t s = 0; s < stages; ++s) {
            const std::size_t c_out = config_.conv_widths[s];
            const std::string tag = std::to_string(s);
            add(std::make_unique<Conv2dLayer<T>>("conv" + tag, c_in, c_out, rng));
            if (config_.relu_before_norm) {
                add(std::make_unique<ReluLayer<T>>("relu" + tag));
                add(std::make_unique<BatchNormLayer<T>>("bn" + tag, c_out));
            } else {
                add(std::make_unique<BatchNormLayer<T>>("bn" + tag, c_out));
                add(std::make_unique<ReluLayer<T>>("relu" + tag));
            }
            if (config_.se_stages.count(s)) {
                add(std::make_unique<SELayer<T>>("se" + tag, c_out, config_.reduction, rng));
            }
            add(std::make_unique<MaxPoolLayer<T>>("pool" + tag));
            c_in = c_out;
        }
        add(std::make_unique<FlattenLayer<T>>("flatten"));
        const std::size_t spatial = config_.input_size >> stages;
        const std::size_t flat = spatial * spatial * c_in;
        add(std::make_unique<DenseLayer<T>>("dense0", flat, config_.dense_width, rng));
        add(std::make_unique<ReluLayer<T>>("relu_dense"));
        add(std::make_unique<DenseLayer<T>>("dense1", config_.dense_width, config_.classes, rng));
        add(std::make_unique<SoftmaxLayer<T>>("softmax"));
        for (auto& layer : layers_) layer->collect_params(registry_);
    }

    const ModelConfig& config() const { return config_; }

    Tensor<T> forward(const Tensor<T>& batch, Mode mode) {
        require_rank(batch, 4, "model input");
        if (batch.extent(0) == 0) throw argument_error("model forward: empty batch");
        const std::vector<std::size_t> expected = {batch.extent(0), config_.input_size,
                                                   config_.input_size, config_.input_channels};
        require_shape(batch, expected, "model input");
        Tensor<T> x = batch;
        for (auto& layer : layers_) x = layer->forward(x, mode);
        if (mode == Mode::train) has_caches_ = true;
        return x;
    }

    // Gradient of the mean categorical cross-entropy over the batch with
    // respect to every trainable parameter. Returns the input gradient;
    // parameter gradients land in the registry slots.
    Tensor<T> backprop(const Tensor<T>& probabilities, const Tensor<T>& one_hot) {
        if (!has_caches_) {
            throw cache_error("backprop: call forward in train mode first");
        }
        require_shape(one_hot, probabilities.shape(), "backprop labels");
        const std::size_t n = probabilities.extent(0);
        zero_grad();
        Tensor<T> dy(probabilities.shape());
        const T inv_n = T{1} / static_cast<T>(n);
        for (std::size_t i = 0; i < dy.size(); ++i) {
            dy[i] = (probabilities[i] - one_hot[i]) * inv_n;
        }
        // Skip the softmax layer; dy is already the logit gradient.
        for (std::size_t li = layers_.size() - 1; li-- > 0;) {
            dy = layers_[li]->backward(dy);
        }
        has_caches_ = false;
        return dy;
    }

    void zero_grad() {
        for (auto& slot : registry_) {
            if (slot.grad) slot.grad->fill(T{0});
        }
    }

    std::vector<ParamSlot<T>>& params() { return registry_; }
    const std::vector<ParamSlot<T>>& params() const { return registry_; }

    std::size_t param_count() const {
        std::size_t total = 0;
        for (const auto& slot : registry_) total += slot.value->size();
        return total;
    }

    std::vector<LayerInfo<T>> summarize() const {
        std::vector<LayerInfo<T>> out;
        std::vector<std::size_t> shape = {config_.input_size, config_.input_size,
                                          config_.input_channels};
        for (const auto& layer : layers_) {
            shape = layer->output_shape(shape);
            out.push_back({layer->name(), layer->kind(), shape, layer->param_count()});
        }
        return out;
    }

private:
    void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }

    ModelConfig config_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<ParamSlot<T>> registry_;
    bool has_caches_ = false;
};

template <typename T>
SequentialModel<T> build_reference_model(std::uint64_t seed) {
    return SequentialModel<T>(ModelConfig::reference(), seed);
}

template <typename T>
SequentialModel<T> build_baseline_model(std::uint64_t seed) {
    return SequentialModel<T>(ModelConfig::reference().without_se(), seed);
}

template <typename T>
SequentialModel<T> build_scaled_model(const ModelConfig& config, std::uint64_t seed) {
    return SequentialModel<T>(config, seed);
}

}  // namespace secnn

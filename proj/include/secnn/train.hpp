#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "secnn/dataset.hpp"
#include "secnn/model.hpp"
#include "secnn/optimizer.hpp"
#include "secnn/splits.hpp"

// The training protocol: a stratified train/test split, k-fold
// cross-validation inside the training portion for assessment, then a
// final model retrained on the whole training portion. Shuffling draws
// from a (seed, fold, epoch)-keyed stream, so runs replay bit for bit.

namespace secnn {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    std::size_t folds = 2;
    double split_ratio = 0.8;
    std::uint64_t seed = 42;
    double learning_rate = 1e-4;
    double clip_value = 1.0;

    void validate() const {
        if (epochs < 1) throw config_error("train config: epochs must be >= 1");
        if (batch_size < 1) throw config_error("train config: batch_size must be >= 1");
        if (folds < 2) throw config_error("train config: folds must be >= 2");
        if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
            throw config_error("train config: split_ratio must lie in (0,1)");
        }
        if (!(learning_rate > 0.0)) throw config_error("train config: learning_rate must be > 0");
        if (!(clip_value > 0.0)) throw config_error("train config: clip_value must be > 0");
    }
};

struct TrainingLogRow {
    std::size_t fold;  // 0..k-1 for CV folds, k for the final retrain
    std::size_t epoch;
    double mean_train_loss;
    double val_accuracy;
};

struct TrainingLog {
    std::vector<TrainingLogRow> rows;

    std::string to_csv() const {
        std::string out = "fold,epoch,mean_train_loss,val_accuracy\n";
        char buf[128];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.12g,%.12g\n", r.fold, r.epoch,
                          r.mean_train_loss, r.val_accuracy);
            out += buf;
        }
        return out;
    }
};

// Infer-mode probabilities for the selected samples, processed in batches.
template <typename T>
Tensor<T> predict_probabilities(SequentialModel<T>& model, const DatasetContainer& ds,
                                std::span<const std::size_t> indices, std::size_t batch_size) {
    Tensor<T> probs({indices.size(), model.config().classes});
    for (std::size_t at = 0; at < indices.size(); at += batch_size) {
        const std::size_t n = std::min(batch_size, indices.size() - at);
        Tensor<T> batch = gather_images<T>(ds, indices.subspan(at, n));
        Tensor<T> p = model.forward(batch, Mode::infer);
        std::memcpy(probs.data() + at * p.extent(1), p.data(), p.size() * sizeof(T));
    }
    return probs;
}

template <typename T>
double evaluate_accuracy(SequentialModel<T>& model, const DatasetContainer& ds,
                         std::span<const std::size_t> indices, std::size_t batch_size) {
    if (indices.empty()) throw argument_error("evaluate_accuracy: no samples");
    Tensor<T> probs = predict_probabilities(model, ds, indices, batch_size);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::uint8_t pred = probs(i, std::size_t{1}) > probs(i, std::size_t{0}) ? 1 : 0;
        if (pred == ds.labels[indices[i]]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(indices.size());
}

namespace detail {

template <typename T>
void train_phase(SequentialModel<T>& model, const DatasetContainer& ds,
                 const std::vector<std::size_t>& train_ids,
                 const std::vector<std::size_t>& val_ids, const TrainConfig& tc,
                 std::size_t fold_tag, TrainingLog& log) {
    AdamState<T> adam(static_cast<T>(tc.learning_rate), static_cast<T>(tc.clip_value));
    std::vector<Tensor<T>*> values;
    std::vector<const Tensor<T>*> grads;
    for (auto& slot : model.params()) {
        if (!slot.trainable) continue;
        values.push_back(slot.value);
        grads.push_back(slot.grad);
    }
    const std::size_t classes = model.config().classes;
    std::vector<std::size_t> order = train_ids;
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(derive_seed(tc.seed, 0x5f1e, fold_tag), epoch));
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t at = 0, batch_ix = 0; at < order.size();
             at += tc.batch_size, ++batch_ix) {
            const std::size_t n = std::min(tc.batch_size, order.size() - at);
            const std::span<const std::size_t> ids(order.data() + at, n);
            Tensor<T> batch = gather_images<T>(ds, ids);
            Tensor<T> targets = one_hot_labels<T>(ds, ids, classes);
            Tensor<T> probs = model.forward(batch, Mode::train);
            const double loss = cce_loss(probs, targets);
            if (!std::isfinite(loss)) {
                throw divergence_error("training diverged: non-finite loss at fold " +
                                       std::to_string(fold_tag) + ", epoch " +
                                       std::to_string(epoch) + ", batch " +
                                       std::to_string(batch_ix));
            }
            loss_sum += loss * static_cast<double>(n);
            model.backprop(probs, targets);
            for (auto& slot : model.params()) {
                if (slot.trainable) {
                    clip_elementwise_inplace(*slot.grad, static_cast<T>(tc.clip_value));
                }
            }
            adam_step(adam, values, grads);
        }
        const double val_acc = evaluate_accuracy(model, ds, val_ids, tc.batch_size);
        log.rows.push_back({fold_tag, epoch,
                            loss_sum / static_cast<double>(order.size()), val_acc});
    }
}

}  // namespace detail

template <typename T>
struct FitResult {
    SequentialModel<T> model;
    TrainingLog log;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

// Cross-validates on the training split (folds 0..k-1), then retrains a
// fresh model on the full training split; those rows are logged under fold
// index k with the reserved test split as the validation column.
template <typename T>
FitResult<T> fit(const ModelConfig& mc, const DatasetContainer& ds, const TrainConfig& tc) {
    mc.validate();
    tc.validate();
    if (ds.count() == 0) throw argument_error("fit: empty dataset");
    if (ds.side() != mc.input_size || mc.input_channels != 3) {
        throw shape_error("fit: dataset side " + std::to_string(ds.side()) +
                          " does not match model input " + std::to_string(mc.input_size) +
                          "x" + std::to_string(mc.input_channels) + "ch");
    }
    auto [train_ids, test_ids] = train_test_split(ds.count(), tc.split_ratio, ds.labels, tc.seed);
    const FoldPlan plan = kfold_partition(train_ids, tc.folds, ds.labels, tc.seed);

    TrainingLog log;
    for (std::size_t f = 0; f < tc.folds; ++f) {
        SequentialModel<T> fold_model(mc, derive_seed(tc.seed, 0x0de1, f));
        detail::train_phase(fold_model, ds, plan.training_indices(f), plan.folds[f], tc, f, log);
    }
    SequentialModel<T> final_model(mc, derive_seed(tc.seed, 0x0de1, tc.folds));
    detail::train_phase(final_model, ds, train_ids, test_ids, tc, tc.folds, log);
    return FitResult<T>{std::move(final_model), std::move(log), std::move(train_ids),
                        std::move(test_ids)};
}

}  // namespace secnn

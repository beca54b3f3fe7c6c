#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "secnn/errors.hpp"
#include "secnn/rng.hpp"

// Stratified train/test split and k-fold partitioning. Both shuffle within
// each class from a seed-derived stream, so plans replay exactly.

namespace secnn {

namespace detail {

inline std::array<std::vector<std::size_t>, 2> group_by_class(
    std::span<const std::size_t> indices, std::span<const std::uint8_t> labels) {
    std::array<std::vector<std::size_t>, 2> groups;
    for (std::size_t ix : indices) {
        if (ix >= labels.size()) {
            throw argument_error("split: index " + std::to_string(ix) +
                                 " has no label (labels cover " + std::to_string(labels.size()) +
                                 " samples)");
        }
        const std::uint8_t y = labels[ix];
        if (y > 1) throw argument_error("split: label " + std::to_string(y) + " outside {0,1}");
        groups[y].push_back(ix);
    }
    return groups;
}

}  // namespace detail

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t n, double ratio, std::span<const std::uint8_t> labels, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw argument_error("train_test_split: ratio must lie in (0,1)");
    }
    if (labels.size() != n) {
        throw argument_error("train_test_split: expected " + std::to_string(n) + " labels, got " +
                             std::to_string(labels.size()));
    }
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    auto groups = detail::group_by_class(all, labels);
    for (std::size_t cls = 0; cls < 2; ++cls) {
        if (groups[cls].empty()) {
            throw argument_error("train_test_split: class " + std::to_string(cls) +
                                 " has no samples, cannot stratify");
        }
    }
    std::vector<std::size_t> train, test;
    for (std::size_t cls = 0; cls < 2; ++cls) {
        auto& g = groups[cls];
        Rng rng(derive_seed(seed, 0x5eed, cls));
        rng.shuffle(g);
        const std::size_t take =
            static_cast<std::size_t>(std::llround(ratio * static_cast<double>(g.size())));
        train.insert(train.end(), g.begin(), g.begin() + take);
        test.insert(test.end(), g.begin() + take, g.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds;

    std::size_t fold_count() const { return folds.size(); }

    // All indices except those in fold f, ascending.
    std::vector<std::size_t> training_indices(std::size_t f) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < folds.size(); ++i) {
            if (i == f) continue;
            out.insert(out.end(), folds[i].begin(), folds[i].end());
        }
        std::sort(out.begin(), out.end());
        return out;
    }
};

// Stratified k folds: per class, floor(n_c/k) per fold with the remainder
// spread from a rotating start so total fold sizes differ by at most one.
inline FoldPlan kfold_partition(const std::vector<std::size_t>& train_indices, std::size_t k,
                                std::span<const std::uint8_t> labels, std::uint64_t seed) {
    if (k < 2) throw argument_error("kfold_partition: need k >= 2");
    if (k > train_indices.size()) {
        throw argument_error("kfold_partition: k = " + std::to_string(k) + " exceeds " +
                             std::to_string(train_indices.size()) + " samples");
    }
    auto groups = detail::group_by_class(train_indices, labels);
    for (std::size_t cls = 0; cls < 2; ++cls) {
        if (groups[cls].size() < k) {
            throw argument_error("kfold_partition: class " + std::to_string(cls) + " has only " +
                                 std::to_string(groups[cls].size()) + " samples for " +
                                 std::to_string(k) + " folds");
        }
    }
    FoldPlan plan;
    plan.folds.assign(k, {});
    std::size_t offset = 0;
    for (std::size_t cls = 0; cls < 2; ++cls) {
        auto& g = groups[cls];
        Rng rng(derive_seed(seed, 0xf01d, cls));
        rng.shuffle(g);
        const std::size_t base = g.size() / k;
        const std::size_t rem = g.size() % k;
        std::size_t cursor = 0;
        for (std::size_t f = 0; f < k; ++f) {
            // Folds [offset, offset+rem) receive one extra sample of this class.
            const std::size_t extra = ((f + k - offset) % k) < rem ? 1 : 0;
            const std::size_t take = base + extra;
            auto& fold = plan.folds[f];
            fold.insert(fold.end(), g.begin() + cursor, g.begin() + cursor + take);
            cursor += take;
        }
        offset = (offset + rem) % k;
    }
    for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
    return plan;
}

}  // namespace secnn

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "secnn/tensor.hpp"

// Binary-classification evaluation. Class 0 is "fake", class 1 "real".
// AUC is rank-based with half credit for ties, which makes it equal to the
// trapezoidal area under the threshold-sweep ROC curve.

namespace secnn {

struct ConfusionMatrix2 {
    // counts[true][predicted]
    std::array<std::array<std::uint64_t, 2>, 2> counts{{{0, 0}, {0, 0}}};

    std::uint64_t total() const {
        return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
    }
};

inline ConfusionMatrix2 confusion(std::span<const std::uint8_t> predicted,
                                  std::span<const std::uint8_t> truth) {
    if (predicted.size() != truth.size()) {
        throw argument_error("confusion: " + std::to_string(predicted.size()) +
                             " predictions vs " + std::to_string(truth.size()) + " labels");
    }
    ConfusionMatrix2 cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] > 1 || predicted[i] > 1) {
            throw argument_error("confusion: label outside {0,1} at sample " + std::to_string(i));
        }
        ++cm.counts[truth[i]][predicted[i]];
    }
    return cm;
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Set when a zero denominator forced a metric to 0.
    bool degenerate = false;
};

inline ClassMetrics precision_recall_f1(const ConfusionMatrix2& cm, std::size_t cls) {
    if (cls > 1) throw argument_error("precision_recall_f1: class index outside {0,1}");
    const double tp = static_cast<double>(cm.counts[cls][cls]);
    const double fp = static_cast<double>(cm.counts[1 - cls][cls]);
    const double fn = static_cast<double>(cm.counts[cls][1 - cls]);
    ClassMetrics m;
    if (tp + fp == 0.0) {
        m.degenerate = true;
    } else {
        m.precision = tp / (tp + fp);
    }
    if (tp + fn == 0.0) {
        m.degenerate = true;
    } else {
        m.recall = tp / (tp + fn);
    }
    if (m.precision + m.recall == 0.0) {
        m.degenerate = true;
    } else {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

inline double accuracy(const ConfusionMatrix2& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw argument_error("accuracy: empty confusion matrix");
    return static_cast<double>(cm.counts[0][0] + cm.counts[1][1]) / static_cast<double>(total);
}

namespace detail {

inline void check_roc_input(std::span<const double> scores, std::span<const std::uint8_t> labels,
                            std::size_t positive, std::size_t& n_pos, std::size_t& n_neg) {
    if (scores.size() != labels.size()) {
        throw argument_error("roc: score and label counts differ");
    }
    if (positive > 1) throw argument_error("roc: positive class outside {0,1}");
    n_pos = n_neg = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 1) throw argument_error("roc: label outside {0,1}");
        if (!std::isfinite(scores[i])) throw argument_error("roc: non-finite score");
        (labels[i] == positive ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0) {
        throw argument_error("roc: need at least one positive and one negative sample");
    }
}

}  // namespace detail

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (fpr, tpr)
    std::size_t positive_class = 1;
};

// Threshold sweep over every distinct score; a tie group advances the curve
// by one combined step. The curve starts at (0,0) and ends at (1,1).
inline RocCurve roc_points(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           std::size_t positive) {
    std::size_t n_pos = 0, n_neg = 0;
    detail::check_roc_input(scores, labels, positive, n_pos, n_neg);

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.positive_class = positive;
    curve.points.emplace_back(0.0, 0.0);
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            (labels[order[i]] == positive ? tp : fp) += 1;
            ++i;
        }
        curve.points.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                                  static_cast<double>(tp) / static_cast<double>(n_pos));
    }
    return curve;
}

// AUC = P(score_pos > score_neg) + 0.5 * P(tie), computed from midranks.
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
                  std::size_t positive) {
    std::size_t n_pos = 0, n_neg = 0;
    detail::check_roc_input(scores, labels, positive, n_pos, n_neg);

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == positive) rank_sum += midrank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double trapezoid_area(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& [x0, y0] = curve.points[i - 1];
        const auto& [x1, y1] = curve.points[i];
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    return area;
}

struct EvalReport {
    ConfusionMatrix2 cm;
    std::array<ClassMetrics, 2> per_class;
    double accuracy = 0.0;
    std::array<double, 2> auc{0.0, 0.0};
    std::size_t samples = 0;
};

// Predicted label is the argmax per row, ties broken toward class 0.
// Each class's AUC uses its own probability column as the score.
template <typename T>
EvalReport classification_report(const Tensor<T>& probabilities,
                                 std::span<const std::uint8_t> labels) {
    require_rank(probabilities, 2, "report probabilities");
    if (probabilities.extent(1) != 2) {
        throw argument_error("report: expected 2 probability columns, got " +
                             std::to_string(probabilities.extent(1)));
    }
    if (probabilities.extent(0) != labels.size()) {
        throw argument_error("report: row and label counts differ");
    }
    const std::size_t n = labels.size();
    std::vector<std::uint8_t> predicted(n);
    std::vector<double> p_fake(n), p_real(n);
    for (std::size_t i = 0; i < n; ++i) {
        p_fake[i] = static_cast<double>(probabilities(i, std::size_t{0}));
        p_real[i] = static_cast<double>(probabilities(i, std::size_t{1}));
        predicted[i] = p_real[i] > p_fake[i] ? 1 : 0;
    }
    EvalReport report;
    report.samples = n;
    report.cm = confusion(predicted, labels);
    report.per_class[0] = precision_recall_f1(report.cm, 0);
    report.per_class[1] = precision_recall_f1(report.cm, 1);
    report.accuracy = accuracy(report.cm);
    report.auc[0] = auc(p_fake, labels, 0);
    report.auc[1] = auc(p_real, labels, 1);
    return report;
}

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace detail

// Two-decimal table, accuracy as a percentage.
inline std::string render_report(const EvalReport& r) {
    std::string out;
    out += "              precision    recall  f1-score\n";
    const char* names[2] = {"fake (F)", "real (R)"};
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& m = r.per_class[c];
        out += "    " + std::string(names[c]);
        out += detail::fmt("       %.2f", m.precision);
        out += detail::fmt("      %.2f", m.recall);
        out += detail::fmt("      %.2f", m.f1);
        if (m.degenerate) out += "  (degenerate)";
        out += "\n";
    }
    out += "\n";
    out += "    accuracy: " + detail::fmt("%.2f", 100.0 * r.accuracy) + "%";
    out += "    samples: " + std::to_string(r.samples) + "\n";
    out += "    auc fake: " + detail::fmt("%.4f", r.auc[0]);
    out += "    auc real: " + detail::fmt("%.4f", r.auc[1]) + "\n\n";
    out += "    confusion matrix        pred fake    pred real\n";
    out += "    true fake          " + detail::fmt("%12.0f", static_cast<double>(r.cm.counts[0][0]));
    out += detail::fmt(" %12.0f", static_cast<double>(r.cm.counts[0][1])) + "\n";
    out += "    true real          " + detail::fmt("%12.0f", static_cast<double>(r.cm.counts[1][0]));
    out += detail::fmt(" %12.0f", static_cast<double>(r.cm.counts[1][1])) + "\n";
    return out;
}

// metric=value per line, full precision; the table above is a rounded view
// of exactly these values.
inline std::string render_report_kv(const EvalReport& r) {
    std::string out;
    out += "samples=" + std::to_string(r.samples) + "\n";
    out += "accuracy=" + detail::fmt("%.12g", r.accuracy) + "\n";
    const char* names[2] = {"fake", "real"};
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& m = r.per_class[c];
        const std::string suffix = std::string("_") + names[c];
        out += "precision" + suffix + "=" + detail::fmt("%.12g", m.precision) + "\n";
        out += "recall" + suffix + "=" + detail::fmt("%.12g", m.recall) + "\n";
        out += "f1" + suffix + "=" + detail::fmt("%.12g", m.f1) + "\n";
        out += "degenerate" + suffix + "=" + (m.degenerate ? std::string("1") : std::string("0")) +
               "\n";
        out += "auc" + suffix + "=" + detail::fmt("%.12g", r.auc[c]) + "\n";
    }
    out += "cm_true_fake_pred_fake=" + std::to_string(r.cm.counts[0][0]) + "\n";
    out += "cm_true_fake_pred_real=" + std::to_string(r.cm.counts[0][1]) + "\n";
    out += "cm_true_real_pred_fake=" + std::to_string(r.cm.counts[1][0]) + "\n";
    out += "cm_true_real_pred_real=" + std::to_string(r.cm.counts[1][1]) + "\n";
    return out;
}

// Two-column CSV (fpr,tpr), six decimals, one point per line.
inline std::string render_roc_csv(const RocCurve& curve) {
    std::string out;
    char buf[64];
    for (const auto& [fpr, tpr] : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", fpr, tpr);
        out += buf;
    }
    return out;
}

}  // namespace secnn

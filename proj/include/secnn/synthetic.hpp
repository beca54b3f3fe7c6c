#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "secnn/dataset.hpp"
#include "secnn/rng.hpp"

// Deterministic two-class texture generator. Class 0 is low-frequency
// smooth shading, class 1 high-frequency stripes or checkers; the bands
// must not touch, which keeps the classes separable by local frequency
// content alone.

namespace secnn {

struct SyntheticSpec {
    std::size_t count = 1000;
    std::size_t side = 32;
    double low_freq_min = 0.5;   // class 0 band, cycles per image
    double low_freq_max = 2.0;
    double high_freq_min = 6.0;  // class 1 band
    double high_freq_max = 12.0;
    double noise_amplitude = 0.05;
    std::uint64_t seed = 1;

    // Base sine amplitude before the per-channel jitter in [0.8, 1.2].
    static constexpr double signal_amplitude = 0.3;

    void validate() const {
        if (count == 0 || count % 2 != 0) {
            throw config_error("synthetic spec: count must be even and positive for balanced "
                               "classes, got " + std::to_string(count));
        }
        if (side < 4) throw config_error("synthetic spec: side must be >= 4");
        if (!(low_freq_min > 0.0 && low_freq_min <= low_freq_max)) {
            throw config_error("synthetic spec: invalid low frequency band");
        }
        if (!(high_freq_min <= high_freq_max)) {
            throw config_error("synthetic spec: invalid high frequency band");
        }
        if (!(low_freq_max < high_freq_min)) {
            throw config_error("synthetic spec: frequency bands overlap");
        }
        if (!(noise_amplitude >= 0.0 && noise_amplitude < signal_amplitude / 2.0)) {
            throw config_error("synthetic spec: noise amplitude must stay below half the "
                               "signal amplitude");
        }
    }
};

inline DatasetContainer generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t side = spec.side;
    Tensor<float> images({spec.count, side, side, 3});
    std::vector<std::uint8_t> labels(spec.count);
    float* out = images.data();

    for (std::size_t i = 0; i < spec.count; ++i) {
        const std::uint8_t label = static_cast<std::uint8_t>(i % 2);
        labels[i] = label;
        Rng rng(derive_seed(spec.seed, 0x5e7, i));

        const double theta = rng.uniform(0.0, std::numbers::pi);
        const double freq = label == 0 ? rng.uniform(spec.low_freq_min, spec.low_freq_max)
                                       : rng.uniform(spec.high_freq_min, spec.high_freq_max);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const bool checker = label == 1 && rng.uniform() < 0.5;
        double amp[3];
        for (double& a : amp) a = SyntheticSpec::signal_amplitude * rng.uniform(0.8, 1.2);

        const double wx = std::cos(theta) * 2.0 * std::numbers::pi * freq / side;
        const double wy = std::sin(theta) * 2.0 * std::numbers::pi * freq / side;
        const double ox = -std::sin(theta) * 2.0 * std::numbers::pi * freq / side;
        const double oy = std::cos(theta) * 2.0 * std::numbers::pi * freq / side;

        float* img = out + i * side * side * 3;
        for (std::size_t y = 0; y < side; ++y) {
            for (std::size_t x = 0; x < side; ++x) {
                double pattern = std::sin(wx * x + wy * y + phase);
                if (checker) pattern *= std::sin(ox * x + oy * y + phase);
                for (std::size_t c = 0; c < 3; ++c) {
                    const double noise = spec.noise_amplitude * (2.0 * rng.uniform() - 1.0);
                    const double v = 0.5 + amp[c] * pattern + noise;
                    img[(y * side + x) * 3 + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            }
        }
    }
    return DatasetContainer{std::move(images), std::move(labels), "synthetic"};
}

}  // namespace secnn

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace secnn {

inline std::uint64_t hash_mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

// Combines a base seed with up to two stream tags (fold, epoch, layer index...).
// Used everywhere a sub-stream is needed so runs replay exactly.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = hash_mix64(base + 0x9e3779b97f4a7c15ull);
    h = hash_mix64(h ^ (a + 0x9e3779b97f4a7c15ull));
    h = hash_mix64(h ^ (b + 0x632be59bd9b4e019ull));
    return h;
}

// SplitMix64 with explicit uniform/normal draws. The standard <random>
// distributions are implementation-defined, so they cannot back the
// bit-reproducibility contract; these can.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be nonzero.
    std::size_t below(std::size_t n) {
        const std::uint64_t bound = n;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r = next_u64();
        while (r >= limit) r = next_u64();
        return static_cast<std::size_t>(r % bound);
    }

    // Standard normal via Box-Muller; one value per call so the stream
    // layout stays obvious.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Normal(0, stddev) redrawn until within +-2 stddev.
    double truncated_normal(double stddev) {
        double z = normal();
        while (std::fabs(z) > 2.0) z = normal();
        return z * stddev;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace secnn

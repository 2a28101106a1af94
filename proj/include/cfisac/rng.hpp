#pragma once

#include <cstdint>
#include <random>

#include "cfisac/types.hpp"

namespace cfisac {

/// splitmix64 step; used both as a mixer and to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a tag. Chained calls give
/// independent, reproducible streams: derive_seed(s, 1), derive_seed(s, 2), ...
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
    return splitmix64(parent ^ (splitmix64(tag) + 0x9e3779b97f4a7c15ULL + (parent << 6) + (parent >> 2)));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(parent, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return derive_seed(derive_seed(parent, a, b), c);
}

/// Seeded random stream. Gaussian draws use an explicit Box-Muller transform
/// so the draw sequence is a pure function of the seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double uniform() {  // [0, 1)
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(std::uniform_int_distribution<std::uint32_t>(0, n - 1)(engine_));
    }

    /// Standard normal via Box-Muller (one value per pair; the sibling is dropped
    /// to keep the stream position independent of call parity).
    double gaussian() {
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    /// Circularly-symmetric complex Gaussian CN(0, variance).
    cdouble cgaussian(double variance = 1.0) {
        const double s = std::sqrt(variance / 2.0);
        return {s * gaussian(), s * gaussian()};
    }

    CVec cgaussian_vector(int n, double variance = 1.0) {
        CVec v(n);
        for (int i = 0; i < n; ++i) v(i) = cgaussian(variance);
        return v;
    }

    CMat cgaussian_matrix(int rows, int cols, double variance = 1.0) {
        CMat m(rows, cols);
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < rows; ++r) m(r, c) = cgaussian(variance);
        return m;
    }

    double gamma(double shape, double rate) {
        return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace cfisac

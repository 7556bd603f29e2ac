#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace armor {

/// Deterministic RNG used everywhere randomness is needed. The transforms
/// are written out (instead of std::uniform_real_distribution etc.) so that
/// streams are reproducible bit-for-bit for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Box-Muller; one fresh pair per call keeps the stream stateless.
    double normal() {
        const double u1 = std::max(uniform(), 0x1.0p-60);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

    /// Derives an independent stream, e.g. one per worker or per epoch.
    Rng split(std::uint64_t stream) {
        return Rng(next_u64() ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace armor

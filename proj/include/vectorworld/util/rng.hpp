#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vw {

// Seeded RNG with portable draws. mt19937_64 output is pinned by the
// standard; the double conversions below avoid std::*_distribution,
// whose sequences are implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed), seed_mix_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(eng_() % span);
    }

    // Box-Muller, two uniform draws per call
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // independent child stream, stable under reordering of sibling forks
    Rng fork(uint64_t stream) const {
        uint64_t x = seed_mix_ + 0x9E3779B97F4A7C15ULL * (stream + 1);
        x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ULL;
        x ^= x >> 27; x *= 0x94D049BB133111EBULL;
        x ^= x >> 31;
        return Rng(x);
    }

private:
    std::mt19937_64 eng_;
    uint64_t seed_mix_;
};

}  // namespace vw

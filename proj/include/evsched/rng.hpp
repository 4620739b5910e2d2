#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

// Self-contained seeded RNG with explicit sampling algorithms so that
// generated scenarios are bit-identical across platforms and standard
// library versions (std::normal_distribution et al. are
// implementation-defined).

namespace evsched {

// SplitMix64 (Vigna). State advances by the golden-gamma increment.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1): rejects exact zeros so log() stays finite.
    double u01_open() {
        double u = u01();
        while (u <= 0.0) u = u01();
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Basic Box-Muller; the sine branch is discarded to keep the stream
    // position independent of call history.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = u01_open();
        double u2 = u01();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
        return mean + stddev * z;
    }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    // Marsaglia-Tsang for shape >= 1, boosted for shape < 1.
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be > 0");
        if (shape < 1.0) {
            double u = u01_open();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = u01_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        double x = gamma(a);
        double y = gamma(b);
        return x / (x + y);
    }

private:
    std::uint64_t state_;
};

// Mixes a master seed with stream tags so each (seed, tag...) pair gets an
// independent substream; inserting a new entity does not shift the draws of
// the others.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed ^ (tag + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b) {
    return mix_seed(mix_seed(seed, tag_a), tag_b);
}

} // namespace evsched

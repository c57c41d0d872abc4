// Portable seeded random streams.
//
// All randomness in the library flows through Xoshiro256++ generators whose
// state is derived from a 64-bit user seed via the SplitMix64 chain, so a
// (seed, stream, chunk) triple names a reproducible substream on every
// platform. Floating-point transforms use only integer bit tricks, sqrt and
// log, keeping results stable across standard library implementations.
#pragma once

#include <cmath>
#include <cstdint>

namespace hetsim {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Xoshiro256++ (Blackman & Vigna), state seeded by SplitMix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64(sm);
    }

    // Independent substream for (seed, stream tag, chunk index).
    static Rng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t chunk = 0) {
        std::uint64_t sm = seed;
        std::uint64_t a = splitmix64(sm) ^ (tag * 0xd1342543de82ef95ULL);
        std::uint64_t b = a ^ (chunk * 0x9e3779b97f4a7c15ULL);
        return Rng(b);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    double exponential() { return -std::log(uniform_pos()); }

    // Standard normal pair by the Marsaglia polar method.
    void normal_pair(double& z0, double& z1) {
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        z0 = u * m;
        z1 = v * m;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

} // namespace hetsim

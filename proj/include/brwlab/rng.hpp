#pragma once

// Deterministic, splittable random number generation.
//
// Every Monte Carlo campaign in this library derives one independent stream
// per replica from a single master seed, so replica r is reproducible in
// isolation and results do not depend on the worker count.

#include <cstdint>
#include <cmath>

namespace brwlab {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGoldenGamma);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based stream derivation: mixes (master, lane indices) into one
// 64-bit stream seed. derive_stream(s, r) and derive_stream(s, r, a) are
// unrelated streams for distinct (r, a).
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t lane0,
                                   std::uint64_t lane1 = 0) {
    std::uint64_t s = master;
    (void)splitmix64(s);
    s ^= lane0 * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL;
    (void)splitmix64(s);
    s ^= lane1 * 0x94d049bb133111ebULL + 0xbf58476d1ce4e5b9ULL;
    return splitmix64(s);
}

// xoshiro256++ (Blackman & Vigna), seeded through splitmix64.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 1) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
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

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

// Random stream with the sampling primitives used throughout the library.
// The Gaussian generator is the Marsaglia polar method with one cached value;
// its output sequence is fixed by this header, not by the C++ runtime.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe under log().
    double u01_open() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    bool coin() { return (engine_() >> 63) != 0; }

    std::uint64_t below(std::uint64_t n) {
        // Lemire-style rejection-free enough for our n; bias < 2^-64 * n.
        return static_cast<std::uint64_t>((static_cast<__uint128_t>(engine_()) * n) >> 64);
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, q;
        do {
            u = 2.0 * u01() - 1.0;
            v = 2.0 * u01() - 1.0;
            q = u * u + v * v;
        } while (q >= 1.0 || q == 0.0);
        const double f = std::sqrt(-2.0 * std::log(q) / q);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double exponential() { return -std::log(u01_open()); }

    double rayleigh() { return std::sqrt(2.0 * exponential()); }

private:
    Xoshiro256pp engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace brwlab

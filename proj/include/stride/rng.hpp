// Pinned random number generation. Everything downstream of a seed must be
// byte-reproducible across platforms, so we avoid std::<distribution> (its
// output is implementation-defined) and use SplitMix64 plus explicit
// Box-Muller / Fisher-Yates throughout.
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace stride {

// SplitMix64 (Steele, Lea, Flood 2014). One 64-bit state word, full period.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1): 53 random mantissa bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log() argument.
    double uniform_pos() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // One draw per call, two uniforms consumed (no cached spare, so the
    // stream position is a pure function of the call count).
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }
};

// FNV-1a 64-bit; used for manifest file hashes and seed derivation tags.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

// Per-unit stream derivation: seed_unit = mix(master ^ hash(tag) ^ index).
// Units (CV folds, forest trees, LISA cells, ...) get independent streams, so
// any execution order reproduces the sequential result bit for bit.
inline uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index = 0) {
    SplitMix64 s(master ^ fnv1a64(tag) ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    return s.next();
}

}  // namespace stride

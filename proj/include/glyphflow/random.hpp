// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "glyphflow/tensor.hpp"

namespace glyphflow {

// Counter-based generator. Word i of stream `seed` is
//
//   x = seed + (i + 1) * 0x9E3779B97F4A7C15          (mod 2^64)
//   x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
//   x = (x ^ (x >> 27)) * 0x94D049BB133111EB
//   word = x ^ (x >> 31)
//
// i.e. the SplitMix64 finalizer applied to a Weyl counter. Any word can be
// computed without generating its predecessors, so a stream can be replayed
// from (seed, counter) alone.
class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

    static constexpr std::uint64_t mix(std::uint64_t x) {
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    static constexpr std::uint64_t word_at(std::uint64_t seed, std::uint64_t i) {
        return mix(seed + (i + 1) * kGolden);
    }

    std::uint64_t next_u64() { return word_at(seed_, counter_++); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n). Multiply-shift; bias is below 2^-64 * n.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
    }

    /// Box-Muller pair from two consecutive words; u1 is taken on (0, 1].
    std::pair<double, double> normal_pair() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        auto [z0, z1] = normal_pair();
        spare_ = z1;
        has_spare_ = true;
        return z0;
    }

    template <typename Container>
    void shuffle(Container& c) {
        for (std::size_t i = c.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(c[i - 1], c[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives an independent stream seed from a parent seed and a tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return CounterRng::mix(seed ^ CounterRng::mix(tag + CounterRng::kGolden));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

/// Standard normals for `shape` from stream `seed`: element 2k and 2k+1 are
/// the Box-Muller pair built from words 2k and 2k+1.
template <typename T = float>
Tensor<T> seeded_randn(const Shape& shape, std::uint64_t seed) {
    Tensor<T> out(shape);
    CounterRng rng(seed);
    auto data = out.data();
    std::size_t i = 0;
    for (; i + 1 < data.size(); i += 2) {
        auto [z0, z1] = rng.normal_pair();
        data[i] = static_cast<T>(z0);
        data[i + 1] = static_cast<T>(z1);
    }
    if (i < data.size()) data[i] = static_cast<T>(rng.normal_pair().first);
    return out;
}

}  // namespace glyphflow

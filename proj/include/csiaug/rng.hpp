// Copyright (C) 2026 the csiaug authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "csiaug/common.hpp"

namespace csiaug {

// splitmix64 step. This is the documented, stable 64-bit mix used everywhere a
// derived seed is needed (per-sample streams, per-class sub-generators):
//   derived = splitmix64(seed + golden * index)
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable per-index stream derivation (splitmix-style, see concurrency notes in
// the synth generator): mixes `index` into `seed` through two splitmix rounds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed ^ 0x8e9a5c1b3d7f2468ULL) + index);
}

// xoshiro256++ with Box-Muller normals. All stochastic behaviour in the
// library flows through this generator, so runs are reproducible bit-for-bit
// from a u64 seed, and the full state (4 words) serializes into checkpoints.
class Rng {
public:
    using State = std::array<std::uint64_t, 4>;

    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x = splitmix64(x);
            word = x;
        }
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

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive integer range via rejection-free modulo of a wide draw.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        require<ConfigError>(lo <= hi, "uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        // Lemire-style multiply-shift keeps bias below 2^-64, fine here.
        const unsigned __int128 m =
            static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(span);
        return lo + static_cast<std::int64_t>(m >> 64);
    }

    // One standard normal draw. Computes a Box-Muller pair and discards the
    // second member so the generator state never carries hidden caches.
    double normal() {
        double a, b;
        normal_pair(a, b);
        return a;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename S>
    void fill_normal(std::span<S> out, double mean = 0.0, double stddev = 1.0) {
        std::size_t i = 0;
        while (i + 1 < out.size()) {
            double a, b;
            normal_pair(a, b);
            out[i++] = static_cast<S>(mean + stddev * a);
            out[i++] = static_cast<S>(mean + stddev * b);
        }
        if (i < out.size()) out[i] = static_cast<S>(mean + stddev * normal());
    }

    template <typename S>
    void fill_uniform(std::span<S> out, double lo, double hi) {
        for (auto& v : out) v = static_cast<S>(uniform(lo, hi));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent derived stream; stable under the documented mix.
    Rng split(std::uint64_t index) const {
        Rng r(0);
        r.state_ = state_;
        std::uint64_t base = mix_seed(state_[0] ^ state_[3], index);
        for (auto& word : r.state_) {
            base = splitmix64(base);
            word = base;
        }
        return r;
    }

    State state() const { return state_; }
    void set_state(const State& s) { state_ = s; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    void normal_pair(double& a, double& b) {
        // u1 in (0, 1] so log() stays finite.
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        a = r * std::cos(theta);
        b = r * std::sin(theta);
    }

    State state_{};
};

}  // namespace csiaug

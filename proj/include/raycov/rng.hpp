// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace raycov {

namespace detail {

// splitmix64: used to hash stream paths and to expand seeds into generator
// state. Passes by reference so it can also act as a tiny standalone PRNG.
inline std::uint64_t splitmix64(std::uint64_t &state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// xoshiro256++ with splittable, order-independent stream derivation.
//
// Reproducibility contract: every independent consumer (trial, interferer,
// ray, sample index, ...) derives its own stream via derive()/fork() with a
// distinct word path, so results never depend on evaluation order or thread
// scheduling. Gaussian variates use an explicit Box-Muller transform instead
// of std::normal_distribution, whose output is implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    // Derives a stream from a base seed and a path of words. Different paths
    // give statistically independent streams; the same path always gives the
    // same stream.
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t h = seed ^ 0x243f6a8885a308d3ull;
        for (std::uint64_t w : path) {
            std::uint64_t mix = h + 0x9e3779b97f4a7c15ull * (w + 1);
            h = detail::splitmix64(mix);
        }
        Rng r(0);
        r.reseed(h);
        return r;
    }

    // Derives a child stream from the current state without advancing it.
    Rng fork(std::initializer_list<std::uint64_t> path) const {
        std::uint64_t h = s_[0] ^ detail::rotl64(s_[1], 17) ^ detail::rotl64(s_[2], 31) ^ s_[3];
        return derive(h, path);
    }

    std::uint64_t next() {
        const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl64(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // One standard normal pair via Box-Muller; consumes exactly two words.
    void normal_pair(double &z0, double &z1) {
        // u1 in (0, 1] so the log is finite.
        double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
        double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double phi = 2.0 * std::numbers::pi * u2;
        z0 = r * std::cos(phi);
        z1 = r * std::sin(phi);
    }

    double normal() {
        double a, b;
        normal_pair(a, b);
        return a;
    }

    // Circularly symmetric complex Gaussian with E|z|^2 = variance.
    std::complex<double> cnormal(double variance) {
        double a, b;
        normal_pair(a, b);
        double s = std::sqrt(variance / 2.0);
        return {s * a, s * b};
    }

  private:
    void reseed(std::uint64_t seed) {
        std::uint64_t st = seed;
        for (auto &w : s_)
            w = detail::splitmix64(st);
    }

    std::uint64_t s_[4];
};

// Compensated (Neumaier) summation so reductions are exact enough to be
// independent of how trials were batched.
class KahanSum {
  public:
    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace raycov

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "cvec.hpp"
#include "errors.hpp"

namespace holoflow {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic stream generator. Bit-for-bit reproducible from (seed,
// stream) on any platform: no libm distribution calls, just integer mixing
// plus exp/log/sqrt/cos, which are correctly rounded or near enough for the
// purpose here. Distinct streams let samplers hand independent substreams to
// each sampled object without sharing mutable state.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(mix64(seed ^ mix64(stream))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // standard normal, Marsaglia polar method
    double normal() {
        for (;;) {
            double x = uniform(-1.0, 1.0);
            double y = uniform(-1.0, 1.0);
            double s = x * x + y * y;
            if (s > 0.0 && s < 1.0) return x * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    cplx unit_complex() {
        double th = uniform(0.0, 2.0 * std::numbers::pi);
        return cplx(std::cos(th), std::sin(th));
    }

    // uniform on the complex unit sphere in C^q
    cvec unit_vector(int q) {
        cvec v(static_cast<std::size_t>(q));
        double n2 = 0.0;
        do {
            for (int i = 0; i < q; ++i) {
                v[static_cast<std::size_t>(i)] = cplx(normal(), normal());
            }
            n2 = norm2(v);
        } while (n2 < 1e-8);
        return (1.0 / n2) * v;
    }

    // uniform w.r.t. volume in the Euclidean ball of given radius in C^q
    cvec in_ball(int q, double radius) {
        cvec dir = unit_vector(q);
        double r = radius * std::pow(uniform(), 1.0 / (2.0 * q));
        return r * dir;
    }

    // uniform per coordinate in the disc of given radius (max-norm ball)
    cvec in_polydisc(int q, double radius) {
        cvec v(static_cast<std::size_t>(q));
        for (int i = 0; i < q; ++i) {
            double x, y;
            do {
                x = uniform(-1.0, 1.0);
                y = uniform(-1.0, 1.0);
            } while (x * x + y * y >= 1.0);
            v[static_cast<std::size_t>(i)] = radius * cplx(x, y);
        }
        return v;
    }

private:
    std::uint64_t state_;
};

}  // namespace holoflow

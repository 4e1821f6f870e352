// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace graphfree {

// Deterministic RNG wrapper. All randomness in the library flows through this
// class with explicit seeds so reruns with the same config are bit-identical;
// std::uniform_*_distribution is avoided because its output is not pinned by
// the standard across implementations.
class rng {
  public:
    explicit rng(uint64_t seed) : seed_(seed), gen_(seed) {}

    // Uniform in the open interval (0, 1). Open on both sides: the antithetic
    // estimator compares u against probabilities that can sit at exactly 0 or
    // 1 under clamped parameters.
    double uniform01() {
        for (;;) {
            double u = (gen_() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi] inclusive, by rejection on the top 64-bit range.
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        for (;;) {
            uint64_t x = gen_();
            if (x < limit) return lo + static_cast<int>(x % span);
        }
    }

    // Standard normal via Box-Muller (pair cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Independent child stream; splitmix64 mixing keeps nearby (seed, stream)
    // pairs decorrelated.
    rng spawn(uint64_t stream) const {
        uint64_t z = seed_ ^ (stream + 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return rng(z ^ (z >> 31));
    }

    uint64_t raw() { return gen_(); }

  private:
    uint64_t seed_;
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace graphfree

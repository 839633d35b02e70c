// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace masc {

// Seeded random stream with portable output. std::uniform_real_distribution
// is implementation-defined, so uniforms are built from raw mt19937_64 words
// to keep runs byte-reproducible across standard libraries.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // (0, 1), safe to feed into log()
    double uniform_open() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform_in(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // G = -log(-log(U)), U ~ Uniform(0,1)
    double gumbel() {
        return -std::log(-std::log(uniform_open()));
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // unbiased integer in [0, n)
    int uniform_int(int n) {
        const std::uint64_t bound = ~0ull - (~0ull % static_cast<std::uint64_t>(n));
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= bound);
        return static_cast<int>(x % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace masc

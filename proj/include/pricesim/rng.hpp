#pragma once

#include "pricesim/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace pricesim {

// splitmix64 step; used both as a seed mixer and for deriving labeled
// substreams from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) {
    std::uint64_t s = master ^ (label * 0xd1b54a32d192ed03ULL);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

// Stream labels for the four independent substreams of a simulation run.
// Fixed so that adding privacy noise never perturbs context/demand draws.
enum class Stream : std::uint64_t {
    context = 1,
    demand = 2,
    policy = 3,
    privacy = 4,
    theta_init = 5,
};

// Random source with hand-rolled conversions so results are reproducible
// across standard libraries (std distributions are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0,1), 53-bit resolution
    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * u01(); }

    // standard normal via Box-Muller, pair cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - u01();  // (0,1]
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return u01() < p; }

    double rademacher() { return (eng_() & 1ULL) ? 1.0 : -1.0; }

    // uniform index in {0,...,n-1}, rejection sampling (no modulo bias)
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    // exact Poisson: sequential inversion for small means, transformed
    // rejection (PTRS, Hormann 1993) above
    long poisson(double mean);

    Vector gaussian_vector(Eigen::Index dim) {
        Vector v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal();
        return v;
    }

    Vector unit_sphere(Eigen::Index dim) {
        while (true) {
            Vector v = gaussian_vector(dim);
            const double n = v.norm();
            if (n > 0.0) return v / n;
        }
    }

    Vector uniform_in_ball(const Vector& center, double radius) {
        const Eigen::Index dim = center.size();
        const double r = radius * std::pow(u01(), 1.0 / static_cast<double>(dim));
        return center + r * unit_sphere(dim);
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline long Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
        // inversion by sequential search
        const double emu = std::exp(-mean);
        double prod = 1.0;
        long k = 0;
        const double u = u01();
        double cdf = emu;
        double pmf = emu;
        while (u > cdf) {
            ++k;
            pmf *= mean / static_cast<double>(k);
            cdf += pmf;
            if (k > 10000) break;  // u in the far tail beyond double resolution
        }
        (void)prod;
        return k;
    }
    // PTRS transformed rejection (exact for mean >= 10)
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        double u = u01() - 0.5;
        double v = u01();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = -mean + k * std::log(mean) - std::lgamma(k + 1.0);
        if (lhs <= rhs) return static_cast<long>(k);
    }
}

}  // namespace pricesim

#include "pricesim/glm.hpp"

#include <cmath>

namespace pricesim {

GlmKind glm_kind_from_string(const std::string& s) {
    if (s == "gaussian") return GlmKind::gaussian;
    if (s == "logistic") return GlmKind::logistic;
    if (s == "poisson") return GlmKind::poisson;
    throw std::invalid_argument("unknown GLM family: " + s);
}

std::string to_string(GlmKind kind) {
    switch (kind) {
        case GlmKind::gaussian: return "gaussian";
        case GlmKind::logistic: return "logistic";
        case GlmKind::poisson: return "poisson";
    }
    return "?";
}

namespace {

inline double sigmoid(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

// log(1 + e^a), branch at zero to avoid overflow
inline double softplus(double a) {
    return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

}  // namespace

double psi_derivatives(const GlmFamily& family, double a, int order) {
    if (order < 0 || order > 3) throw std::invalid_argument("psi_derivatives: order must be in 0..3");
    switch (family.kind) {
        case GlmKind::gaussian:
            switch (order) {
                case 0: return 0.5 * a * a;
                case 1: return a;
                case 2: return 1.0;
                default: return 0.0;
            }
        case GlmKind::logistic: {
            if (order == 0) return softplus(a);
            const double s = sigmoid(a);
            if (order == 1) return s;
            const double s2 = s * (1.0 - s);
            if (order == 2) return s2;
            return s2 * (1.0 - 2.0 * s);
        }
        case GlmKind::poisson:
            return std::exp(a);
    }
    throw std::invalid_argument("psi_derivatives: unknown family");
}

double mean_demand(const GlmFamily& family, const Vector& z, double p, const ModelParams& theta) {
    if (z.size() != theta.dim())
        throw std::invalid_argument("mean_demand: dimension mismatch between z and theta");
    const double a = z.dot(theta.alpha) - z.dot(theta.beta) * p;
    return psi_derivatives(family, a, 1);
}

double sample_demand(const GlmFamily& family, const Vector& z, double p, const ModelParams& theta,
                     Rng& rng) {
    if (z.size() != theta.dim())
        throw std::invalid_argument("sample_demand: dimension mismatch between z and theta");
    const double a = z.dot(theta.alpha) - z.dot(theta.beta) * p;
    switch (family.kind) {
        case GlmKind::gaussian:
            return a + family.noise_scale * rng.normal();
        case GlmKind::logistic:
            return rng.bernoulli(sigmoid(a)) ? 1.0 : 0.0;
        case GlmKind::poisson:
            return static_cast<double>(rng.poisson(std::exp(a)));
    }
    throw std::invalid_argument("sample_demand: unknown family");
}

double revenue(const GlmFamily& family, const Vector& z, double p, const ModelParams& theta) {
    return p * mean_demand(family, z, p, theta);
}

double maximize_on_interval(const std::function<double(double)>& f, double lo, double hi) {
    constexpr int kGridPoints = 201;
    constexpr double kTol = 1e-8;

    const double step = (hi - lo) / (kGridPoints - 1);
    int best = 0;
    double best_val = f(lo);
    for (int i = 1; i < kGridPoints; ++i) {
        const double v = f(lo + i * step);
        if (v > best_val) {  // strict: ties keep the lowest point
            best_val = v;
            best = i;
        }
    }

    double a = best == 0 ? lo : lo + (best - 1) * step;
    double b = best == kGridPoints - 1 ? hi : lo + (best + 1) * step;

    // golden-section on the bracketing interval
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > kTol) {
        if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    const double mid = 0.5 * (a + b);
    // keep the grid point unless refinement strictly improves; exact ties
    // then resolve to the lowest grid price
    if (f(mid) > best_val) return mid;
    return lo + best * step;
}

double optimal_price(const GlmFamily& family, const Vector& z, const ModelParams& theta,
                     const PriceRange& range) {
    const double za = z.dot(theta.alpha);
    const double zb = z.dot(theta.beta);
    if (family.kind == GlmKind::gaussian && zb > 0.0) {
        // linear demand: revenue p(za - zb p) peaks at za/(2 zb)
        return range.clip(za / (2.0 * zb));
    }
    const auto rev = [&](double p) { return p * psi_derivatives(family, za - zb * p, 1); };
    return maximize_on_interval(rev, range.lo, range.hi);
}

}  // namespace pricesim

#pragma once

#include "pricesim/rng.hpp"
#include "pricesim/types.hpp"

#include <functional>

namespace pricesim {

enum class GlmKind { gaussian, logistic, poisson };

// Demand family y | x with natural parameter a = x'theta and mean psi'(a).
// noise_scale is the Gaussian error s.d.; it is implied by the family for
// logistic and Poisson and ignored there.
struct GlmFamily {
    GlmKind kind = GlmKind::logistic;
    double noise_scale = 1.0;
};

GlmKind glm_kind_from_string(const std::string& s);
std::string to_string(GlmKind kind);

// psi^{(order)}(a) for order in 0..3, exact closed forms.
double psi_derivatives(const GlmFamily& family, double a, int order);

// mean response psi'(z'alpha - z'beta p)
double mean_demand(const GlmFamily& family, const Vector& z, double p, const ModelParams& theta);

double sample_demand(const GlmFamily& family, const Vector& z, double p, const ModelParams& theta,
                     Rng& rng);

// expected revenue p * psi'(z'alpha - z'beta p)
double revenue(const GlmFamily& family, const Vector& z, double p, const ModelParams& theta);

// argmax of a scalar function on [lo,hi]: 201-point grid scan (ties resolve
// to the lowest point) followed by golden-section refinement on the
// bracketing interval to absolute tolerance 1e-8.
double maximize_on_interval(const std::function<double(double)>& f, double lo, double hi);

double optimal_price(const GlmFamily& family, const Vector& z, const ModelParams& theta,
                     const PriceRange& range);

}  // namespace pricesim

#pragma once

#include "pricesim/rng.hpp"
#include "pricesim/types.hpp"

#include <optional>

namespace pricesim {

struct PrivacyParams {
    double epsilon = 1.0;
    std::optional<double> delta;  // present for approximate LDP, in (0,1]

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("PrivacyParams: epsilon must be positive");
        if (delta && !(*delta > 0.0 && *delta <= 1.0))
            throw std::invalid_argument("PrivacyParams: delta must be in (0,1]");
    }
};

enum class Mechanism { l2ball, gaussian };

struct PrivatizedVector {
    Vector w;
    Mechanism mechanism;
};

// projection onto the L2 ball of radius c_g; idempotent
Vector truncate_gradient(const Vector& g, double c_g);

// sphere radius factor: sqrt(pi) * (e^eps+1)/(e^eps-1) * dim*Gamma(dim+1/2)/Gamma(dim+1),
// evaluated through log-Gamma so large dim does not overflow. The closed
// form's dim is the half-dimension convention: the value is the unbiased
// sphere radius for vectors living in R^{2*dim}.
double r_eps_d(double epsilon, int dim);

// unbiased sphere radius for vectors in R^{ambient_dim}; equals
// c_g * r_eps_d(eps, ambient_dim/2) for even ambient dimensions
double l2_ball_radius(double c_g, double epsilon, Eigen::Index ambient_dim);

// Unbiased eps-LDP release of a vector with ||g|| <= c_g: a uniform draw on
// one of the two hemispheres of the sphere of radius c_g * r_eps_d, the
// favored hemisphere chosen with probability e^eps/(1+e^eps).
PrivatizedVector l2_ball(const Vector& g, double c_g, double epsilon, Rng& rng);

// introspectable variant for statistical tests
struct L2BallDraw {
    Vector w;
    bool b;        // sign coin: x_tilde = (2b-1) g
    bool favored;  // hemisphere coin with probability e^eps/(1+e^eps)
};
L2BallDraw l2_ball_draw(const Vector& g, double c_g, double epsilon, Rng& rng);

double gaussian_mechanism_sigma(double c_g, double epsilon, double delta);

// g + N(0, sigma^2 I) with sigma^2 = 2 c_g^2 ln(1.25/delta) / eps^2
PrivatizedVector gaussian_mechanism(const Vector& g, double c_g, double epsilon, double delta,
                                    Rng& rng);

}  // namespace pricesim

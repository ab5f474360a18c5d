#include "pricesim/privacy.hpp"

#include <cmath>

namespace pricesim {

Vector truncate_gradient(const Vector& g, double c_g) {
    if (!(c_g > 0.0)) throw std::invalid_argument("truncate_gradient: c_g must be positive");
    const double n = g.norm();
    if (n <= c_g) return g;
    return g * (c_g / n);
}

namespace {

// E[w | w'u > 0] = kappa * u for w uniform on the unit sphere of R^n, with
// kappa = Gamma(n/2) / (sqrt(pi) Gamma((n+1)/2)); the inverse of kappa times
// the epsilon ratio is the radius that makes the hemisphere mechanism
// unbiased. Coincides with the d Gamma(d+1/2)/Gamma(d+1) closed form at
// n = 2d.
double unbiased_radius_factor(double epsilon, double ambient_dim) {
    const double ratio = 1.0 + 2.0 / std::expm1(epsilon);  // (e^eps+1)/(e^eps-1)
    const double log_dim_factor =
        std::lgamma((ambient_dim + 1.0) / 2.0) - std::lgamma(ambient_dim / 2.0);
    return std::sqrt(M_PI) * ratio * std::exp(log_dim_factor);
}

}  // namespace

double r_eps_d(double epsilon, int dim) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("r_eps_d: epsilon must be positive");
    if (dim < 1) throw std::invalid_argument("r_eps_d: dim must be >= 1");
    return unbiased_radius_factor(epsilon, 2.0 * dim);
}

double l2_ball_radius(double c_g, double epsilon, Eigen::Index ambient_dim) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("l2_ball_radius: epsilon must be positive");
    if (ambient_dim < 1) throw std::invalid_argument("l2_ball_radius: dimension must be >= 1");
    return c_g * unbiased_radius_factor(epsilon, static_cast<double>(ambient_dim));
}

L2BallDraw l2_ball_draw(const Vector& g, double c_g, double epsilon, Rng& rng) {
    if (!(c_g > 0.0)) throw std::invalid_argument("l2_ball: c_g must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("l2_ball: epsilon must be positive");
    const double gnorm = g.norm();
    if (gnorm > c_g * (1.0 + 1e-12))
        throw std::invalid_argument("l2_ball: ||g|| exceeds c_g; truncate first");

    const Eigen::Index dim = g.size();
    const double radius = l2_ball_radius(c_g, epsilon, dim);

    const bool b = rng.bernoulli(0.5 + gnorm / (2.0 * c_g));
    const Vector x_tilde = (b ? 1.0 : -1.0) * g;
    const double p_favored = 1.0 / (1.0 + std::exp(-epsilon));  // e^eps/(1+e^eps)
    const bool favored = rng.bernoulli(p_favored);

    if (gnorm == 0.0) {
        // both hemispheres are the whole sphere
        return {radius * rng.unit_sphere(dim), b, favored};
    }

    // Uniform on a hemisphere: draw on the sphere, flip into the requested
    // half-space. Exact-zero dot products belong to the closed "<= 0" side.
    Vector u;
    double s;
    do {
        u = rng.unit_sphere(dim);
        s = u.dot(x_tilde);
    } while (favored && s == 0.0);
    Vector w;
    if (favored) {
        w = s > 0.0 ? u : Vector(-u);
    } else {
        w = s > 0.0 ? Vector(-u) : u;
    }
    return {radius * w, b, favored};
}

PrivatizedVector l2_ball(const Vector& g, double c_g, double epsilon, Rng& rng) {
    return {l2_ball_draw(g, c_g, epsilon, rng).w, Mechanism::l2ball};
}

double gaussian_mechanism_sigma(double c_g, double epsilon, double delta) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("gaussian_mechanism: delta must be in (0,1]");
    if (!(epsilon > 0.0)) throw std::invalid_argument("gaussian_mechanism: epsilon must be positive");
    return std::sqrt(2.0 * std::log(1.25 / delta)) * c_g / epsilon;
}

PrivatizedVector gaussian_mechanism(const Vector& g, double c_g, double epsilon, double delta,
                                    Rng& rng) {
    if (g.norm() > c_g * (1.0 + 1e-12))
        throw std::invalid_argument("gaussian_mechanism: ||g|| exceeds c_g; truncate first");
    const double sigma = gaussian_mechanism_sigma(c_g, epsilon, delta);
    return {g + sigma * rng.gaussian_vector(g.size()), Mechanism::gaussian};
}

}  // namespace pricesim

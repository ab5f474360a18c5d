#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pricesim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Demand parameter theta = (alpha, beta) stacked in R^{2d}.
struct ModelParams {
    Vector alpha;
    Vector beta;

    ModelParams() = default;
    ModelParams(Vector a, Vector b) : alpha(std::move(a)), beta(std::move(b)) {
        if (alpha.size() != beta.size())
            throw std::invalid_argument("ModelParams: alpha and beta must have equal length");
    }

    Eigen::Index dim() const { return alpha.size(); }

    Vector stacked() const {
        Vector out(2 * alpha.size());
        out << alpha, beta;
        return out;
    }

    static ModelParams from_stacked(const Vector& theta) {
        if (theta.size() % 2 != 0)
            throw std::invalid_argument("ModelParams: stacked vector must have even length");
        const Eigen::Index d = theta.size() / 2;
        return ModelParams(theta.head(d), theta.tail(d));
    }
};

struct PriceRange {
    double lo = 0.0;
    double hi = 1.0;

    PriceRange() = default;
    PriceRange(double l, double u) : lo(l), hi(u) {
        if (!(l >= 0.0) || !(l < u))
            throw std::invalid_argument("PriceRange: need 0 <= lo < hi");
    }

    double clip(double p) const { return p < lo ? lo : (p > hi ? hi : p); }
    double width() const { return hi - lo; }
};

// x = (z, -p z) in R^{2d}.
inline Vector make_covariate(const Vector& z, double p) {
    Vector x(2 * z.size());
    x.head(z.size()) = z;
    x.tail(z.size()) = -p * z;
    return x;
}

struct SingularMatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    Vector last_iterate;
    ConvergenceError(const std::string& msg, Vector iterate)
        : std::runtime_error(msg), last_iterate(std::move(iterate)) {}
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pricesim

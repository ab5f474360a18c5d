#pragma once

#include "pricesim/glm.hpp"
#include "pricesim/types.hpp"

#include <Eigen/Cholesky>

#include <optional>

namespace pricesim {

// Growable (x, y) sample with all x of one length 2d. Rows are kept in a
// contiguous matrix so likelihood passes vectorize.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(Eigen::Index dim) : dim_(dim) {}

    void add(const Vector& x, double y);
    void add(const Vector& z, double p, double y) { add(make_covariate(z, p), y); }

    Eigen::Index size() const { return n_; }
    Eigen::Index dim() const { return dim_; }
    bool empty() const { return n_ == 0; }

    auto xs() const { return x_.topRows(n_); }
    auto ys() const { return y_.head(n_); }

private:
    Eigen::Index dim_ = 0;
    Eigen::Index n_ = 0;
    Matrix x_;
    Vector y_;
};

double log_likelihood(const GlmFamily& family, const Vector& theta, const Dataset& data);

// gradient g(theta) = sum [y_i - psi'(x_i'theta)] x_i
Vector log_likelihood_gradient(const GlmFamily& family, const Vector& theta, const Dataset& data);

// Hessian H(theta) = -sum psi''(x_i'theta) x_i x_i'
Matrix log_likelihood_hessian(const GlmFamily& family, const Vector& theta, const Dataset& data);

// Maximizer of L(theta) - (ridge/2)||theta||^2 by damped Newton from zero.
// ridge == 0 requires a numerically full-rank design (throws
// SingularMatrixError otherwise); non-convergence within 100 iterations
// throws ConvergenceError carrying the last iterate.
ModelParams fit_mle(const GlmFamily& family, const Dataset& data, double ridge);

// Incremental solver for policies that refit on a growing dataset. Warm
// starts from the previous solution and reuses the factored Hessian until
// progress stalls; the result satisfies the same gradient tolerance as
// fit_mle.
class MleSolver {
public:
    MleSolver(GlmFamily family, double ridge) : family_(family), ridge_(ridge) {}

    const Vector& fit(const Dataset& data);
    bool has_fit() const { return has_fit_; }
    const Vector& last() const { return theta_; }
    void reset() { has_fit_ = false; hessian_valid_ = false; rank_checked_ = false; }

private:
    GlmFamily family_;
    double ridge_;
    Vector theta_;
    bool has_fit_ = false;
    bool rank_checked_ = false;
    Eigen::LDLT<Matrix> ldlt_;
    bool hessian_valid_ = false;
    Eigen::Index rows_at_hessian_ = 0;
};

// Accumulated V = ridge*I + sum x x' with the inverse maintained by
// rank-one updates (refreshed by a full factorization every 512 updates).
class DesignMatrix {
public:
    DesignMatrix(Eigen::Index dim, double ridge);

    void update(const Vector& x);

    const Matrix& value() const { return v_; }
    const Matrix& inverse() const;  // throws SingularMatrixError if V is singular
    Eigen::Index dim() const { return dim_; }
    long count() const { return count_; }
    double ridge() const { return ridge_; }

private:
    void refresh() const;

    Eigen::Index dim_;
    double ridge_;
    Matrix v_;
    mutable Matrix v_inv_;
    mutable bool inv_valid_;
    long count_ = 0;
    int updates_since_refresh_ = 0;
};

// sqrt(x' V^{-1} x)
double mahalanobis_norm(const Vector& x, const DesignMatrix& dm);

}  // namespace pricesim

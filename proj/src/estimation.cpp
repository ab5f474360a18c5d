#include "pricesim/estimation.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace pricesim {

namespace {

constexpr double kGradTol = 1e-10;
constexpr int kMaxNewtonIters = 100;
constexpr double kRankTol = 1e-10;  // relative smallest-eigenvalue threshold
constexpr int kInverseRefreshStride = 512;

// psi'(a) vectorized per family
Vector link_mean(const GlmFamily& family, const Vector& a) {
    switch (family.kind) {
        case GlmKind::gaussian:
            return a;
        case GlmKind::logistic:
            return (1.0 + (-a.array()).exp()).inverse().matrix();
        case GlmKind::poisson:
            return a.array().exp().matrix();
    }
    throw std::invalid_argument("link_mean: unknown family");
}

Vector link_variance(const GlmFamily& family, const Vector& a) {
    switch (family.kind) {
        case GlmKind::gaussian:
            return Vector::Ones(a.size());
        case GlmKind::logistic: {
            Vector s = link_mean(family, a);
            return (s.array() * (1.0 - s.array())).matrix();
        }
        case GlmKind::poisson:
            return a.array().exp().matrix();
    }
    throw std::invalid_argument("link_variance: unknown family");
}

// sum psi(a_i) and psi'(a), one vectorized sweep
double psi_sum_and_mean(const GlmFamily& family, const Vector& a, Vector& mean_out) {
    switch (family.kind) {
        case GlmKind::gaussian:
            mean_out = a;
            return 0.5 * a.squaredNorm();
        case GlmKind::logistic: {
            // log(1+e^a) = max(a,0) + log1p(exp(-|a|))
            const auto arr = a.array();
            Vector e = (-arr.abs()).exp().matrix();
            const double s = arr.cwiseMax(0.0).sum() + e.array().log1p().sum();
            mean_out = (1.0 + (-arr).exp()).inverse().matrix();
            return s;
        }
        case GlmKind::poisson: {
            mean_out = a.array().exp().matrix();
            return mean_out.sum();
        }
    }
    throw std::invalid_argument("psi_sum_and_mean: unknown family");
}

struct ObjGrad {
    double value;
    Vector gradient;
};

// objective and gradient in one pass over the data
ObjGrad eval_objective(const GlmFamily& family, const Vector& theta, const Dataset& data,
                       double ridge) {
    const Vector a = data.xs() * theta;
    Vector mu;
    const double psi = psi_sum_and_mean(family, a, mu);
    ObjGrad out;
    out.value = data.ys().dot(a) - psi;
    out.gradient = data.xs().transpose() * (data.ys() - mu);
    if (ridge > 0.0) {
        out.value -= 0.5 * ridge * theta.squaredNorm();
        out.gradient -= ridge * theta;
    }
    return out;
}

void check_rank(const Dataset& data) {
    const Matrix v = data.xs().transpose() * data.xs();
    Eigen::SelfAdjointEigenSolver<Matrix> es(v, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev(0) <= kRankTol * ev(ev.size() - 1) || ev(ev.size() - 1) <= 0.0)
        throw SingularMatrixError("fit_mle: design matrix is numerically rank deficient");
}

// Damped Newton core shared by fit_mle and MleSolver. When reuse_factor is
// true the caller supplies a previously factored Hessian which is refreshed
// only on stalls; otherwise the Hessian is refactored every iteration.
// Accepted line-search candidates carry their gradient, so a typical
// warm-started refit costs two data passes.
Vector newton_solve(const GlmFamily& family, const Dataset& data, double ridge, Vector theta,
                    Eigen::LDLT<Matrix>* cached, bool reuse_factor) {
    Eigen::LDLT<Matrix> local;
    Eigen::LDLT<Matrix>& ldlt = cached ? *cached : local;
    bool factored = reuse_factor && cached;

    ObjGrad cur = eval_objective(family, theta, data, ridge);
    int steps_since_factor = 0;

    for (int iter = 0; iter < kMaxNewtonIters; ++iter) {
        if (cur.gradient.lpNorm<Eigen::Infinity>() < kGradTol) return theta;
        if (!factored || steps_since_factor >= 3) {
            const Vector a = data.xs() * theta;
            const Vector w = link_variance(family, a);
            Matrix h = data.xs().transpose() * w.asDiagonal() * data.xs();
            if (ridge > 0.0) h.diagonal().array() += ridge;
            ldlt.compute(h);
            factored = true;
            steps_since_factor = 0;
        }
        const Vector dir = ldlt.solve(cur.gradient);
        double step = 1.0;
        bool moved = false;
        for (int half = 0; half < 60; ++half) {
            const Vector cand = theta + step * dir;
            ObjGrad cand_eval = eval_objective(family, cand, data, ridge);
            if (std::isfinite(cand_eval.value) &&
                cand_eval.value >= cur.value - 1e-10 * (1.0 + std::abs(cur.value))) {
                theta = cand;
                cur = std::move(cand_eval);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        ++steps_since_factor;
        if (!moved) {
            // force a fresh factorization before giving up
            if (steps_since_factor > 1) {
                steps_since_factor = 3;
                continue;
            }
            throw ConvergenceError("fit_mle: line search failed", theta);
        }
    }
    if (cur.gradient.lpNorm<Eigen::Infinity>() < kGradTol) return theta;
    throw ConvergenceError("fit_mle: no convergence in 100 iterations", theta);
}

}  // namespace

void Dataset::add(const Vector& x, double y) {
    if (dim_ == 0) dim_ = x.size();
    if (x.size() != dim_) throw std::invalid_argument("Dataset: inconsistent row length");
    if (n_ == x_.rows()) {
        const Eigen::Index cap = std::max<Eigen::Index>(64, 2 * x_.rows());
        x_.conservativeResize(cap, dim_);
        y_.conservativeResize(cap);
    }
    x_.row(n_) = x.transpose();
    y_(n_) = y;
    ++n_;
}

double log_likelihood(const GlmFamily& family, const Vector& theta, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("log_likelihood: empty dataset");
    if (theta.size() != data.dim()) throw std::invalid_argument("log_likelihood: dimension mismatch");
    return eval_objective(family, theta, data, 0.0).value;
}

Vector log_likelihood_gradient(const GlmFamily& family, const Vector& theta, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("log_likelihood: empty dataset");
    return eval_objective(family, theta, data, 0.0).gradient;
}

Matrix log_likelihood_hessian(const GlmFamily& family, const Vector& theta, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("log_likelihood: empty dataset");
    const Vector a = data.xs() * theta;
    const Vector w = link_variance(family, a);
    return -(data.xs().transpose() * w.asDiagonal() * data.xs());
}

ModelParams fit_mle(const GlmFamily& family, const Dataset& data, double ridge) {
    if (data.empty()) throw std::invalid_argument("fit_mle: empty dataset");
    if (ridge == 0.0) check_rank(data);
    Vector theta = newton_solve(family, data, ridge, Vector::Zero(data.dim()), nullptr, false);
    return ModelParams::from_stacked(theta);
}

const Vector& MleSolver::fit(const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("MleSolver: empty dataset");
    // V = sum x x' only gains mass as data grows, so a once-passed rank
    // check stays valid for later refits
    if (ridge_ == 0.0 && !rank_checked_) {
        check_rank(data);
        rank_checked_ = true;
    }
    Vector start = has_fit_ ? theta_ : Vector::Zero(data.dim());
    // the curvature scales with the row count, so a factorization is stale
    // once the data has grown by more than a quarter
    const bool reuse = hessian_valid_ && has_fit_ &&
                       data.size() <= rows_at_hessian_ + std::max<Eigen::Index>(
                                          16, rows_at_hessian_ / 4);
    theta_ = newton_solve(family_, data, ridge_, std::move(start), &ldlt_, reuse);
    if (!reuse) rows_at_hessian_ = data.size();
    hessian_valid_ = true;
    has_fit_ = true;
    return theta_;
}

DesignMatrix::DesignMatrix(Eigen::Index dim, double ridge) : dim_(dim), ridge_(ridge) {
    if (ridge < 0.0) throw std::invalid_argument("DesignMatrix: ridge must be nonnegative");
    v_ = ridge * Matrix::Identity(dim, dim);
    if (ridge > 0.0) {
        v_inv_ = Matrix::Identity(dim, dim) / ridge;
        inv_valid_ = true;
    } else {
        v_inv_ = Matrix::Zero(dim, dim);
        inv_valid_ = false;
    }
}

void DesignMatrix::update(const Vector& x) {
    if (x.size() != dim_) throw std::invalid_argument("DesignMatrix: dimension mismatch");
    v_.selfadjointView<Eigen::Lower>().rankUpdate(x);
    v_.triangularView<Eigen::StrictlyUpper>() = v_.transpose();
    ++count_;
    if (inv_valid_) {
        const Vector vx = v_inv_ * x;
        const double denom = 1.0 + x.dot(vx);
        v_inv_.noalias() -= (vx * vx.transpose()) / denom;
        if (++updates_since_refresh_ >= kInverseRefreshStride) {
            refresh();
            updates_since_refresh_ = 0;
        }
    }
}

void DesignMatrix::refresh() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(v_, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev(0) <= kRankTol * ev(ev.size() - 1) || ev(ev.size() - 1) <= 0.0)
        throw SingularMatrixError("DesignMatrix: singular");
    v_inv_ = v_.ldlt().solve(Matrix::Identity(dim_, dim_));
    inv_valid_ = true;
}

const Matrix& DesignMatrix::inverse() const {
    if (!inv_valid_) refresh();
    return v_inv_;
}

double mahalanobis_norm(const Vector& x, const DesignMatrix& dm) {
    if (x.size() != dm.dim()) throw std::invalid_argument("mahalanobis_norm: dimension mismatch");
    const double q = x.dot(dm.inverse() * x);
    return std::sqrt(q > 0.0 ? q : 0.0);
}

}  // namespace pricesim

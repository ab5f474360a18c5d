#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "pricesim/estimation.hpp"

#include <cmath>

using namespace pricesim;

namespace {

const GlmFamily kGaussian{GlmKind::gaussian, 1.0};
const GlmFamily kLogistic{GlmKind::logistic, 1.0};

Dataset two_point_gaussian() {
    Dataset d(2);
    d.add((Vector(2) << 1.0, 0.0).finished(), 2.0);
    d.add((Vector(2) << 0.0, 1.0).finished(), -1.0);
    return d;
}

// six-record d=1 pricing sample; x = (z, -p z) with z = 1
Dataset six_point_logistic() {
    Dataset d(2);
    const double prices[6] = {0.2, 0.7, 1.2, 1.8, 2.3, 2.9};
    const double ys[6] = {1.0, 1.0, 1.0, 0.0, 1.0, 0.0};
    for (int i = 0; i < 6; ++i) d.add((Vector(2) << 1.0, -prices[i]).finished(), ys[i]);
    return d;
}

}  // namespace

TEST_CASE("log likelihood closed-form values") {
    Dataset d(2);
    d.add((Vector(2) << 1.0, 0.0).finished(), 0.0);
    CHECK(log_likelihood(kGaussian, Vector::Zero(2), d) == doctest::Approx(0.0));
    CHECK(log_likelihood(kLogistic, Vector::Zero(2), d) == doctest::Approx(-std::log(2.0)));
    Dataset one(2);
    one.add((Vector(2) << 1.0, 0.0).finished(), 1.0);
    CHECK(log_likelihood(kLogistic, Vector::Zero(2), one) == doctest::Approx(-std::log(2.0)));
    CHECK_THROWS_AS(log_likelihood(kLogistic, Vector::Zero(2), Dataset(2)), std::invalid_argument);
}

TEST_CASE("gradient matches central finite differences") {
    Rng rng(17);
    Dataset d(4);
    for (int i = 0; i < 40; ++i) {
        Vector x = rng.gaussian_vector(4) * 0.5;
        d.add(x, rng.bernoulli(0.5) ? 1.0 : 0.0);
    }
    for (const auto& fam : {kGaussian, kLogistic}) {
        const Vector theta = rng.gaussian_vector(4) * 0.3;
        const Vector g = log_likelihood_gradient(fam, theta, d);
        for (int j = 0; j < 4; ++j) {
            const double fd = oracles::central_diff(
                [&](double t) {
                    Vector th = theta;
                    th(j) = t;
                    return log_likelihood(fam, th, d);
                },
                theta(j));
            CHECK(std::abs(fd - g(j)) / std::max(1.0, std::abs(g(j))) < 1e-6);
        }
    }
}

TEST_CASE("hessian matches finite differences of the gradient") {
    Rng rng(23);
    Dataset d(3);
    for (int i = 0; i < 25; ++i) d.add(rng.gaussian_vector(3) * 0.5, rng.uniform(0.0, 1.0));
    const Vector theta = rng.gaussian_vector(3) * 0.2;
    const Matrix h = log_likelihood_hessian(kLogistic, theta, d);
    for (int j = 0; j < 3; ++j) {
        const Vector col_fd = [&] {
            const double hstep = 1e-5;
            Vector tp = theta, tm = theta;
            tp(j) += hstep;
            tm(j) -= hstep;
            return Vector(((log_likelihood_gradient(kLogistic, tp, d) -
                            log_likelihood_gradient(kLogistic, tm, d)) /
                           (2.0 * hstep)));
        }();
        for (int i = 0; i < 3; ++i) CHECK(std::abs(col_fd(i) - h(i, j)) < 1e-5);
    }
}

TEST_CASE("log likelihood is concave along random segments") {
    Rng rng(29);
    Dataset d(3);
    for (int i = 0; i < 30; ++i) d.add(rng.gaussian_vector(3), rng.bernoulli(0.6) ? 1.0 : 0.0);
    for (int rep = 0; rep < 50; ++rep) {
        const Vector a = rng.gaussian_vector(3);
        const Vector b = rng.gaussian_vector(3);
        const double mid = log_likelihood(kLogistic, 0.5 * (a + b), d);
        const double avg = 0.5 * (log_likelihood(kLogistic, a, d) + log_likelihood(kLogistic, b, d));
        CHECK(mid >= avg - 1e-9);
    }
}

TEST_CASE("fit_mle: noiseless linear system is exact") {
    const ModelParams fit = fit_mle(kGaussian, two_point_gaussian(), 0.0);
    CHECK(fit.alpha(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(fit.beta(0) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("fit_mle: logistic matches a brute-force grid maximizer") {
    const Dataset d = six_point_logistic();
    const ModelParams fit = fit_mle(kLogistic, d, 0.0);
    const auto [a, b] = oracles::grid_argmax_2d(
        [&](double t0, double t1) {
            return log_likelihood(kLogistic, (Vector(2) << t0, t1).finished(), d);
        },
        -5.0, 5.0, 1e-4);
    CHECK(std::abs(fit.alpha(0) - a) < 1e-3);
    CHECK(std::abs(fit.beta(0) - b) < 1e-3);
}

TEST_CASE("fit_mle: gradient at the optimum is tiny") {
    const Dataset d = six_point_logistic();
    for (double ridge : {0.0, 1.0}) {
        const ModelParams fit = fit_mle(kLogistic, d, ridge);
        Vector g = log_likelihood_gradient(kLogistic, fit.stacked(), d);
        if (ridge > 0.0) g -= ridge * fit.stacked();
        CHECK(g.lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("fit_mle: symmetric signal-free data with ridge lands at zero") {
    Dataset d(2);
    // y always the null-model mean 0.5; x symmetric under negation
    d.add((Vector(2) << 1.0, 0.5).finished(), 0.5);
    d.add((Vector(2) << -1.0, -0.5).finished(), 0.5);
    d.add((Vector(2) << 0.5, -1.0).finished(), 0.5);
    d.add((Vector(2) << -0.5, 1.0).finished(), 0.5);
    const ModelParams fit = fit_mle(kLogistic, d, 1.0);
    CHECK(fit.stacked().norm() < 1e-8);
}

TEST_CASE("fit_mle: rank-deficient data raises without ridge, works with ridge") {
    Dataset d(2);
    d.add((Vector(2) << 1.0, 0.0).finished(), 1.0);
    d.add((Vector(2) << 2.0, 0.0).finished(), 0.0);
    CHECK_THROWS_AS(fit_mle(kLogistic, d, 0.0), SingularMatrixError);
    CHECK_NOTHROW(fit_mle(kLogistic, d, 1.0));

    Dataset single(2);
    single.add((Vector(2) << 0.7, -0.3).finished(), 1.0);
    const ModelParams fit = fit_mle(kLogistic, single, 1.0);
    CHECK(fit.stacked().allFinite());
}

TEST_CASE("fit_mle: separable logistic data either converges far out or reports the iterate") {
    // no finite maximizer exists; the gradient still vanishes along the
    // separating direction, so a huge finite iterate is the expected outcome
    Dataset d(2);
    d.add((Vector(2) << 1.0, -0.5).finished(), 1.0);
    d.add((Vector(2) << -1.0, 0.5).finished(), 0.0);
    d.add((Vector(2) << 0.5, -1.0).finished(), 1.0);
    try {
        const ModelParams fit = fit_mle(kLogistic, d, 0.0);
        CHECK(fit.stacked().allFinite());
        CHECK(fit.stacked().norm() > 5.0);
        CHECK(log_likelihood_gradient(kLogistic, fit.stacked(), d).lpNorm<Eigen::Infinity>() <
              1e-10);
    } catch (const ConvergenceError& e) {
        CHECK(e.last_iterate.size() == 2);
        CHECK(e.last_iterate.allFinite());
    }
    // ridge restores a unique finite optimum
    const ModelParams ridged = fit_mle(kLogistic, d, 1.0);
    CHECK(ridged.stacked().norm() < 5.0);
}

TEST_CASE("MleSolver warm refits agree with fresh fits") {
    Rng rng(31);
    Dataset d(4);
    MleSolver solver(kLogistic, 0.0);
    const ModelParams truth{(Vector(2) << 0.8, 0.4).finished(), (Vector(2) << 0.5, 0.2).finished()};
    Vector warm, fresh;
    for (int i = 0; i < 400; ++i) {
        Vector z(2);
        z << rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0);
        const double p = rng.uniform(0.0, 3.0);
        Rng demand_rng(100 + i);
        const double y = sample_demand(kLogistic, z, p, truth, demand_rng);
        d.add(z, p, y);
        if (i >= 30 && i % 57 == 0) {
            warm = solver.fit(d);
            fresh = fit_mle(kLogistic, d, 0.0).stacked();
            CHECK((warm - fresh).lpNorm<Eigen::Infinity>() < 1e-7);
        }
    }
}

TEST_CASE("squared estimation error shrinks with sample size") {
    // uniform-price logistic pricing data, error at tau=8000 vs tau=2000
    const int d = 2;
    const double inv = 1.0 / std::sqrt(static_cast<double>(d));
    const ModelParams truth{Vector::Constant(d, 1.6 * inv), Vector::Constant(d, inv)};
    double err_small = 0.0, err_large = 0.0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(1000 + s);
        Dataset data(2 * d);
        double e2000 = 0.0, e8000 = 0.0;
        for (int t = 1; t <= 8000; ++t) {
            Vector z(d);
            for (int i = 0; i < d; ++i) z(i) = rng.uniform(inv, 2.0 * inv);
            const double p = rng.uniform(0.0, 3.0);
            data.add(z, p, sample_demand(kLogistic, z, p, truth, rng));
            if (t == 2000) e2000 = (fit_mle(kLogistic, data, 0.0).stacked() - truth.stacked()).squaredNorm();
            if (t == 8000) e8000 = (fit_mle(kLogistic, data, 0.0).stacked() - truth.stacked()).squaredNorm();
        }
        err_small += e8000;
        err_large += e2000;
    }
    CHECK(err_small / seeds <= 0.7 * (err_large / seeds));
}

TEST_CASE("design matrix: identity and scaling cases") {
    DesignMatrix dm(2, 1.0);
    const Vector x = (Vector(2) << 3.0, 4.0).finished();
    CHECK(mahalanobis_norm(x, dm) == doctest::Approx(5.0));

    DesignMatrix dm4(2, 4.0);
    CHECK(mahalanobis_norm(x, dm4) == doctest::Approx(2.5));
}

TEST_CASE("design matrix: rank-one update values") {
    DesignMatrix dm(2, 1.0);
    dm.update((Vector(2) << 1.0, 0.0).finished());
    CHECK(dm.value()(0, 0) == doctest::Approx(2.0));
    CHECK(dm.value()(0, 1) == doctest::Approx(0.0));
    CHECK(dm.value()(1, 1) == doctest::Approx(1.0));
    CHECK(dm.count() == 1);

    const Matrix before = dm.value();
    dm.update(Vector::Zero(2));
    CHECK((dm.value() - before).norm() == doctest::Approx(0.0));
}

TEST_CASE("design matrix: maintained inverse tracks dense inversion") {
    Rng rng(37);
    DesignMatrix dm(4, 1.0);
    Matrix direct = Matrix::Identity(4, 4);
    for (int i = 0; i < 100; ++i) {
        const Vector x = rng.gaussian_vector(4);
        dm.update(x);
        direct += x * x.transpose();
    }
    const Matrix inv_direct = direct.ldlt().solve(Matrix::Identity(4, 4));
    CHECK((dm.inverse() - inv_direct).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((dm.value() * dm.inverse() - Matrix::Identity(4, 4)).lpNorm<Eigen::Infinity>() < 1e-8);

    const Vector probe = rng.gaussian_vector(4);
    const double direct_norm = std::sqrt(probe.dot(inv_direct * probe));
    CHECK(mahalanobis_norm(probe, dm) == doctest::Approx(direct_norm).epsilon(1e-8));
}

TEST_CASE("design matrix: singular without ridge raises on inverse") {
    DesignMatrix dm(3, 0.0);
    dm.update((Vector(3) << 1.0, 0.0, 0.0).finished());
    CHECK_THROWS_AS(mahalanobis_norm(Vector::Ones(3), dm), SingularMatrixError);
}

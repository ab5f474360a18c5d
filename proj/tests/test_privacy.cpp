#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "pricesim/privacy.hpp"

#include <cmath>

using namespace pricesim;

TEST_CASE("gradient truncation") {
    const Vector inside = (Vector(2) << 1.0, 1.0).finished();
    CHECK((truncate_gradient(inside, 10.0) - inside).norm() == doctest::Approx(0.0));

    const Vector g = (Vector(2) << 3.0, 4.0).finished();
    const Vector t = truncate_gradient(g, 2.5);
    CHECK(t(0) == doctest::Approx(1.5));
    CHECK(t(1) == doctest::Approx(2.0));

    CHECK(truncate_gradient(Vector::Zero(3), 1.0).norm() == doctest::Approx(0.0));
}

TEST_CASE("truncation is idempotent") {
    Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        const Vector g = rng.gaussian_vector(5) * rng.uniform(0.1, 10.0);
        const double c = rng.uniform(0.05, 5.0);
        const Vector once = truncate_gradient(g, c);
        const Vector twice = truncate_gradient(once, c);
        CHECK((once - twice).lpNorm<Eigen::Infinity>() < 1e-15);
        CHECK(once.norm() <= c * (1.0 + 1e-12));
    }
}

TEST_CASE("sphere radius factor") {
    // frozen from high-precision evaluation of the closed form
    CHECK(r_eps_d(1.0, 1) == doctest::Approx(3.3991300737).epsilon(1e-9));
    CHECK(r_eps_d(1.0, 2) == doctest::Approx(5.0986951105).epsilon(1e-9));
    // decreasing in epsilon for a fixed dimension
    double prev = r_eps_d(0.25, 4);
    for (double eps : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double cur = r_eps_d(eps, 4);
        CHECK(cur < prev);
        prev = cur;
    }
    // log-gamma evaluation survives large dimensions
    CHECK(std::isfinite(r_eps_d(1.0, 4000)));
    CHECK(r_eps_d(1.0, 4000) > 0.0);
    CHECK_THROWS_AS(r_eps_d(0.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(r_eps_d(1.0, 0), std::invalid_argument);
}

TEST_CASE("l2 ball: output norm is exact for every draw") {
    Rng rng(43);
    for (int rep = 0; rep < 50; ++rep) {
        const int dim = 2 + static_cast<int>(rng.index(6));
        const double c_g = rng.uniform(0.2, 4.0);
        const double eps = rng.uniform(0.2, 3.0);
        Vector g = rng.gaussian_vector(dim);
        g = truncate_gradient(g * rng.uniform(0.0, 2.0), c_g);
        const PrivatizedVector w = l2_ball(g, c_g, eps, rng);
        const double want = l2_ball_radius(c_g, eps, dim);
        CHECK(std::abs(w.w.norm() - want) / want < 1e-12);
        CHECK(w.mechanism == Mechanism::l2ball);
    }
    // on gradients in R^{2d} the radius is the closed form at d
    CHECK(l2_ball_radius(1.0, 1.0, 4) == doctest::Approx(r_eps_d(1.0, 2)).epsilon(1e-15));
}

TEST_CASE("l2 ball: rejects oversized inputs") {
    Rng rng(44);
    const Vector g = (Vector(2) << 3.0, 4.0).finished();
    CHECK_THROWS_AS(l2_ball(g, 1.0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("l2 ball: zero vector gives a centered sphere draw") {
    Rng rng(45);
    const int n = 100000;
    const int dim = 3;
    Vector sum = Vector::Zero(dim);
    const double radius = l2_ball_radius(1.5, 0.8, dim);
    for (int i = 0; i < n; ++i) sum += l2_ball(Vector::Zero(dim), 1.5, 0.8, rng).w;
    // coordinate s.e. is radius/sqrt(3n)
    const double se = radius / std::sqrt(3.0 * n);
    for (int j = 0; j < dim; ++j) CHECK(std::abs(sum(j) / n) < 4.0 * se);
}

TEST_CASE("l2 ball: unbiased for a fixed input") {
    Rng rng(46);
    const Vector g = (Vector(2) << 0.6, 0.0).finished();
    const double c_g = 1.0, eps = 1.0;
    const int n = 200000;
    Vector sum = Vector::Zero(2);
    std::vector<double> coord0(n);
    for (int i = 0; i < n; ++i) {
        const Vector w = l2_ball(g, c_g, eps, rng).w;
        sum += w;
        coord0[static_cast<size_t>(i)] = w(0);
    }
    const Vector mean = sum / n;
    const double se0 = oracles::sample_sd(coord0) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean(0) - 0.6) < 4.0 * se0);
    // second coordinate is symmetric around zero with a comparable spread
    CHECK(std::abs(mean(1)) < 4.0 * se0 * 1.5);
}

TEST_CASE("l2 ball: favored-hemisphere frequency conditioned on the sign coin") {
    Rng rng(47);
    const Vector g = (Vector(3) << 0.3, -0.2, 0.1).finished();
    const double c_g = 0.8, eps = 1.3;
    const double want = std::exp(eps) / (1.0 + std::exp(eps));
    long b1 = 0, b1_front = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const L2BallDraw draw = l2_ball_draw(g, c_g, eps, rng);
        if (!draw.b) continue;
        ++b1;
        if (draw.w.dot(g) > 0.0) ++b1_front;
    }
    const double frac = static_cast<double>(b1_front) / b1;
    const double se = std::sqrt(want * (1.0 - want) / b1);
    CHECK(std::abs(frac - want) < 4.0 * se);
}

TEST_CASE("gaussian mechanism: calibrated variance") {
    CHECK(std::pow(gaussian_mechanism_sigma(1.0, 1.0, 0.05), 2) ==
          doctest::Approx(6.4377516497).epsilon(1e-9));
    // delta = 1.25 e^{-2} makes ln(1.25/delta) = 2
    CHECK(std::pow(gaussian_mechanism_sigma(1.0, 1.0, 1.25 * std::exp(-2.0)), 2) ==
          doctest::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(gaussian_mechanism_sigma(1.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_mechanism_sigma(1.0, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("gaussian mechanism: sample mean and variance") {
    Rng rng(48);
    const Vector g = (Vector(2) << 0.4, -0.3).finished();
    const double c_g = 1.0, eps = 1.0, delta = 0.05;
    const double sigma2 = std::pow(gaussian_mechanism_sigma(c_g, eps, delta), 2);
    const int n = 100000;
    std::vector<double> c0(n), c1(n);
    for (int i = 0; i < n; ++i) {
        const Vector w = gaussian_mechanism(g, c_g, eps, delta, rng).w;
        c0[static_cast<size_t>(i)] = w(0);
        c1[static_cast<size_t>(i)] = w(1);
    }
    CHECK(oracles::mean(c0) == doctest::Approx(0.4).epsilon(0.05));
    CHECK(oracles::mean(c1) == doctest::Approx(-0.3).epsilon(0.08));
    const double v0 = std::pow(oracles::sample_sd(c0), 2);
    const double v1 = std::pow(oracles::sample_sd(c1), 2);
    CHECK(std::abs(v0 - sigma2) / sigma2 < 0.05);
    CHECK(std::abs(v1 - sigma2) / sigma2 < 0.05);
}

TEST_CASE("privacy params validate") {
    PrivacyParams ok{1.0, std::nullopt};
    CHECK_NOTHROW(ok.validate());
    PrivacyParams bad_eps{0.0, std::nullopt};
    CHECK_THROWS_AS(bad_eps.validate(), std::invalid_argument);
    PrivacyParams bad_delta{1.0, 1.5};
    CHECK_THROWS_AS(bad_delta.validate(), std::invalid_argument);
}

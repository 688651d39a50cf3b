#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "sem/errors.hpp"
#include "sem/grid.hpp"
#include "sem/smoothing.hpp"
#include "sem/systems.hpp"

using namespace sem;

namespace {

Eigen::VectorXd even_times(int n, double horizon) { return make_grid(n, horizon).times; }

}  // namespace

TEST_CASE("affine signals are reproduced at any penalty") {
    auto t = even_times(50, 2.0);
    Eigen::VectorXd y = 2.0 * t.array() + 1.0;
    for (double nu : {1e-6, 1e-2, 10.0}) {
        auto fit = fit_smoother(t, y, 2, nu);
        CHECK(fit.value(0.77) == doctest::Approx(2.0 * 0.77 + 1.0).epsilon(1e-8));
        CHECK(fit.derivative(1.3, 1) == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(fit.derivative(1.3, 2) == doctest::Approx(0.0).epsilon(1e-8));
    }
}

TEST_CASE("huge penalty with q = 1 flattens to the mean") {
    auto t = even_times(60, 1.0);
    Eigen::VectorXd y = (4.0 * t.array()).sin() + 0.5;
    auto fit = fit_smoother(t, y, 1, 1e10);
    const double mean = y.mean();
    for (double tt : {0.1, 0.5, 0.9})
        CHECK(fit.value(tt) == doctest::Approx(mean).epsilon(1e-4));
}

TEST_CASE("near-interpolation of a noiseless cubic") {
    auto t = even_times(200, 1.0);
    Eigen::VectorXd y = t.array().cube();
    auto fit = fit_smoother(t, y, 2, 1e-10);
    double worst = 0.0;
    for (int j = 0; j < t.size(); ++j) worst = std::max(worst, std::abs(fit.value(t[j]) - y[j]));
    CHECK(worst < 1e-4);
}

TEST_CASE("derivative error grows with the order requested") {
    auto t = even_times(400, 6.0);
    Eigen::VectorXd y = t.array().sin();
    auto fit = fit_smoother(t, y, 3, 1e-9);

    double e0 = 0, e1 = 0, e2 = 0;
    int count = 0;
    for (double tt = 0.5; tt <= 5.5; tt += 0.05) {
        e0 += std::pow(fit.derivative(tt, 0) - std::sin(tt), 2);
        e1 += std::pow(fit.derivative(tt, 1) - std::cos(tt), 2);
        e2 += std::pow(fit.derivative(tt, 2) + std::sin(tt), 2);
        ++count;
    }
    e0 = std::sqrt(e0 / count);
    e1 = std::sqrt(e1 / count);
    e2 = std::sqrt(e2 / count);
    CHECK(e0 < e1);
    CHECK(e1 < e2);
    CHECK(e2 < 1e-2);
}

TEST_CASE("invalid smoothing inputs are rejected") {
    auto t = even_times(30, 1.0);
    Eigen::VectorXd y = t;

    CHECK_THROWS_AS(fit_smoother(t, y, 2, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(fit_smoother(t.head(3), y.head(3), 2, 1e-4), numeric_error);

    Eigen::VectorXd tdup = t;
    tdup[5] = tdup[4];
    CHECK_THROWS_AS(fit_smoother(tdup, y, 2, 1e-4), std::invalid_argument);

    auto fit = fit_smoother(t, y, 2, 1e-4);
    CHECK_NOTHROW(fit.derivative(0.5, 2));
    CHECK_THROWS_AS(fit.derivative(0.5, 3), std::invalid_argument);
}

TEST_CASE("residual sum is monotone in the penalty") {
    auto t = even_times(80, 1.0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 0.3);
    Eigen::VectorXd y(80);
    for (int j = 0; j < 80; ++j) y[j] = std::sin(6.0 * t[j]) + gauss(rng);

    double prev = -1.0;
    for (double nu : {1e-8, 1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
        auto fit = fit_smoother(t, y, 2, nu);
        CHECK(fit.rss >= prev - 1e-12);
        prev = fit.rss;
    }
}

TEST_CASE("hat matrix is a symmetric contraction consistent with the fit") {
    auto t = even_times(30, 1.0);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd y(30);
    for (int j = 0; j < 30; ++j) y[j] = gauss(rng);

    const double nu = 1e-3;
    Eigen::MatrixXd A = hat_matrix(t, 2, nu);
    REQUIRE(A.rows() == 30);
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-8);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (A + A.transpose()));
    CHECK(eig.eigenvalues().minCoeff() > -1e-8);
    CHECK(eig.eigenvalues().maxCoeff() < 1.0 + 1e-8);

    auto fit = fit_smoother(t, y, 2, nu);
    Eigen::VectorXd fitted = A * y;
    for (int j = 0; j < 30; ++j)
        CHECK(fit.value(t[j]) == doctest::Approx(fitted[j]).epsilon(1e-6));

    SUBCASE("effective degrees of freedom and score match their definitions") {
        CHECK(fit.edf == doctest::Approx(A.trace()).epsilon(1e-6));
        const double denom = 1.0 - fit.edf / 30.0;
        CHECK(fit.gcv == doctest::Approx((fit.rss / 30.0) / (denom * denom)).epsilon(1e-8));
    }
}

TEST_CASE("explicit nu grids drive the selection") {
    auto t = even_times(60, 1.0);
    Eigen::VectorXd y = (3.0 * t.array()).sin();

    auto single = gcv_select(t, y, 2, {1e-4});
    CHECK(single.fit.nu == doctest::Approx(1e-4));
    REQUIRE(single.nu_grid.size() == 1);

    auto pick = gcv_select(t, y, 2, {1e-8, 1e2});
    CHECK(pick.fit.nu == doctest::Approx(1e-8));
}

TEST_CASE("pure noise selects the heaviest smoothing") {
    auto t = even_times(50, 1.0);
    int heaviest = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(s);
        std::normal_distribution<double> gauss;
        Eigen::VectorXd y(50);
        for (int j = 0; j < 50; ++j) y[j] = gauss(rng);
        auto sel = gcv_select(t, y, 2);
        if (sel.fit.nu == sel.nu_grid.back()) ++heaviest;
    }
    CHECK(heaviest >= 90);
}

TEST_CASE("noisy sine recovery degrades with derivative order") {
    auto sys = pendulum_system();
    sys.init << 0.45, 0.3;
    auto traj = integrate(sys, make_grid(400, 20.0));
    auto obs = add_noise(traj, 0.05, 17);

    Eigen::VectorXd y = obs.values.row(0);
    auto sel = gcv_select(obs.grid.times, y, 3);

    auto exact = [&](int order, double tt) {
        int j = 0;
        while (traj.grid.times[j + 1] < tt) ++j;
        const double u =
            (tt - traj.grid.times[j]) / (traj.grid.times[j + 1] - traj.grid.times[j]);
        return (1 - u) * traj.derivatives[order](0, j) + u * traj.derivatives[order](0, j + 1);
    };

    double e0 = 0, e1 = 0, e2 = 0;
    int count = 0;
    for (double tt = 1.0; tt <= 19.0; tt += 0.1) {
        ++count;
        e0 += std::pow(sel.fit.derivative(tt, 0) - exact(0, tt), 2);
        e1 += std::pow(sel.fit.derivative(tt, 1) - exact(1, tt), 2);
        e2 += std::pow(sel.fit.derivative(tt, 2) - exact(2, tt), 2);
    }
    CHECK(e0 / count < e1 / count);
    CHECK(e1 / count < e2 / count);
}

TEST_CASE("channel sets smooth together and resample consistently") {
    OdeSystem sys = pendulum_system();
    sys.init << 0.4, -0.1;
    auto traj = integrate(sys, make_grid(150, 20.0));
    auto obs = add_noise(traj, 0.02, 4);

    auto set = smooth_observations(obs, 2);
    REQUIRE(set.channels() == 1);
    CHECK(set.horizon == doctest::Approx(20.0));

    Eigen::VectorXd probe = even_times(33, 20.0);
    Eigen::MatrixXd vals = set.resample(probe, 0);
    REQUIRE(vals.rows() == 1);
    REQUIRE(vals.cols() == 33);
    for (int j = 0; j < 33; ++j)
        CHECK(vals(0, j) == doctest::Approx(set.curves[0].value(probe[j])).epsilon(1e-12));
}

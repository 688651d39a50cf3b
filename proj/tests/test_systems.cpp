#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sem/basis.hpp"
#include "sem/errors.hpp"
#include "sem/systems.hpp"

using namespace sem;

namespace {

OdeSystem exponential_growth() {
    OdeSystem sys;
    sys.p = 1;
    sys.K = 1;
    sys.driving = {[](const Eigen::VectorXd& x, double) { return x[0]; }};
    sys.omega.resize(1, 0);
    sys.init = Eigen::VectorXd::Ones(1);
    sys.horizon = 1.0;
    return sys;
}

}  // namespace

TEST_CASE("first-order integration reproduces the exponential") {
    auto traj = integrate(exponential_growth(), make_grid(101, 1.0));
    CHECK(traj.values(0, 100) == doctest::Approx(std::exp(1.0)).epsilon(1e-10));
    CHECK(traj.values(0, 50) == doctest::Approx(std::exp(0.5)).epsilon(1e-10));

    SUBCASE("derivative slices alias the dynamics") {
        REQUIRE(traj.derivatives.size() == 2);
        CHECK((traj.derivatives[0] - traj.values).cwiseAbs().maxCoeff() == 0.0);
        CHECK((traj.derivatives[1] - traj.values).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("rk4_advance converges at fourth order") {
    auto rhs = [](const Eigen::VectorXd& z, double) { return z; };
    Eigen::VectorXd z0 = Eigen::VectorXd::Ones(1);
    const double exact = std::exp(1.0);
    const double e1 = std::abs(rk4_advance(rhs, z0, 0.0, 1.0, 8)[0] - exact);
    const double e2 = std::abs(rk4_advance(rhs, z0, 0.0, 1.0, 16)[0] - exact);
    CHECK(e2 * 12.0 < e1);
}

TEST_CASE("companion form stacks values then derivatives") {
    OdeSystem sys;
    sys.p = 1;
    sys.K = 2;
    sys.driving = {[](const Eigen::VectorXd& x, double) { return 2.0 * x[0]; }};
    sys.omega = Eigen::MatrixXd::Constant(1, 1, 0.5);
    sys.init = Eigen::VectorXd::Zero(2);
    sys.horizon = 1.0;

    Eigen::VectorXd z(2);
    z << 1.0, 3.0;
    Eigen::VectorXd dz = companion_rhs(sys, z, 0.0);
    CHECK(dz[0] == doctest::Approx(3.0));
    CHECK(dz[1] == doctest::Approx(2.0 * 1.0 - 0.5 * 3.0));
}

TEST_CASE("pendulum stays at the equilibrium") {
    auto sys = pendulum_system();
    sys.init = Eigen::VectorXd::Zero(2);
    auto traj = integrate(sys, make_grid(101, 20.0));
    CHECK(traj.values.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("pendulum conserves energy") {
    auto sys = pendulum_system();
    sys.init << 0.4, -0.2;
    auto traj = integrate(sys, make_grid(2001, 20.0));
    const double e0 = 0.5 * 0.2 * 0.2 + 1.0 - std::cos(0.4);
    for (int j = 0; j < 2001; j += 40) {
        const double x = traj.values(0, j), v = traj.derivatives[1](0, j);
        CHECK(0.5 * v * v + 1.0 - std::cos(x) == doctest::Approx(e0).epsilon(1e-6));
    }
}

TEST_CASE("pendulum driving and reference coefficients") {
    auto sys = pendulum_system();
    REQUIRE(sys.p == 1);
    REQUIRE(sys.K == 2);
    Eigen::VectorXd x(1);
    x << M_PI / 2;
    CHECK(sys.driving[0](x, 0.0) == doctest::Approx(-1.0));
    x << 0.0;
    CHECK(sys.driving[0](x, 0.0) == doctest::Approx(0.0));
    x << 0.3;
    Eigen::VectorXd mx = -x;
    CHECK(sys.driving[0](x, 0.0) == doctest::Approx(-sys.driving[0](mx, 0.0)));

    REQUIRE(sys.true_theta.has_value());
    auto lib = poly_trig_library(1, 4, true);
    REQUIRE(sys.true_theta->cols() == 1 + lib.size());
    int sin_col = -1;
    for (int d = 0; d < lib.size(); ++d)
        if (lib.features[d].kind == FeatureKind::Sine) sin_col = d;
    REQUIRE(sin_col >= 0);
    for (int c = 0; c < sys.true_theta->cols(); ++c)
        CHECK((*sys.true_theta)(0, c) == doctest::Approx(c == 1 + sin_col ? -1.0 : 0.0));
}

TEST_CASE("pendulum initial draw is inside the half-unit box and seeded") {
    auto a = pendulum_random_init(7);
    auto b = pendulum_random_init(7);
    auto c = pendulum_random_init(8);
    REQUIRE(a.size() == 2);
    CHECK((a - b).norm() == 0.0);
    CHECK((a - c).norm() > 0.0);
    CHECK(a.cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("oscillator network matches its published parameters") {
    auto sys = ddm_system();
    REQUIRE(sys.p == 40);
    REQUIRE(sys.K == 2);
    CHECK(sys.horizon == doctest::Approx(5.0));

    SUBCASE("initial conditions") {
        CHECK(sys.init[0] == doctest::Approx(1.0));
        CHECK(sys.init[19] == doctest::Approx(0.5));
        CHECK(sys.init[20] == doctest::Approx(1.5));
        CHECK(sys.init[39] == doctest::Approx(1.0));
        CHECK(sys.init[40 + 0] == doctest::Approx(-2.0));
        CHECK(sys.init[40 + 1] == doctest::Approx(-1.0));
        CHECK(sys.init[40 + 20] == doctest::Approx(-1.5));
        CHECK(sys.init[40 + 39] == doctest::Approx(-1.5 + 2.0));
    }

    SUBCASE("driving terms carry self and neighbor couplings") {
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(40);
        e1[0] = 1.0;
        CHECK(sys.driving[0](e1, 0.0) == doctest::Approx(-4.0));
        Eigen::VectorXd e2 = Eigen::VectorXd::Zero(40);
        e2[1] = 1.0;
        CHECK(sys.driving[0](e2, 0.0) == doctest::Approx(-1.2));
        Eigen::VectorXd e21 = Eigen::VectorXd::Zero(40);
        e21[20] = 1.0;
        CHECK(sys.driving[20](e21, 0.0) == doctest::Approx(-3.5));
        Eigen::VectorXd e22 = Eigen::VectorXd::Zero(40);
        e22[21] = 1.0;
        CHECK(sys.driving[20](e22, 0.0) == doctest::Approx(-2.0));
        CHECK(sys.driving[1](e1, 0.0) == doctest::Approx(0.0));
    }

    SUBCASE("velocity coefficients damp rather than amplify") {
        CHECK(sys.omega(0, 0) == doctest::Approx(1.3));
        CHECK(sys.omega(19, 0) == doctest::Approx(1.3));
        CHECK(sys.omega(20, 0) == doctest::Approx(2.0));
        CHECK(sys.omega(39, 0) == doctest::Approx(2.0));

        auto traj = integrate(sys, make_grid(501, 5.0));
        CHECK(traj.values.rightCols(1).cwiseAbs().maxCoeff() <
              traj.values.leftCols(1).cwiseAbs().maxCoeff());
    }

    SUBCASE("reference coefficients mirror the structure") {
        REQUIRE(sys.true_theta.has_value());
        const auto& th = *sys.true_theta;
        REQUIRE(th.cols() == 1 + 41);
        CHECK(th(0, 0) == doctest::Approx(-1.3));
        CHECK(th(0, 1) == doctest::Approx(0.0));
        CHECK(th(0, 2) == doctest::Approx(-4.0));
        CHECK(th(0, 3) == doctest::Approx(-1.2));
        CHECK(th(21, 0) == doctest::Approx(-2.0));
        CHECK(th(21, 2 + 21) == doctest::Approx(-3.5));
    }
}

TEST_CASE("custom cluster permutations are validated") {
    std::vector<int> tau1(20), tau2(20);
    for (int i = 0; i < 20; ++i) tau1[i] = 20 - i;
    for (int i = 0; i < 20; ++i) tau2[i] = (i + 5) % 20 + 1;
    auto sys = ddm_system(tau1, tau2);
    Eigen::VectorXd e20 = Eigen::VectorXd::Zero(40);
    e20[19] = 1.0;
    CHECK(sys.driving[0](e20, 0.0) == doctest::Approx(-1.2));

    std::vector<int> bad(20, 1);
    CHECK_THROWS_AS(ddm_system(bad, {}), config_error);
    CHECK_THROWS_AS(ddm_system({1, 2}, {}), config_error);
}

TEST_CASE("integration reports divergence with a time stamp") {
    OdeSystem sys;
    sys.p = 1;
    sys.K = 1;
    sys.driving = {[](const Eigen::VectorXd& x, double) { return x[0] * x[0]; }};
    sys.omega.resize(1, 0);
    sys.init = Eigen::VectorXd::Ones(1);
    sys.horizon = 2.0;
    try {
        integrate(sys, make_grid(201, 2.0));
        FAIL("expected divergence");
    } catch (const divergence_error& e) {
        CHECK(e.time > 0.5);
        CHECK(e.time <= 2.0);
    }
}

TEST_CASE("noise scales with trajectory energy and seed") {
    auto traj = integrate(exponential_growth(), make_grid(201, 1.0));

    SUBCASE("gamma zero is a passthrough") {
        auto obs = add_noise(traj, 0.0, 5);
        CHECK((obs.values - traj.values).cwiseAbs().maxCoeff() == 0.0);
        CHECK(obs.sigma[0] == 0.0);
    }

    SUBCASE("sigma matches the L2 average of the signal") {
        auto obs = add_noise(traj, 0.05, 5);
        const double ms = (std::exp(2.0) - 1.0) / 2.0;
        CHECK(obs.sigma[0] == doctest::Approx(0.05 * std::sqrt(ms)).epsilon(1e-3));
    }

    SUBCASE("draws are reproducible per seed") {
        auto a = add_noise(traj, 0.05, 5);
        auto b = add_noise(traj, 0.05, 5);
        auto c = add_noise(traj, 0.05, 6);
        CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.values - c.values).cwiseAbs().maxCoeff() > 0.0);
    }

    SUBCASE("noise is centered") {
        TrajectorySet flat;
        flat.grid = make_grid(100000, 1.0);
        flat.values = Eigen::MatrixXd::Ones(1, 100000);
        flat.derivatives = {flat.values};
        auto obs = add_noise(flat, 1.0, 11);
        const double mean = (obs.values.array() - 1.0).mean();
        CHECK(std::abs(mean) < 0.02);
        CHECK(obs.sigma[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "sem/grid.hpp"

using namespace sem;

TEST_CASE("even grid spans [0, horizon]") {
    auto g = make_grid(5, 2.0);
    REQUIRE(g.size() == 5);
    CHECK(g.horizon == doctest::Approx(2.0));
    for (int j = 0; j < 5; ++j) CHECK(g.times[j] == doctest::Approx(0.5 * j).epsilon(1e-15));
}

TEST_CASE("explicit grids are validated") {
    Eigen::VectorXd t(3);
    t << 0.0, 1.0, 0.5;
    CHECK_THROWS_AS(make_grid(t, 2.0), std::invalid_argument);

    t << 0.0, 1.0, 3.0;
    CHECK_THROWS_AS(make_grid(t, 2.0), std::invalid_argument);

    t << 0.0, 0.5, 2.0;
    CHECK_NOTHROW(make_grid(t, 2.0));

    CHECK_THROWS_AS(make_grid(1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(5, 0.0), std::invalid_argument);
}

TEST_CASE("trapezoid weights on an even grid") {
    auto rule = trapezoid_rule(make_grid(5, 2.0));
    REQUIRE(rule.size() == 5);
    const double h = 0.5;
    CHECK(rule.weights[0] == doctest::Approx(h / 2));
    CHECK(rule.weights[1] == doctest::Approx(h));
    CHECK(rule.weights[2] == doctest::Approx(h));
    CHECK(rule.weights[3] == doctest::Approx(h));
    CHECK(rule.weights[4] == doctest::Approx(h / 2));
    CHECK(rule.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(rule.weights.minCoeff() > 0.0);
}

TEST_CASE("trapezoid weights on an uneven grid") {
    Eigen::VectorXd t(4);
    t << 0.0, 0.1, 0.7, 1.0;
    auto rule = trapezoid_rule(t);
    CHECK(rule.weights[0] == doctest::Approx(0.05));
    CHECK(rule.weights[1] == doctest::Approx(0.35));
    CHECK(rule.weights[2] == doctest::Approx(0.45));
    CHECK(rule.weights[3] == doctest::Approx(0.15));
    CHECK(rule.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("trapezoid rule integrates affine functions exactly") {
    auto rule = trapezoid_rule(make_grid(37, 3.0));
    Eigen::VectorXd f = 3.0 * rule.nodes.array() + 1.0;
    const double exact = 3.0 * 9.0 / 2 + 3.0;
    CHECK((rule.weights.dot(f)) == doctest::Approx(exact).epsilon(1e-14));
}

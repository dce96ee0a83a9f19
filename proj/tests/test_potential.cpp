#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tkl/potential.hpp"

using namespace tkl;

TEST_CASE("quadratic potential closed forms") {
    PotentialSpec p = quadratic_potential(1.0, 1);
    std::vector<double> x = {3.0}, h(1);
    CHECK(p.u(x) == doctest::Approx(4.5).epsilon(1e-15));
    p.h(x, h);
    CHECK(h[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(p.m == doctest::Approx(0.5));
    CHECK(p.L == doctest::Approx(1.0));
    CHECK(p.l == doctest::Approx(0.0));
    REQUIRE(p.global_lipschitz.has_value());
    CHECK(*p.global_lipschitz == doctest::Approx(1.0));
    CHECK(p.h_origin_norm() == 0.0);

    PotentialSpec p3 = quadratic_potential(2.5, 3);
    std::vector<double> y = {1.0, -2.0, 2.0}, hy(3);
    CHECK(p3.u(y) == doctest::Approx(2.5 * 9.0 / 2.0).epsilon(1e-15));
    p3.h(y, hy);
    CHECK(hy[0] == doctest::Approx(2.5));
    CHECK(hy[1] == doctest::Approx(-5.0));
    CHECK(hy[2] == doctest::Approx(5.0));
}

TEST_CASE("double well potential closed forms") {
    PotentialSpec p = double_well_potential(1.0, 1);
    std::vector<double> x = {2.0}, h(1);
    CHECK(p.u(x) == doctest::Approx(6.0).epsilon(1e-15));
    p.h(x, h);
    CHECK(h[0] == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(p.m == doctest::Approx(0.5));
    CHECK(p.L == doctest::Approx(2.0));
    CHECK(p.l == doctest::Approx(2.0));
    CHECK(!p.global_lipschitz.has_value());

    // gradient of |x|^4/4 + c|x|^2/2 in d=2
    PotentialSpec p2 = double_well_potential(0.5, 2);
    std::vector<double> y = {1.0, 2.0}, hy(2);
    CHECK(p2.u(y) == doctest::Approx(25.0 / 4.0 + 0.5 * 5.0 / 2.0).epsilon(1e-15));
    p2.h(y, hy);
    CHECK(hy[0] == doctest::Approx(5.5));  // (|y|^2 + c) y
    CHECK(hy[1] == doctest::Approx(11.0));
}

TEST_CASE("builtin potential factory") {
    CHECK(builtin_potential("quadratic", 2.0, 4).kind == PotentialKind::Quadratic);
    CHECK(builtin_potential("double_well", 2.0, 4).kind == PotentialKind::DoubleWell);
    CHECK_THROWS_AS((void)builtin_potential("cubic", 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)quadratic_potential(0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)quadratic_potential(-1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)double_well_potential(1.0, 0), std::invalid_argument);
}

TEST_CASE("assumption audit passes for both builtins across dimensions") {
    for (int d : {1, 2, 5}) {
        for (double c : {0.5, 1.0}) {
            AssumptionsReport rq =
                check_assumptions(quadratic_potential(c, d), 10.0, 4000, 11);
            CHECK(rq.pass());
            CHECK(rq.a1_violations == 0);
            CHECK(rq.a2_violations == 0);
            CHECK(!rq.gradient_flagged());
            CHECK(rq.grad_mismatch_max < 1e-6);

            AssumptionsReport rw =
                check_assumptions(double_well_potential(c, d), 10.0, 4000, 11);
            CHECK(rw.pass());
            CHECK(rw.a1_violations == 0);
            CHECK(rw.a2_violations == 0);
            CHECK(!rw.gradient_flagged());
        }
    }
}

TEST_CASE("audit flags a drift that is not the gradient of u") {
    PotentialSpec p = quadratic_potential(1.0, 2);
    PotentialSpec bad = p;
    bad.kind = PotentialKind::Custom;
    bad.u_fn = [](std::span<const double> x) {
        double s = 0;
        for (double t : x) s += t * t;
        return 0.5 * s;
    };
    bad.h_fn = [](std::span<const double> x, std::span<double> out) {
        for (size_t i = 0; i < x.size(); ++i) out[i] = 0.1 * x[i];  // wrong scale
    };
    AssumptionsReport r = check_assumptions(bad, 10.0, 500, 11);
    CHECK(r.gradient_flagged());
    CHECK(r.grad_mismatch_max > 0.1);
    CHECK(!r.pass());
}

TEST_CASE("audit detects an A1 violation") {
    PotentialSpec bad = quadratic_potential(1.0, 1);
    bad.kind = PotentialKind::Custom;
    bad.m = 10.0;  // claimed monotonicity far above the truth
    bad.u_fn = [](std::span<const double> x) { return 0.5 * x[0] * x[0]; };
    bad.h_fn = [](std::span<const double> x, std::span<double> out) {
        out[0] = x[0];
    };
    AssumptionsReport r = check_assumptions(bad, 10.0, 500, 11);
    CHECK(r.a1_violations > 0);
    CHECK(!r.pass());
}

TEST_CASE("audit detects an A2 violation") {
    PotentialSpec bad = double_well_potential(1.0, 1);
    bad.kind = PotentialKind::Custom;
    bad.L = 0.01;  // claimed growth constant far below the truth
    bad.l = 0.0;
    bad.u_fn = [](std::span<const double> x) {
        double s = x[0] * x[0];
        return s * s / 4.0 + s / 2.0;
    };
    bad.h_fn = [](std::span<const double> x, std::span<double> out) {
        out[0] = (x[0] * x[0] + 1.0) * x[0];
    };
    AssumptionsReport r = check_assumptions(bad, 10.0, 500, 11);
    CHECK(r.a2_violations > 0);
    CHECK(!r.pass());
}

TEST_CASE("custom potential requires both callables") {
    PotentialSpec p;
    p.kind = PotentialKind::Custom;
    p.dim = 1;
    std::vector<double> x = {1.0}, h(1);
    CHECK_THROWS_AS((void)p.u(x), std::logic_error);
    CHECK_THROWS_AS(p.h(x, h), std::logic_error);
}

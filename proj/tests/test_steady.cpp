#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chemofv/norms.hpp"
#include "chemofv/steady.hpp"

using namespace chemofv;

namespace {

ModelParams make_params(double lambda, double mu, double v_bar, const Grid& g, double u0) {
    ModelParams p;
    p.lambda = lambda;
    p.mu = mu;
    p.v_bar = v_bar;
    p.grid = g;
    p.u0 = Field::constant(g, u0);
    return p;
}

} // namespace

TEST_CASE("pseudo-time marching reaches a steady state inside the bounds") {
    Grid g = Grid::unit_square(32);
    ModelParams p = make_params(1.0, 1.0, 0.05, g, 0.5);
    SteadyOptions opts;
    opts.tol = 1e-8;
    opts.t_cap = 100.0;
    SteadyState ss = find_steady(p, StepControl{}, opts);

    CHECK(ss.converged);
    CHECK(ss.residual <= opts.tol);
    CHECK(ss.marched_time < 100.0);
    CHECK(ss.U.min() > 0.0);

    const SteadyBoundReport& b = ss.bound_report;
    CHECK(b.lower_margin >= -1e-3);
    CHECK(b.upper_margin >= -1e-3);
    CHECK(b.v_min > 0.0);
    CHECK(b.v_upper_margin >= -1e-9);

    // non-constant state: the density piles up toward the boundary supply
    CHECK(lp_norm(ss.U, std::numeric_limits<double>::infinity()) - ss.U.min() > 1e-4);

    SUBCASE("operator residual is consistent with the pseudo-time residual") {
        Field rhs = density_rhs(ss.U, ss.V, p);
        double op_res = 0.0;
        for (double r : rhs.values) op_res = std::max(op_res, std::abs(r));
        double umax = ss.U.max();
        CHECK(op_res <= opts.tol * (1.0 + p.lambda + 2.0 * p.mu * umax) + 1e-9);
    }
}

TEST_CASE("small-v_bar steady state is independent of admissible initial data") {
    Grid g = Grid::unit_square(24);
    SteadyOptions opts;
    opts.tol = 1e-9;
    opts.t_cap = 200.0;
    ModelParams pa = make_params(1.0, 1.0, 0.05, g, 0.3);
    ModelParams pb = make_params(1.0, 1.0, 0.05, g, 1.7);
    SteadyState a = find_steady(pa, StepControl{}, opts);
    SteadyState b = find_steady(pb, StepControl{}, opts);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.U.values.size(); ++i)
        diff = std::max(diff, std::abs(a.U.values[i] - b.U.values[i]));
    CHECK(diff <= 10.0 * opts.tol);
}

TEST_CASE("steady density approaches the logistic plateau as v_bar shrinks") {
    Grid g = Grid::unit_square(16);
    SteadyOptions opts;
    opts.tol = 1e-9;
    opts.t_cap = 200.0;
    double prev_gap = 1e9;
    for (double vb : {0.1, 0.05, 0.025}) {
        ModelParams p = make_params(1.0, 1.0, vb, g, 0.5);
        SteadyState ss = find_steady(p, StepControl{}, opts);
        REQUIRE(ss.converged);
        Field dev = ss.U;
        for (double& x : dev.values) x -= 1.0;  // lambda/mu = 1
        double gap = lp_norm(dev, std::numeric_limits<double>::infinity());
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
}

TEST_CASE("the trivial pair (0, v_bar) annihilates the steady operator exactly") {
    Grid g = Grid::unit_square(12);
    ModelParams p = make_params(1.5, 0.7, 0.3, g, 0.5);
    Field zero(g, 0.0);
    Field vbar(g, p.v_bar);
    SteadyResidualReport r = steady_residual_report(zero, vbar, p);
    CHECK(r.u_residual_max == 0.0);
    CHECK(r.v_residual_max == 0.0);
    CHECK(r.dirichlet_mismatch == 0.0);
}

TEST_CASE("negative controls flag broken steady candidates") {
    Grid g = Grid::unit_square(12);
    ModelParams p = make_params(1.0, 1.0, 0.3, g, 0.5);
    SUBCASE("constant positive density fails the signal equation") {
        Field U(g, p.lambda / p.mu);
        Field V(g, p.v_bar);
        SteadyResidualReport r = steady_residual_report(U, V, p);
        CHECK(r.v_residual_max ==
              doctest::Approx(p.v_bar * p.lambda / p.mu).epsilon(1e-12));
    }
    SUBCASE("interior signal level violates the boundary data") {
        Field U(g, 0.0);
        Field V(g, 0.5 * p.v_bar);
        SteadyResidualReport r = steady_residual_report(U, V, p);
        CHECK(r.dirichlet_mismatch == doctest::Approx(0.5 * p.v_bar).epsilon(1e-12));
        CHECK(r.v_residual_max > 0.0);
    }
}

TEST_CASE("the trivial state is dynamically unstable") {
    Grid g = Grid::unit_square(16);
    ModelParams p = make_params(1.0, 1.0, 0.1, g, 0.5);
    SUBCASE("small seed grows at the linearized rate") {
        InstabilityReport r = check_instability_trivial(p, 1e-3);
        CHECK(r.mass_strictly_increasing);
        CHECK(r.expected_rate == doctest::Approx(1e-3));
        CHECK(r.relative_gap <= 0.01);
    }
    SUBCASE("the logistic plateau with zero signal does not move") {
        ModelParams q = make_params(1.0, 1.0, 0.0, g, 0.5);
        InstabilityReport r = check_instability_trivial(q, 1.0);  // delta = lambda/mu
        CHECK(std::abs(r.measured_rate) <= 1e-12);
        CHECK_FALSE(r.mass_strictly_increasing);
    }
    SUBCASE("seeding above the plateau decays") {
        InstabilityReport r = check_instability_trivial(p, 1.05);
        CHECK(r.measured_rate < 0.0);
        CHECK_FALSE(r.mass_strictly_increasing);
    }
}

TEST_CASE("time cap is reported, not fatal") {
    Grid g = Grid::unit_square(16);
    ModelParams p = make_params(1.0, 1.0, 0.05, g, 0.5);
    SteadyOptions opts;
    opts.tol = 1e-14;  // unreachable in the allotted time
    opts.t_cap = 0.05;
    SteadyState ss = find_steady(p, StepControl{}, opts);
    CHECK_FALSE(ss.converged);
    CHECK(ss.marched_time >= 0.05 - 1e-9);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chemofv/evolve.hpp"
#include "chemofv/norms.hpp"
#include "test_util.hpp"

using namespace chemofv;
using chemofv::test::random_field;

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

TEST_CASE("compute_dt: diffusion-limited case matches the formula exactly") {
    Grid g = Grid::unit_square(64);
    ModelParams p = make_params(1.0, 1.0, 0.3, g, 0.5);
    StepControl ctl;  // safety 0.4, dt_max 1
    Field u(g, 0.0);
    Field v(g, 0.3);  // constant signal: no advection limit
    double dt = compute_dt(u, v, ctl, p);
    CHECK(dt == doctest::Approx(0.4 / 16384.0).epsilon(1e-14));
}

TEST_CASE("compute_dt: degenerate reaction bound yields the remaining minima") {
    Grid g = Grid::unit_square(32);
    ModelParams p = make_params(0.0, 1.0, 0.3, g, 0.5);
    StepControl ctl;
    Field u(g, 0.0);  // lambda = 0 and u = 0: reaction limit is infinite
    Field v(g, 0.3);
    CHECK(compute_dt(u, v, ctl, p) == doctest::Approx(0.4 * g.h[0] * g.h[0] / 4.0).epsilon(1e-14));
}

TEST_CASE("compute_dt is non-increasing in the advective bound") {
    Grid g = Grid::unit_square(32);
    ModelParams p = make_params(1.0, 1.0, 0.3, g, 0.5);
    StepControl ctl;
    double prev = std::numeric_limits<double>::infinity();
    for (double gv : {0.0, 0.5, 1.0, 5.0, 50.0, 500.0}) {
        double dt = compute_dt_from_bounds(g, gv, 1.0, ctl, p);
        CHECK(dt <= prev);
        prev = dt;
    }
}

TEST_CASE("logistic equilibrium with zero signal is a fixed point, bitwise") {
    for (auto [lam, mu] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
        Grid g = Grid::unit_square(12);
        ModelParams p = make_params(lam, mu, 0.0, g, lam / mu);
        Simulator sim(p, StepControl{});
        for (int k = 0; k < 50; ++k) sim.step();
        for (double u : sim.density().values) CHECK(u == lam / mu);
    }
}

TEST_CASE("lambda = 0: total mass strictly decreases") {
    Grid g = Grid::unit_square(16);
    ModelParams p = make_params(0.0, 1.0, 0.2, g, 0.7);
    Simulator sim(p, StepControl{});
    double prev = integrate(sim.density());
    for (int k = 0; k < 100; ++k) {
        sim.step();
        double m = integrate(sim.density());
        CHECK(m < prev);
        prev = m;
    }
}

TEST_CASE("one step from constant data balances mass to machine precision") {
    Grid g = Grid::unit_square(32);
    ModelParams p = make_params(1.0, 1.0, 1.0, g, 1.0);
    Simulator sim(p, StepControl{});
    StepStats st = sim.step();
    CHECK(st.identity_residual <= 1e-13 * (1.0 + st.mass));
    // and it keeps holding while the field develops structure
    for (int k = 0; k < 200; ++k) {
        st = sim.step();
        CHECK(st.identity_residual <= 1e-12 * (1.0 + st.mass));
    }
}

TEST_CASE("mass bound, positivity, and signal bounds over a short run") {
    Grid g = Grid::unit_square(32);
    ModelParams p = make_params(1.0, 1.0, 0.1, g, 0.5);
    Trajectory traj = simulate(p, StepControl{}, 5.0, 0.25);
    const RunAccumulators& a = traj.accumulators;
    CHECK(a.max_mass_excess <= 0.0);
    CHECK(a.min_u > 0.0);
    CHECK(a.min_v >= -1e-9);
    CHECK(a.max_v_excess <= 1e-9);
    CHECK(a.max_interior_v_gap > 0.0);
    CHECK(a.max_energy_violation <= 1e-9);
    CHECK(a.max_energy_gap_rel <= 1e-6);
    // every observation obeys the mass cap as well
    double cap = p.mass_cap() * (1.0 + 1e-12);
    for (const Observation& o : traj.observations) CHECK(o.mass <= cap);
}

TEST_CASE("mass grows toward the logistic cap from below, never beyond") {
    Grid g = Grid::unit_square(24);
    ModelParams p = make_params(2.0, 1.0, 0.1, g, 0.3);  // cap = 2 |Omega| = 2
    Trajectory traj = simulate(p, StepControl{}, 8.0, 0.5);
    CHECK(traj.accumulators.max_mass_excess <= 0.0);
    CHECK(traj.observations.back().mass > 1.5);
}

TEST_CASE("blow-up monitor aborts with a diagnostic") {
    Grid g = Grid::unit_square(12);
    ModelParams p = make_params(2.0, 0.5, 0.05, g, 0.5);  // heading to 4
    StepControl ctl;
    ctl.blowup_threshold = 1.0;
    CHECK_THROWS_AS(simulate(p, ctl, 10.0, 0.5), BlowupError);
}

TEST_CASE("t_end = 0 yields only the initial observation") {
    Grid g = Grid::unit_square(8);
    ModelParams p = make_params(1.0, 1.0, 0.1, g, 0.5);
    Trajectory traj = simulate(p, StepControl{}, 0.0, 0.25);
    CHECK(traj.observations.size() == 1);
    CHECK(traj.observations[0].t == 0.0);
    CHECK(traj.final_state.step_index == 0);
}

TEST_CASE("observations land exactly on the requested cadence") {
    Grid g = Grid::unit_square(8);
    ModelParams p = make_params(1.0, 1.0, 0.1, g, 0.5);
    Trajectory traj = simulate(p, StepControl{}, 1.0, 0.25);
    REQUIRE(traj.observations.size() == 5);
    for (std::size_t k = 0; k < 5; ++k)
        CHECK(traj.observations[k].t == doctest::Approx(0.25 * k).epsilon(1e-12));
}

TEST_CASE("stored states pair the signal consistently with the density") {
    Grid g = Grid::unit_square(16);
    ModelParams p = make_params(1.0, 1.0, 0.2, g, 0.5);
    Simulator sim(p, StepControl{});
    for (int k = 0; k < 25; ++k) sim.step();
    sim.refresh_signal();
    SimState s = sim.state();
    EllipticSolution direct = solve_v(s.u, p.v_bar);
    for (std::size_t i = 0; i < s.v.values.size(); ++i)
        CHECK(s.v.values[i] == doctest::Approx(direct.v.values[i]).epsilon(1e-7));
}

TEST_CASE("two simulators with identical inputs stay bit-identical") {
    Grid g = Grid::unit_square(16);
    ModelParams p = make_params(1.0, 1.0, 0.1, g, 0.5);
    Simulator a(p, StepControl{}), b(p, StepControl{});
    for (int k = 0; k < 100; ++k) {
        StepStats sa = a.step();
        StepStats sb = b.step();
        CHECK(sa.mass == sb.mass);
        CHECK(sa.identity_residual == sb.identity_residual);
    }
    CHECK(a.density().values == b.density().values);
}

TEST_CASE("1-D oracle mode runs the same machinery") {
    Grid g = Grid::interval(1.0, 64);
    ModelParams p = make_params(1.0, 1.0, 0.1, g, 0.5);
    Trajectory traj = simulate(p, StepControl{}, 2.0, 0.5);
    CHECK(traj.accumulators.max_mass_excess <= 0.0);
    CHECK(traj.accumulators.min_u > 0.0);
    CHECK(traj.accumulators.max_energy_violation <= 1e-9);
}

TEST_CASE("warm-started signal solves are cheap along the trajectory") {
    Grid g = Grid::unit_square(32);
    ModelParams p = make_params(1.0, 1.0, 0.1, g, 0.5);
    Simulator sim(p, StepControl{});
    for (int k = 0; k < 50; ++k) sim.step();
    long long before = sim.accumulators().cg_iterations_total;
    for (int k = 0; k < 50; ++k) sim.step();
    long long per_step = (sim.accumulators().cg_iterations_total - before) / 50;
    CHECK(per_step <= 10);  // extrapolated warm starts keep the solver nearly idle
}

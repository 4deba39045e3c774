#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chemofv/elliptic.hpp"
#include "chemofv/norms.hpp"
#include "test_util.hpp"

using namespace chemofv;
using chemofv::test::random_field;

namespace {

// Closed form for u == 4, v_bar == 1 on [0,1]: v(x) = cosh(2(x-1/2))/cosh(1).
double cosh_oracle(double x) { return std::cosh(2.0 * (x - 0.5)) / std::cosh(1.0); }

double cosh_case_linf_error(int n) {
    Grid g = Grid::interval(1.0, n);
    Field u = Field::constant(g, 4.0);
    EllipticSolution sol = solve_v(u, 1.0);
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = g.cell_center(i)[0];
        err = std::max(err, std::abs(sol.v(i) - cosh_oracle(x)));
    }
    return err;
}

} // namespace

TEST_CASE("zero density: v == v_bar exactly with zero iterations") {
    Grid g = Grid::unit_square(16);
    EllipticSolution sol = solve_v(Field::constant(g, 0.0), 0.7);
    CHECK(sol.iterations == 0);
    CHECK(sol.residual == 0.0);
    for (double v : sol.v.values) CHECK(v == 0.7);
    for (double z : sol.z.values) CHECK(z == 0.0);
}

TEST_CASE("1-D constant-coefficient closed form") {
    Grid g = Grid::interval(1.0, 64);
    Field u = Field::constant(g, 4.0);
    EllipticSolution sol = solve_v(u, 1.0);
    // midpoint value 1/cosh(1)
    double mid = 0.5 * (sol.v(31) + sol.v(32));
    CHECK(mid == doctest::Approx(1.0 / std::cosh(1.0)).epsilon(5e-4));
    CHECK(cosh_case_linf_error(64) < 1e-3);
}

TEST_CASE("1-D closed form converges at second order") {
    double ratio = cosh_case_linf_error(32) / cosh_case_linf_error(64);
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
}

TEST_CASE("center value decreases with the consumption strength") {
    Grid g = Grid::unit_square(32);
    double prev = 1.0;
    for (double c : {1.0, 10.0, 100.0}) {
        EllipticSolution sol = solve_v(Field::constant(g, c), 1.0);
        double center = 0.25 * (sol.v(15, 15) + sol.v(16, 15) + sol.v(15, 16) + sol.v(16, 16));
        CHECK(center > 0.0);
        CHECK(center < 1.0);
        CHECK(center < prev);
        prev = center;
    }
}

TEST_CASE("discrete maximum principle on random densities") {
    Grid g = Grid::unit_square(24);
    EllipticOptions opts;
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
        Field u = random_field(g, 0.0, 8.0, seed);
        EllipticSolution sol = solve_v(u, 0.4, opts);
        double slack = 10.0 * opts.tol * 0.4;
        CHECK(sol.v.min() >= -slack);
        CHECK(sol.v.max() <= 0.4 + slack);
        // strict interior bound when u > 0 somewhere
        double vmax_int = 0.0;
        for (int iy = 1; iy < 23; ++iy)
            for (int ix = 1; ix < 23; ++ix) vmax_int = std::max(vmax_int, sol.v(ix, iy));
        CHECK(vmax_int < 0.4);
    }
}

TEST_CASE("comparison principle: larger density gives smaller signal, cellwise") {
    Grid g = Grid::unit_square(16);
    EllipticOptions opts;
    for (unsigned seed : {11u, 12u, 13u}) {
        Field u1 = random_field(g, 0.0, 3.0, seed);
        Field u2 = u1;
        Field bump = random_field(g, 0.0, 2.0, seed + 100);
        for (std::size_t i = 0; i < u2.values.size(); ++i) u2.values[i] += bump.values[i];
        EllipticSolution s1 = solve_v(u1, 1.0, opts);
        EllipticSolution s2 = solve_v(u2, 1.0, opts);
        double slack = 10.0 * opts.tol;
        for (std::size_t i = 0; i < s1.v.values.size(); ++i)
            CHECK(s1.v.values[i] >= s2.v.values[i] - slack);
    }
}

TEST_CASE("energy identity and inequality, audited per solve") {
    Grid g = Grid::unit_square(32);
    for (unsigned seed : {7u, 8u}) {
        Field u = random_field(g, 0.0, 5.0, seed);
        EllipticSolution sol = solve_v(u, 0.8);
        EllipticAudit a = elliptic_audit(u, sol);
        // identity: face energy == interior product up to solver tolerance
        CHECK(a.identity_gap() <= 1e-8 * std::max(1.0, a.energy_face));
        // inequality against v_bar^2 ||u||_1
        CHECK(a.energy_face <= a.energy_rhs * (1.0 + 1e-6) + 1e-12);
        // audit's face energy agrees with the generic face sum
        double e = dirichlet_energy(sol.z, BoundaryRule::dirichlet(0.0));
        CHECK(a.energy_face == doctest::Approx(e).epsilon(1e-13));
    }
}

TEST_CASE("discrete Green identity: face energy equals z' (-lap z) vol") {
    Grid g = Grid::unit_square(12);
    Field zf = random_field(g, -1.0, 1.0, 21);
    Field zero_u(g, 0.0);
    std::vector<double> az;
    apply_shifted_laplacian(zero_u, zf.values, az, g);
    KahanSum s;
    for (std::size_t i = 0; i < az.size(); ++i) s.add(zf.values[i] * az[i]);
    double lhs = s.value() * g.cell_volume();
    double rhs = dirichlet_energy(zf, BoundaryRule::dirichlet(0.0));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("elliptic report fields") {
    Grid g = Grid::interval(1.0, 64);
    SUBCASE("zero density: energies vanish, ratios absent") {
        Field u = Field::constant(g, 0.0);
        EllipticSolution sol = solve_v(u, 1.0);
        EllipticEstimateReport rep = elliptic_report(u, sol);
        CHECK(rep.energy_lhs == 0.0);
        CHECK(rep.energy_rhs == 0.0);
        CHECK_FALSE(rep.gn_ratio.has_value());
        CHECK_FALSE(rep.c1_estimate.has_value());
    }
    SUBCASE("constant density: strict inequality, finite ratios") {
        Field u = Field::constant(g, 4.0);
        EllipticSolution sol = solve_v(u, 1.0);
        EllipticEstimateReport rep = elliptic_report(u, sol);
        CHECK(rep.energy_lhs < rep.energy_rhs);
        CHECK(rep.energy_lhs > 0.0);
        REQUIRE(rep.gn_ratio.has_value());
        REQUIRE(rep.c1_estimate.has_value());
        CHECK(*rep.gn_ratio > 0.0);
        CHECK(*rep.c1_estimate > 0.0);
        CHECK(std::abs(rep.energy_lhs - rep.energy_interior) <=
              1e-8 * std::max(1.0, rep.energy_lhs));
    }
}

TEST_CASE("negative densities: roundoff clamped, real negatives rejected") {
    Grid g = Grid::interval(1.0, 8);
    Field u = Field::constant(g, 1.0);
    u.values[3] = -1e-13;  // clamped
    CHECK_NOTHROW(solve_v(u, 1.0));
    u.values[3] = -1e-6;
    CHECK_THROWS_AS(solve_v(u, 1.0), std::invalid_argument);
}

TEST_CASE("warm start: re-solving from the previous solution costs no iterations") {
    Grid g = Grid::unit_square(24);
    Field u = random_field(g, 0.2, 2.0, 31);
    EllipticSolution first = solve_v(u, 0.5);
    CHECK(first.iterations > 0);
    EllipticSolution again = solve_v(u, 0.5, {}, &first.z);
    CHECK(again.iterations == 0);
    CHECK(again.residual <= 1e-10);
}

TEST_CASE("all preconditioner modes agree") {
    Grid g = Grid::unit_square(16);
    Field u = random_field(g, 0.0, 4.0, 77);
    EllipticOptions plain, jac, fast;
    plain.precond = EllipticPrecond::none;
    jac.precond = EllipticPrecond::jacobi;
    fast.precond = EllipticPrecond::fast_poisson;
    EllipticSolution a = solve_v(u, 1.0, plain);
    EllipticSolution b = solve_v(u, 1.0, jac);
    EllipticSolution c = solve_v(u, 1.0, fast);
    for (std::size_t i = 0; i < a.v.values.size(); ++i) {
        CHECK(a.v.values[i] == doctest::Approx(b.v.values[i]).epsilon(1e-8));
        CHECK(a.v.values[i] == doctest::Approx(c.v.values[i]).epsilon(1e-8));
    }
    // the fast mode needs only a handful of iterations even from cold
    CHECK(c.iterations <= 12);
    CHECK(c.iterations >= 1);
}

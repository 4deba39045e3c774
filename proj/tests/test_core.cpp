#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "chemofv/gradient.hpp"
#include "chemofv/norms.hpp"
#include "chemofv/params.hpp"
#include "test_util.hpp"

using namespace chemofv;
using chemofv::test::random_field;
using chemofv::test::reflect_x;
using std::numbers::pi;

TEST_CASE("grid geometry: measure equals the sum of cell volumes") {
    // exactly representable spacing
    Grid g1 = Grid::interval(3.0, 4);
    CHECK(g1.cell_volume() * static_cast<double>(g1.cell_count()) == g1.measure());
    Grid g2 = Grid::unit_square(64);
    CHECK(g2.cell_volume() * static_cast<double>(g2.cell_count()) == g2.measure());
    // inexact spacing still ties out to roundoff
    Grid g3 = Grid::rectangle(1.0, 2.0, 7, 13);
    CHECK(g3.cell_volume() * static_cast<double>(g3.cell_count()) ==
          doctest::Approx(g3.measure()).epsilon(1e-14));
    // cell centers sit at (i + 1/2) h
    CHECK(g1.cell_center(0)[0] == doctest::Approx(0.375));
    CHECK(g1.cell_center(3)[0] == doctest::Approx(2.625));
}

TEST_CASE("integrate: midpoint quadrature") {
    CHECK(integrate(Field::constant(Grid::unit_square(17), 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(integrate(Field::constant(Grid::interval(3.0, 11), 2.0)) == doctest::Approx(6.0).epsilon(1e-14));
    // exact for linear integrands
    Grid g = Grid::interval(1.0, 4);
    Field fx = Field::from_function(g, [](double x, double) { return x; });
    CHECK(integrate(fx) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("integrate rejects non-finite fields") {
    Field f = Field::constant(Grid::interval(1.0, 4), 1.0);
    f.values[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(integrate(f), NonFiniteError);
    f.values[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(lp_norm(f, 2.0), NonFiniteError);
}

TEST_CASE("lp_norm: constants, sign, support") {
    Grid g = Grid::unit_square(8);
    CHECK(lp_norm(Field::constant(g, 2.0), 2.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(lp_norm(Field::constant(g, -3.0), std::numeric_limits<double>::infinity()) == 3.0);
    Field half(g);
    for (int iy = 0; iy < 8; ++iy)
        for (int ix = 0; ix < 4; ++ix) half(ix, iy) = 1.0;
    CHECK(lp_norm(half, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(lp_norm(half, 0.5), std::invalid_argument);
}

TEST_CASE("quadrature consistency: integrate == lp_norm(.,1) for nonnegative fields, bitwise") {
    Field f = random_field(Grid::unit_square(23), 0.0, 5.0, 1234);
    CHECK(integrate(f) == lp_norm(f, 1.0));
}

TEST_CASE("norms are invariant under grid reflections") {
    Field f = random_field(Grid::unit_square(16), -2.0, 3.0, 99);
    Field r = reflect_x(f);
    for (double p : {1.0, 2.0, 3.0, 4.0}) {
        CHECK(lp_norm(r, p) == doctest::Approx(lp_norm(f, p)).epsilon(1e-14));
    }
    CHECK(lp_norm(r, std::numeric_limits<double>::infinity()) ==
          lp_norm(f, std::numeric_limits<double>::infinity()));
    CHECK(integrate(r) == doctest::Approx(integrate(f)).epsilon(1e-14));
}

TEST_CASE("face gradients: linear and constant fields are exact") {
    Grid g = Grid::interval(1.0, 16);
    Field fx = Field::from_function(g, [](double x, double) { return x; });
    auto fg = face_gradients(fx, BoundaryRule::dirichlet([](double x, double) { return x; }));
    for (double gv : fg.axis[0]) CHECK(gv == doctest::Approx(1.0).epsilon(1e-13));

    Field fc = Field::constant(g, 4.2);
    auto fg2 = face_gradients(fc, BoundaryRule::dirichlet(4.2));
    for (double gv : fg2.axis[0]) CHECK(gv == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("face gradients: central difference of a quadratic is exact at the midpoint face") {
    Grid g = Grid::interval(1.0, 32);
    Field f = Field::from_function(g, [](double x, double) { return x * x; });
    auto fg = face_gradients(f, BoundaryRule::dirichlet([](double x, double) { return x * x; }));
    // face index 16 sits at x = 0.5
    CHECK(fg.axis[0][16] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("face gradients require a boundary rule") {
    Field f = Field::constant(Grid::interval(1.0, 4), 1.0);
    CHECK_THROWS_AS(face_gradients(f, BoundaryRule::none()), std::logic_error);
}

TEST_CASE("grad_lp_norm: unit-slope plane has unit gradient norm") {
    Grid g = Grid::unit_square(12);
    Field f = Field::from_function(g, [](double x, double) { return x; });
    auto rule = BoundaryRule::dirichlet([](double x, double) { return x; });
    CHECK(grad_lp_norm(f, 4.0, rule) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(grad_lp_norm(Field::constant(g, 7.0), 2.0, BoundaryRule::dirichlet(7.0)) ==
          doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("grad_lp_norm: sine profile matches the closed form within 1%") {
    Grid g = Grid::interval(1.0, 64);
    Field f = Field::from_function(g, [](double x, double) { return std::sin(pi * x); });
    double val = grad_lp_norm(f, 2.0, BoundaryRule::dirichlet(0.0));
    CHECK(val == doctest::Approx(pi / std::sqrt(2.0)).epsilon(0.01));
}

TEST_CASE("grad_lp_norm converges at second order on smooth fields") {
    auto err = [](int n) {
        Grid g = Grid::interval(1.0, n);
        Field f = Field::from_function(g, [](double x, double) { return std::sin(pi * x); });
        return std::abs(grad_lp_norm(f, 2.0, BoundaryRule::dirichlet(0.0)) - pi / std::sqrt(2.0));
    };
    double ratio = err(32) / err(64);
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
}

TEST_CASE("dirichlet_energy matches the quadrature-weighted face sum on a known profile") {
    // f(x) = x(1-x) on [0,1]: integral of f'^2 = integral (1-2x)^2 = 1/3.
    Grid g = Grid::interval(1.0, 128);
    Field f = Field::from_function(g, [](double x, double) { return x * (1.0 - x); });
    double e = dirichlet_energy(f, BoundaryRule::dirichlet(0.0));
    CHECK(e == doctest::Approx(1.0 / 3.0).epsilon(2e-3));
}

TEST_CASE("v_seminorm: constant, zero, and frozen sine") {
    SUBCASE("constant field over a unit window") {
        std::vector<SeminormSample> s = {{0.0, 1.0, 0.0}, {0.5, 1.0, 0.0}, {1.0, 1.0, 0.0}};
        CHECK(v_seminorm(s, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("identically zero") {
        std::vector<SeminormSample> s = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
        CHECK(v_seminorm(s, 0.0, 1.0) == 0.0);
    }
    SUBCASE("frozen sine profile") {
        Grid g = Grid::interval(1.0, 64);
        Field f = Field::from_function(g, [](double x, double) { return std::sin(pi * x); });
        double l2 = lp_norm(f, 2.0);
        double gl2 = grad_lp_norm(f, 2.0, BoundaryRule::dirichlet(0.0));
        std::vector<SeminormSample> s;
        for (int k = 0; k <= 10; ++k) s.push_back({0.1 * k, l2, gl2});
        double expect = 1.0 / std::sqrt(2.0) + pi / std::sqrt(2.0);
        CHECK(v_seminorm(s, 0.0, 1.0) == doctest::Approx(expect).epsilon(0.01));
    }
    SUBCASE("window not covered") {
        std::vector<SeminormSample> s = {{0.2, 1.0, 0.0}, {0.8, 1.0, 0.0}};
        CHECK_THROWS_AS(v_seminorm(s, 0.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("model params validation") {
    Grid g = Grid::unit_square(4);
    ModelParams p;
    p.grid = g;
    p.u0 = Field::constant(g, 0.5);
    CHECK_NOTHROW(p.validate());

    ModelParams bad = p;
    bad.mu = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.lambda = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.u0 = Field::constant(g, 0.0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    // mass cap: max(||u0||_1, lambda |Omega| / mu)
    ModelParams q = p;
    q.lambda = 2.0;
    q.mu = 0.5;
    CHECK(q.mass_cap() == doctest::Approx(4.0));
    q.lambda = 0.0;
    CHECK(q.mass_cap() == doctest::Approx(0.5));
}

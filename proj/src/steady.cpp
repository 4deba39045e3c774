#include "chemofv/steady.hpp"

#include <algorithm>
#include <cmath>

#include "chemofv/norms.hpp"

namespace chemofv {

SteadyBoundReport steady_bound_report(const Field& U, const Field& V,
                                      const ModelParams& params) {
    require(U.grid == V.grid, "steady_bound_report: grid mismatch");
    SteadyBoundReport r;
    const double ratio = params.lambda / params.mu;
    const double v_bar = params.v_bar;
    double lower = std::numeric_limits<double>::infinity();
    double upper = lower, v_upper = lower, v_min = lower;
    for (std::size_t i = 0; i < U.values.size(); ++i) {
        double Ui = U.values[i], Vi = V.values[i];
        lower = std::min(lower, Ui - std::exp(Vi - v_bar) * ratio);
        upper = std::min(upper, ratio * std::exp(Vi) - Ui);
        v_upper = std::min(v_upper, v_bar - Vi);
        v_min = std::min(v_min, Vi);
    }
    r.lower_margin = lower;
    r.upper_margin = upper;
    r.v_upper_margin = v_upper;
    r.v_min = v_min;
    return r;
}

SteadyState find_steady(const ModelParams& params, const StepControl& ctl,
                        const SteadyOptions& opts, double observe_interval,
                        const std::vector<Observer>& observers, Trajectory* out_traj) {
    require(opts.tol > 0.0, "find_steady: tol must be > 0");
    require(opts.t_cap > 0.0, "find_steady: t_cap must be > 0");

    Trajectory traj =
        simulate(params, ctl, opts.t_cap, observe_interval, observers,
                 [&](const StepStats& st) { return st.steady_residual <= opts.tol; });

    SteadyState out;
    out.U = traj.final_state.u;
    out.V = traj.final_state.v;
    out.residual = traj.last_stats.steady_residual;
    out.marched_time = traj.final_state.t;
    out.steps = traj.final_state.step_index;
    out.converged = traj.stopped_early && out.residual <= opts.tol;
    out.bound_report = steady_bound_report(out.U, out.V, params);
    if (out_traj != nullptr) *out_traj = std::move(traj);
    return out;
}

Field density_rhs(const Field& u, const Field& v, const ModelParams& params) {
    const Grid& g = u.grid;
    require(v.grid == g, "density_rhs: grid mismatch");
    const int nx = g.nx(), ny = g.ny();
    const double hx = g.h[0], hy = g.h[1];
    const double lam = params.lambda, mu = params.mu;
    Field rhs(g);

    // x-direction flux divergence
    for (int iy = 0; iy < ny; ++iy) {
        double fxl = 0.0;
        for (int ix = 0; ix < nx; ++ix) {
            double uc = u(ix, iy);
            double fxr = 0.0;
            if (ix < nx - 1) {
                double w = (v(ix + 1, iy) - v(ix, iy)) / hx;
                double don = w > 0.0 ? uc : u(ix + 1, iy);
                fxr = -(u(ix + 1, iy) - uc) / hx + don * w;
            }
            rhs(ix, iy) = -(fxr - fxl) / hx + lam * uc - mu * uc * uc;
            fxl = fxr;
        }
    }
    if (g.dim == 2) {
        for (int ix = 0; ix < nx; ++ix) {
            double fyb = 0.0;
            for (int iy = 0; iy < ny; ++iy) {
                double uc = u(ix, iy);
                double fya = 0.0;
                if (iy < ny - 1) {
                    double w = (v(ix, iy + 1) - v(ix, iy)) / hy;
                    double don = w > 0.0 ? uc : u(ix, iy + 1);
                    fya = -(u(ix, iy + 1) - uc) / hy + don * w;
                }
                rhs(ix, iy) -= (fya - fyb) / hy;
                fyb = fya;
            }
        }
    }
    return rhs;
}

SteadyResidualReport steady_residual_report(const Field& U, const Field& V,
                                            const ModelParams& params) {
    const Grid& g = U.grid;
    require(V.grid == g, "steady_residual_report: grid mismatch");
    SteadyResidualReport rep;

    Field rhs = density_rhs(U, V, params);
    for (double r : rhs.values) rep.u_residual_max = std::max(rep.u_residual_max, std::abs(r));

    // lap V - U V with Dirichlet(v_bar) ghosts, via the substituted operator:
    // (-lap_h0 + U) z = v_bar U with z = v_bar - V has residual equal to
    // -(lap V - U V) cellwise.
    const std::size_t n = g.cell_count();
    std::vector<double> z(n), az;
    for (std::size_t i = 0; i < n; ++i) z[i] = params.v_bar - V.values[i];
    apply_shifted_laplacian(U, z, az, g);
    for (std::size_t i = 0; i < n; ++i) {
        double ui = U.values[i] < 0.0 ? 0.0 : U.values[i];
        rep.v_residual_max = std::max(rep.v_residual_max, std::abs(az[i] - params.v_bar * ui));
    }

    // Boundary-face value of V by linear extrapolation from the two nearest
    // cells; flags fields that do not meet the boundary data.
    const int nx = g.nx(), ny = g.ny();
    auto extrap = [](double c0, double c1) { return 1.5 * c0 - 0.5 * c1; };
    double mismatch = 0.0;
    if (nx >= 2) {
        for (int iy = 0; iy < ny; ++iy) {
            mismatch = std::max(mismatch, std::abs(extrap(V(0, iy), V(1, iy)) - params.v_bar));
            mismatch = std::max(mismatch,
                                std::abs(extrap(V(nx - 1, iy), V(nx - 2, iy)) - params.v_bar));
        }
    }
    if (g.dim == 2 && ny >= 2) {
        for (int ix = 0; ix < nx; ++ix) {
            mismatch = std::max(mismatch, std::abs(extrap(V(ix, 0), V(ix, 1)) - params.v_bar));
            mismatch = std::max(mismatch,
                                std::abs(extrap(V(ix, ny - 1), V(ix, ny - 2)) - params.v_bar));
        }
    }
    rep.dirichlet_mismatch = mismatch;
    return rep;
}

InstabilityReport check_instability_trivial(const ModelParams& base, double delta,
                                            int sample_steps) {
    require(delta > 0.0, "check_instability_trivial: delta must be > 0");
    require(sample_steps >= 2, "check_instability_trivial: need at least 2 steps");

    ModelParams params = base;
    params.u0 = Field::constant(base.grid, delta);

    Simulator sim(params, StepControl{});
    InstabilityReport rep;
    rep.delta = delta;
    rep.expected_rate = base.lambda * delta * base.grid.measure();

    const double mass0 = integrate(sim.density());
    double prev = mass0;
    bool increasing = true;
    for (int k = 0; k < sample_steps; ++k) {
        sim.step();
        double m = integrate(sim.density());
        if (!(m > prev)) increasing = false;
        prev = m;
    }
    rep.measured_rate = (prev - mass0) / sim.time();
    rep.mass_strictly_increasing = increasing;
    double scale = std::max(std::abs(rep.expected_rate), 1e-300);
    rep.relative_gap = std::abs(rep.measured_rate - rep.expected_rate) / scale;
    return rep;
}

} // namespace chemofv

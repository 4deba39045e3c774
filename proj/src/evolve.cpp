#include "chemofv/evolve.hpp"

#include <algorithm>
#include <cmath>

#include "chemofv/gradient.hpp"
#include "chemofv/norms.hpp"

namespace chemofv {

double compute_dt_from_bounds(const Grid& g, double max_face_grad_v, double max_u,
                              const StepControl& ctl, const ModelParams& params) {
    const double ax = 1.0 / (g.h[0] * g.h[0]);
    const double ay = g.dim == 2 ? 1.0 / (g.h[1] * g.h[1]) : 0.0;
    double dt = 0.5 / (ax + ay);  // h^2/(2 dim) for square cells
    if (max_face_grad_v > 0.0) {
        double adv = g.h[0] / max_face_grad_v;
        if (g.dim == 2) adv = std::min(adv, g.h[1] / max_face_grad_v);
        dt = std::min(dt, adv);
    }
    double reaction_denom = params.lambda + 2.0 * params.mu * max_u;
    if (reaction_denom > 0.0) dt = std::min(dt, 1.0 / reaction_denom);
    return std::min(ctl.cfl_safety * dt, ctl.dt_max);
}

double compute_dt(const Field& u, const Field& v, const StepControl& ctl,
                  const ModelParams& params) {
    FaceGradients fg = face_gradients(v, BoundaryRule::dirichlet(params.v_bar));
    double gmax = 0.0;
    for (int a = 0; a < v.grid.dim; ++a)
        for (double gv : fg.axis[a]) gmax = std::max(gmax, std::abs(gv));
    return compute_dt_from_bounds(u.grid, gmax, u.max(), ctl, params);
}

Simulator::Simulator(ModelParams params, StepControl ctl)
    : params_(std::move(params)), ctl_(std::move(ctl)) {
    params_.validate();
    ctl_.validate();
    const Grid& g = params_.grid;
    u_ = params_.u0;
    u_next_ = Field(g);
    z_ = Field(g);
    z_hist1_ = Field(g);
    z_hist2_ = Field(g);
    z_guess_ = Field(g);
    fy_below_.assign(g.nx(), 0.0);
    fy_above_.assign(g.nx(), 0.0);
    fx_.assign(g.nx() + 1, 0.0);
    min_u_ = u_.min();
    max_u_ = u_.max();
    acc_.mass_cap = params_.mass_cap();
    solve_signal_();
}

void Simulator::solve_signal_() {
    if (signal_fresh_) return;
    const Grid& g = params_.grid;
    const std::size_t n = g.cell_count();
    const double v_bar = params_.v_bar;

    if (v_bar > 0.0) {
        // Warm start: quadratic (then linear) extrapolation of the previous
        // solutions. The signal varies smoothly along the trajectory, so the
        // predicted field is usually already inside the solver tolerance.
        double* zg = z_guess_.values.data();
        const double* z0 = z_.values.data();
        const double* z1 = z_hist1_.values.data();
        const double* z2 = z_hist2_.values.data();
        if (history_ >= 3) {
            for (std::size_t i = 0; i < n; ++i) zg[i] = 3.0 * z0[i] - 3.0 * z1[i] + z2[i];
        } else if (history_ == 2) {
            for (std::size_t i = 0; i < n; ++i) zg[i] = 2.0 * z0[i] - z1[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) zg[i] = z0[i];
        }
        z_hist2_.values.swap(z_hist1_.values);
        z_hist1_.values.swap(z_.values);
        z_.values.swap(z_guess_.values);
        if (history_ < 3) ++history_;

        cg_iters_ = cg_solve(u_, v_bar, z_.values, ctl_.elliptic, cg_residual_, cg_ws_, g);
    } else {
        std::fill(z_.values.begin(), z_.values.end(), 0.0);
        cg_iters_ = 0;
        cg_residual_ = 0.0;
    }

    double zmin = 0.0, zmax = 0.0;
    audit_ = audit_core(u_, z_.values, v_bar, g, &max_face_grad_v_, &zmin, &zmax);

    const double slack = 10.0 * ctl_.elliptic.tol * (v_bar > 0.0 ? v_bar : 1.0);
    if (!(zmin >= -slack) || !(zmax <= v_bar + slack))
        throw SimulationError(
            "signal bound violated beyond solver tolerance at t = " + std::to_string(t_) +
            ": v range [" + std::to_string(v_bar - zmax) + ", " + std::to_string(v_bar - zmin) +
            "] vs [0, " + std::to_string(v_bar) + "]");

    acc_.cg_iterations_total += cg_iters_;
    acc_.max_cg_residual = std::max(acc_.max_cg_residual, cg_residual_);
    acc_.min_v = std::min(acc_.min_v, audit_.min_v);
    acc_.max_v_excess = std::max(acc_.max_v_excess, audit_.max_v - v_bar);
    if (max_u_ > 0.0 && audit_.max_interior_v > -1e300)
        acc_.max_interior_v_gap = std::min(acc_.max_interior_v_gap, v_bar - audit_.max_interior_v);
    if (ctl_.audit_every_solve) {
        acc_.max_energy_violation = std::max(acc_.max_energy_violation, audit_.inequality_violation());
        double scale = std::max(audit_.energy_face, 1e-300);
        acc_.max_energy_gap_rel = std::max(acc_.max_energy_gap_rel, audit_.identity_gap() / scale);
    }
    signal_fresh_ = true;
}

void Simulator::refresh_signal() { solve_signal_(); }

void Simulator::advance_(double dt) {
    const Grid& g = params_.grid;
    const int nx = g.nx(), ny = g.ny();
    const double hx = g.h[0], hy = g.h[1];
    const double rdx = dt / hx;
    const double rdy = g.dim == 2 ? dt / hy : 0.0;
    const double vol = g.cell_volume();
    const double lam = params_.lambda, mu = params_.mu;
    const bool two_d = g.dim == 2;

    const double* u = u_.values.data();
    const double* z = z_.values.data();
    double* un = u_next_.values.data();

    // Pass 1: fluxes and the forward-Euler update, face rows materialized so
    // every loop vectorizes. Boundary faces carry zero total flux by
    // construction: fx_[0], fx_[nx], and the wall fy rows stay 0.
    std::fill(fy_below_.begin(), fy_below_.end(), 0.0);
    fx_[0] = 0.0;
    fx_[nx] = 0.0;
    for (int iy = 0; iy < ny; ++iy) {
        const std::size_t row0 = static_cast<std::size_t>(iy) * nx;
        const double* ur = u + row0;
        const double* zr = z + row0;
        const bool has_above = two_d && iy < ny - 1;
        if (has_above) {
            const double* ua = ur + nx;
            const double* za = zr + nx;
            double* fya = fy_above_.data();
            for (int ix = 0; ix < nx; ++ix) {
                double w = (zr[ix] - za[ix]) / hy;  // dv/dy across the face
                double don = w > 0.0 ? ur[ix] : ua[ix];
                fya[ix] = -(ua[ix] - ur[ix]) / hy + don * w;
            }
        } else {
            std::fill(fy_above_.begin(), fy_above_.end(), 0.0);
        }

        double* fx = fx_.data();
        for (int ix = 0; ix < nx - 1; ++ix) {
            double w = (zr[ix] - zr[ix + 1]) / hx;  // dv/dx across the face
            double don = w > 0.0 ? ur[ix] : ur[ix + 1];
            fx[ix + 1] = -(ur[ix + 1] - ur[ix]) / hx + don * w;
        }

        const double* fyb = fy_below_.data();
        const double* fya = fy_above_.data();
        double* unr = un + row0;
        for (int ix = 0; ix < nx; ++ix) {
            double uc = ur[ix];
            double div = rdx * (fx[ix + 1] - fx[ix]) + rdy * (fya[ix] - fyb[ix]);
            unr[ix] = uc - div + dt * (lam * uc - mu * uc * uc);
        }
        fy_below_.swap(fy_above_);
    }

    // Pass 2: compensated balance sums (three independent chains overlap in
    // the pipeline) plus field extrema.
    KahanSum mass, l2sq, delta;
    double minu = std::numeric_limits<double>::infinity();
    double maxu = -minu;
    double maxstep = 0.0;
    const std::size_t n = g.cell_count();
    for (std::size_t i = 0; i < n; ++i) {
        double uc = u[i];
        double unew = un[i];
        mass.add(uc);
        l2sq.add(uc * uc);
        double d = unew - uc;
        delta.add(d);
        double ad = std::abs(d);
        maxstep = ad > maxstep ? ad : maxstep;
        minu = unew < minu ? unew : minu;
        maxu = unew > maxu ? unew : maxu;
    }

    const double mass_n = mass.value() * vol;
    const double l2sq_n = l2sq.value() * vol;
    const double rate = delta.value() * vol / dt;
    const double ident = std::abs(rate - (lam * mass_n - mu * l2sq_n));

    if (!std::isfinite(rate) || !std::isfinite(maxu) || !std::isfinite(minu))
        throw NonFiniteError("step: non-finite density produced at t = " + std::to_string(t_));
    if (!(minu > 0.0))
        throw PositivityError("step: density positivity lost at t = " + std::to_string(t_) +
                              " (min = " + std::to_string(minu) +
                              "); time-step restriction violated");
    if (maxu > ctl_.blowup_threshold)
        throw BlowupError("step: uniform-boundedness monitor tripped at t = " + std::to_string(t_) +
                          ": ||u||_inf = " + std::to_string(maxu) + " exceeds the cap " +
                          std::to_string(ctl_.blowup_threshold) +
                          "; run aborted as non-extensible");

    u_.values.swap(u_next_.values);
    min_u_ = minu;
    max_u_ = maxu;

    last_stats_.t_before = t_;
    last_stats_.dt = dt;
    last_stats_.mass = mass_n;
    last_stats_.l2_sq = l2sq_n;
    last_stats_.mass_delta_rate = rate;
    last_stats_.identity_residual = ident;
    last_stats_.steady_residual = maxstep / dt;
    last_stats_.min_u_after = minu;
    last_stats_.max_u_after = maxu;
    last_stats_.cg_iterations = cg_iters_;
    last_stats_.cg_residual = cg_residual_;
}

StepStats Simulator::step(double dt_cap) {
    solve_signal_();
    double dt = compute_dt_from_bounds(params_.grid, max_face_grad_v_, max_u_, ctl_, params_);
    dt = std::min(dt, dt_cap);
    require(dt > 0.0 && std::isfinite(dt), "step: non-positive time step");

    advance_(dt);
    signal_fresh_ = false;

    t_ += dt;
    ++step_;
    dt_last_ = dt;

    acc_.steps += 1;
    acc_.max_mass = std::max(acc_.max_mass, last_stats_.mass);
    acc_.max_mass_excess =
        std::max(acc_.max_mass_excess, last_stats_.mass - acc_.mass_cap * (1.0 + 1e-12));
    acc_.max_identity_residual_scaled =
        std::max(acc_.max_identity_residual_scaled,
                 last_stats_.identity_residual / (1.0 + last_stats_.mass));
    acc_.min_u = std::min(acc_.min_u, min_u_);
    acc_.max_u = std::max(acc_.max_u, max_u_);
    return last_stats_;
}

Field Simulator::signal() const {
    Field v(params_.grid);
    const double v_bar = params_.v_bar;
    for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = v_bar - z_.values[i];
    return v;
}

SimState Simulator::state() const {
    SimState s;
    s.u = u_;
    s.v = signal();
    s.t = t_;
    s.dt_last = dt_last_;
    s.step_index = step_;
    return s;
}

namespace {

Observation make_observation(const Simulator& sim, double worst_ident, double worst_energy) {
    Observation o;
    const Field& u = sim.density();
    o.t = sim.time();
    o.step_index = sim.step_index();
    o.dt_last = sim.last_dt();
    o.mass = integrate(u);
    o.l2 = lp_norm(u, 2.0);
    o.l3 = lp_norm(u, 3.0);
    o.linf = lp_norm(u, std::numeric_limits<double>::infinity());
    o.min_u = u.min();
    o.grad_u_l2 = grad_lp_norm(u, 2.0, BoundaryRule::zero_flux());
    const double v_bar = sim.params().v_bar;
    if (v_bar > 0.0) {
        Field v = sim.signal();
        BoundaryRule rule = BoundaryRule::dirichlet(v_bar);
        o.grad_v_l4 = grad_lp_norm(v, 4.0, rule);
        o.grad_v_linf = grad_lp_norm(v, std::numeric_limits<double>::infinity(), rule);
    }
    const EllipticAudit& a = sim.last_audit();
    o.min_v = a.min_v;
    o.max_v = a.max_v;
    o.max_interior_v = a.max_interior_v;
    o.cg_iterations_last = sim.last_cg_iterations();
    o.max_identity_residual_scaled = worst_ident;
    o.max_energy_violation = worst_energy;
    return o;
}

} // namespace

Trajectory simulate(const ModelParams& params, const StepControl& ctl, double t_end,
                    double observe_interval, const std::vector<Observer>& observers,
                    const StopPredicate& stop) {
    require(t_end >= 0.0, "simulate: t_end must be >= 0");
    Simulator sim(params, ctl);
    Trajectory traj;
    const double eps_t = 1e-12 * std::max(1.0, t_end);

    double worst_ident = 0.0, worst_energy = 0.0;
    auto emit = [&]() {
        sim.refresh_signal();
        Observation o = make_observation(sim, worst_ident, worst_energy);
        traj.observations.push_back(o);
        for (const auto& f : observers) f(sim, o);
        worst_ident = worst_energy = 0.0;
    };

    emit();
    long k = 1;
    while (sim.time() < t_end - eps_t) {
        double next_obs = t_end;
        if (observe_interval > 0.0) {
            next_obs = std::min(t_end, observe_interval * static_cast<double>(k));
            while (next_obs <= sim.time() + eps_t && next_obs < t_end) {
                ++k;
                next_obs = std::min(t_end, observe_interval * static_cast<double>(k));
            }
        }
        StepStats st = sim.step(next_obs - sim.time());
        traj.last_stats = st;
        worst_ident = std::max(worst_ident, st.identity_residual / (1.0 + st.mass));
        worst_energy = std::max(worst_energy, sim.last_audit().inequality_violation());
        bool stop_now = stop && stop(st);
        if (stop_now) {
            traj.stopped_early = true;
            break;
        }
        if (sim.time() >= next_obs - eps_t) {
            emit();
            if (observe_interval > 0.0) ++k;
        }
    }
    if (traj.observations.back().t < sim.time() - eps_t) emit();

    sim.refresh_signal();
    traj.final_state = sim.state();
    traj.accumulators = sim.accumulators();
    return traj;
}

} // namespace chemofv

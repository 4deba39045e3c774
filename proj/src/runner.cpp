#include "chemofv/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>

#include "chemofv/snapshot.hpp"

namespace chemofv {

namespace fs = std::filesystem;

namespace {

// Pinned monitor tolerances (see README for the full ledger semantics).
constexpr double kMassBoundRel = 1e-12;      // mass cap slack factor
constexpr double kMassIdentTol = 1e-12;      // per-step balance residual, scaled
constexpr double kSignalRangeTol = 1e-9;     // absolute slack on 0 <= v <= v_bar
constexpr double kEnergyTol = 1e-9;          // absolute slack on the energy bound
constexpr double kEnergyGapRelTol = 1e-6;    // relative energy-identity gap
constexpr double kSubsolutionBase = 1e-6;    // base slack for the comparison bound
constexpr double kSubsolutionHFactor = 5.0;  // + factor * h^2
constexpr double kLyapTolBase = 1e-9;        // scaled slack for the difference bound
constexpr double kSteadyMarginTol = 1e-3;    // steady sandwich margin floor
constexpr double kRateR2Min = 0.99;          // required fit quality
constexpr double kAuditConsistencyTol = 1e-6;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt3(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

LogisticParams subsolution_params(const ModelParams& p) {
    return LogisticParams{p.lambda, p.mu + p.v_bar, p.u0.min()};
}

// ---------------------------------------------------------------------------
// timeseries.csv
// ---------------------------------------------------------------------------

void write_timeseries(const std::string& path, const Trajectory& traj,
                      const ModelParams& params, const std::vector<ErrorSample>* errors) {
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot open " + path);
    out << "t,mass,l2,linf,min_u,y_subsolution,grad_v_l4,err_u_l2,err_gradv_l2,"
           "margin_mass,margin_identity,margin_energy,margin_subsolution,"
           "margin_v_lower,margin_v_upper,margin_lyap,cg_iterations\n";

    const double cap = params.mass_cap();
    LogisticParams lp = subsolution_params(params);
    for (std::size_t i = 0; i < traj.observations.size(); ++i) {
        const Observation& o = traj.observations[i];
        double y = logistic_exact(lp, o.t);
        double err_u = nan_value(), err_gv = nan_value(), mlyap = nan_value();
        if (errors && i < errors->size()) {
            err_u = (*errors)[i].err_u;
            err_gv = (*errors)[i].err_gradv;
            mlyap = (*errors)[i].lyap_rhs - (*errors)[i].lyap_lhs;
        }
        out << fmt(o.t) << ',' << fmt(o.mass) << ',' << fmt(o.l2) << ',' << fmt(o.linf) << ','
            << fmt(o.min_u) << ',' << fmt(y) << ',' << fmt(o.grad_v_l4) << ',' << fmt(err_u)
            << ',' << fmt(err_gv) << ',' << fmt(cap * (1.0 + kMassBoundRel) - o.mass) << ','
            << fmt(kMassIdentTol - o.max_identity_residual_scaled) << ','
            << fmt(kEnergyTol - o.max_energy_violation) << ',' << fmt(o.min_u - y) << ','
            << fmt(o.min_v + kSignalRangeTol) << ','
            << fmt(params.v_bar + kSignalRangeTol - o.max_v) << ',' << fmt(mlyap) << ','
            << o.cg_iterations_last << '\n';
    }
    if (!out) throw SimulationError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Monitors shared by every trajectory-producing experiment
// ---------------------------------------------------------------------------

void add_trajectory_verdicts(InvariantReport& rep, const Trajectory& traj,
                             const ModelParams& params, const StepControl& ctl) {
    const RunAccumulators& a = traj.accumulators;
    const Grid& g = params.grid;

    rep.add("mass_bound", a.max_mass_excess <= 0.0, -a.max_mass_excess,
            kMassBoundRel,
            "max ||u||_1 = " + fmt3(a.max_mass) + " vs cap " + fmt3(a.mass_cap) +
                " (relative slack 1e-12)");
    rep.add("mass_identity", a.max_identity_residual_scaled <= kMassIdentTol,
            kMassIdentTol - a.max_identity_residual_scaled, kMassIdentTol,
            "per-step balance of d/dt ||u||_1 against lambda ||u||_1 - mu ||u||_2^2; worst scaled "
            "residual " +
                fmt3(a.max_identity_residual_scaled));
    rep.add("density_positive", a.min_u > 0.0, a.min_u, 0.0,
            "strict positivity of the density at every step; min " + fmt3(a.min_u));
    double range_margin =
        std::min(a.min_v + kSignalRangeTol, kSignalRangeTol - a.max_v_excess);
    rep.add("signal_max_principle", range_margin >= 0.0, range_margin, kSignalRangeTol,
            "0 <= v <= v_bar for every stored signal; min v " + fmt3(a.min_v) +
                ", max excess " + fmt3(a.max_v_excess));
    bool has_interior = g.nx() > 2 && (g.dim == 1 || g.ny() > 2);
    if (has_interior)
        rep.add("signal_interior_strict", a.max_interior_v_gap > 0.0, a.max_interior_v_gap, 0.0,
                "interior maximum of v stays strictly below v_bar (u > 0); smallest gap " +
                    fmt3(a.max_interior_v_gap));
    if (ctl.audit_every_solve) {
        rep.add("elliptic_energy_bound", a.max_energy_violation <= kEnergyTol,
                kEnergyTol - a.max_energy_violation, kEnergyTol,
                "face energy of the substituted signal vs v_bar^2 ||u||_1, audited on every "
                "solve; worst violation " +
                    fmt3(a.max_energy_violation));
        rep.add("elliptic_energy_identity", a.max_energy_gap_rel <= kEnergyGapRelTol,
                kEnergyGapRelTol - a.max_energy_gap_rel, kEnergyGapRelTol,
                "face energy against its interior-product form; worst relative gap " +
                    fmt3(a.max_energy_gap_rel));
    }
    rep.add("density_linf_cap", a.max_u < ctl.blowup_threshold,
            ctl.blowup_threshold - a.max_u, ctl.blowup_threshold,
            "uniform boundedness monitor; max ||u||_inf " + fmt3(a.max_u));

    // Comparison sub-solution, checked at every observation.
    LogisticParams lp = subsolution_params(params);
    double worst = std::numeric_limits<double>::infinity();
    for (const Observation& o : traj.observations)
        worst = std::min(worst, o.min_u - logistic_exact(lp, o.t));
    double hmax = std::max(g.h[0], g.dim == 2 ? g.h[1] : 0.0);
    double tol_sub = kSubsolutionBase + kSubsolutionHFactor * hmax * hmax;
    rep.add("logistic_subsolution", worst >= -tol_sub, worst + tol_sub, tol_sub,
            "min_x u >= logistic comparison solution at every observation; worst margin " +
                fmt3(worst) + " (slack 1e-6 + 5 h^2)");

    // Space-time window integrals over unit windows (recorded, finiteness asserted).
    double max_w_u2 = 0.0, max_w_gv4 = 0.0;
    {
        const auto& obs = traj.observations;
        for (std::size_t i0 = 0; i0 < obs.size(); ++i0) {
            double t0 = obs[i0].t, t1 = t0 + 1.0;
            KahanSum u2, gv4;
            bool complete = false;
            for (std::size_t i = i0 + 1; i < obs.size(); ++i) {
                double dt = obs[i].t - obs[i - 1].t;
                u2.add(0.5 * dt * (obs[i].l2 * obs[i].l2 + obs[i - 1].l2 * obs[i - 1].l2));
                double a4 = std::pow(obs[i].grad_v_l4, 4), b4 = std::pow(obs[i - 1].grad_v_l4, 4);
                gv4.add(0.5 * dt * (a4 + b4));
                if (obs[i].t >= t1 - 1e-12) {
                    complete = true;
                    break;
                }
            }
            if (!complete) break;
            max_w_u2 = std::max(max_w_u2, u2.value());
            max_w_gv4 = std::max(max_w_gv4, gv4.value());
        }
    }
    if (max_w_u2 > 0.0 || max_w_gv4 > 0.0) {
        rep.add("window_integrals_finite",
                std::isfinite(max_w_u2) && std::isfinite(max_w_gv4),
                std::isfinite(max_w_u2 + max_w_gv4) ? 1.0 : -1.0, 0.0,
                "unit-window space-time integrals of u^2 and |grad v|^4 stay finite");
        rep.record("window_int_u2_max", max_w_u2);
        rep.record("window_int_gradv4_max", max_w_gv4);
        if (params.v_bar > 0.0)
            rep.record("window_int_gradv4_over_vbar4", max_w_gv4 / std::pow(params.v_bar, 4));
    }

    // Empirical elliptic ratios (recorded, never asserted).
    double gn_max = 0.0, c1_max = 0.0;
    for (const Observation& o : traj.observations) {
        if (params.v_bar <= 0.0 || o.mass <= 0.0 || o.l2 <= 0.0 || o.l3 <= 0.0) continue;
        gn_max = std::max(gn_max, std::pow(o.grad_v_l4, 4) /
                                      (std::pow(params.v_bar, 4) * o.mass * o.l2 * o.l2));
        c1_max = std::max(c1_max, o.grad_v_linf / (params.v_bar * o.l3));
    }
    if (gn_max > 0.0) rep.record("gn_ratio_max", gn_max);
    if (c1_max > 0.0) rep.record("c1_ratio_max", c1_max);
    rep.record("cg_iterations_total", static_cast<double>(a.cg_iterations_total));
    rep.record("steps_total", static_cast<double>(a.steps));
}

void add_steady_verdicts(InvariantReport& rep, const SteadyState& ss,
                         const ModelParams& params, double tol_ss) {
    rep.add("steady_residual_converged", ss.converged, tol_ss - ss.residual, tol_ss,
            "pseudo-time residual " + fmt3(ss.residual) + " after t = " + fmt3(ss.marched_time) +
                " (" + std::to_string(ss.steps) + " steps)" +
                (ss.converged ? "" : "; time cap reached first"));
    const SteadyBoundReport& b = ss.bound_report;
    double sandwich = std::min(b.lower_margin, b.upper_margin);
    rep.add("steady_sandwich_bounds", sandwich >= -kSteadyMarginTol,
            sandwich + kSteadyMarginTol, kSteadyMarginTol,
            "two-sided pinch of U between exp(V - v_bar) lambda/mu and lambda/mu exp(V); "
            "margins lower " +
                fmt3(b.lower_margin) + ", upper " + fmt3(b.upper_margin));
    double vrange = std::min(b.v_min, b.v_upper_margin + kSignalRangeTol);
    rep.add("steady_signal_range", b.v_min > 0.0 && b.v_upper_margin >= -kSignalRangeTol, vrange,
            kSignalRangeTol,
            "0 < V <= v_bar cellwise; min V " + fmt3(b.v_min) + ", slack to v_bar " +
                fmt3(b.v_upper_margin));

    // Consistency of the pseudo-time residual with an independent evaluation
    // of the steady operator at the returned pair.
    Field rhs = density_rhs(ss.U, ss.V, params);
    double op_res = 0.0;
    for (double r : rhs.values) op_res = std::max(op_res, std::abs(r));
    double umax = ss.U.max();
    double cons_tol = tol_ss * (1.0 + params.lambda + 2.0 * params.mu * umax) + 1e-9;
    rep.add("steady_operator_consistency", op_res <= cons_tol, cons_tol - op_res, cons_tol,
            "max |rhs(U, V)| = " + fmt3(op_res) + " vs residual-consistency bound " +
                fmt3(cons_tol));
    rep.record("steady_operator_residual", op_res);
}

void add_trivial_state_verdicts(InvariantReport& rep, const ModelParams& params) {
    Field zero(params.grid, 0.0);
    Field vbar(params.grid, params.v_bar);
    SteadyResidualReport r = steady_residual_report(zero, vbar, params);
    double worst = std::max({r.u_residual_max, r.v_residual_max, r.dirichlet_mismatch});
    rep.add("trivial_state_residual", worst <= 1e-14, 1e-14 - worst, 1e-14,
            "(0, v_bar) annihilates the discrete steady operator exactly");

    if (params.lambda > 0.0) {
        double delta = 1e-3 * params.lambda / params.mu;
        InstabilityReport ir = check_instability_trivial(params, delta);
        bool pass = ir.mass_strictly_increasing && ir.relative_gap <= 0.01;
        rep.add("trivial_state_instability", pass, 0.01 - ir.relative_gap, 0.01,
                "mass grows from u = " + fmt3(delta) + " at rate " + fmt3(ir.measured_rate) +
                    " vs lambda delta |Omega| = " + fmt3(ir.expected_rate));
        rep.record("instability_rate_gap", ir.relative_gap);
    }
}

Observer make_snapshot_observer(const std::string& dir, const ModelParams& params,
                                std::shared_ptr<long> counter) {
    return [dir, &params, counter](const Simulator& sim, const Observation&) {
        Snapshot snap;
        snap.grid = sim.grid();
        snap.time = sim.time();
        snap.field_names = {"u", "v"};
        snap.fields = {sim.density(), sim.signal()};
        char name[64];
        std::snprintf(name, sizeof(name), "snap_%06ld.snap", *counter);
        ++*counter;
        write_snapshot(dir + "/" + name, snap);
    };
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

void run_simulate(const RunConfig& cfg, const std::string& dir, InvariantReport& rep) {
    ModelParams params = cfg.model_params();
    std::vector<Observer> observers;
    auto counter = std::make_shared<long>(0);
    if (cfg.write_snapshots) observers.push_back(make_snapshot_observer(dir, params, counter));

    Trajectory traj = simulate(params, cfg.control, cfg.t_end, cfg.observation_interval,
                               observers);
    write_timeseries(dir + "/timeseries.csv", traj, params, nullptr);
    add_trajectory_verdicts(rep, traj, params, cfg.control);
}

void run_steady(const RunConfig& cfg, const std::string& dir, InvariantReport& rep) {
    ModelParams params = cfg.model_params();
    Trajectory traj;
    SteadyState ss = find_steady(params, cfg.control, cfg.steady, cfg.observation_interval, {},
                                 &traj);
    write_timeseries(dir + "/timeseries.csv", traj, params, nullptr);

    Snapshot snap;
    snap.grid = params.grid;
    snap.time = ss.marched_time;
    snap.field_names = {"U", "V"};
    snap.fields = {ss.U, ss.V};
    write_snapshot(dir + "/steady.snap", snap);

    add_trajectory_verdicts(rep, traj, params, cfg.control);
    add_steady_verdicts(rep, ss, params, cfg.steady.tol);
    add_trivial_state_verdicts(rep, params);
    rep.record("steady_marched_time", ss.marched_time);
    rep.record("steady_bound_lower_margin", ss.bound_report.lower_margin);
    rep.record("steady_bound_upper_margin", ss.bound_report.upper_margin);
}

void run_convergence(const RunConfig& cfg, const std::string& dir, InvariantReport& rep) {
    ModelParams params = cfg.model_params();
    SteadyState ss = find_steady(params, cfg.control, cfg.steady);

    ConvergenceOptions copts = cfg.convergence;
    copts.t_end = cfg.t_end;
    copts.observe_interval = cfg.observation_interval;
    // Keep the fit window clear of the pseudo-time residual plateau.
    copts.error_floor = std::max(copts.error_floor, 100.0 * cfg.steady.tol);

    std::vector<Observer> extra;
    auto counter = std::make_shared<long>(0);
    if (cfg.write_snapshots) extra.push_back(make_snapshot_observer(dir, params, counter));

    ConvergenceReport crep = convergence_experiment(params, cfg.control, ss, copts, extra);
    write_timeseries(dir + "/timeseries.csv", crep.trajectory, params, &crep.series);

    Snapshot snap;
    snap.grid = params.grid;
    snap.time = ss.marched_time;
    snap.field_names = {"U", "V"};
    snap.fields = {ss.U, ss.V};
    write_snapshot(dir + "/steady.snap", snap);

    add_trajectory_verdicts(rep, crep.trajectory, params, cfg.control);
    add_steady_verdicts(rep, ss, params, cfg.steady.tol);

    double lyap_scale = 0.0;
    for (const auto& s : crep.series) lyap_scale = std::max(lyap_scale, s.lyap_rhs);
    double lyap_tol = kLyapTolBase * (1.0 + lyap_scale);
    rep.add("lyapunov_difference_bound", crep.max_lyap_violation <= lyap_tol,
            lyap_tol - crep.max_lyap_violation, lyap_tol,
            "gradient-energy difference bound at every observation; worst violation " +
                fmt3(crep.max_lyap_violation));

    if (crep.started_at_steady) {
        double worst = 0.0;
        for (const auto& s : crep.series) worst = std::max(worst, s.err_u);
        double tol0 = 10.0 * cfg.steady.tol;
        rep.add("error_decay_rate", worst <= std::max(tol0, copts.error_floor),
                std::max(tol0, copts.error_floor) - worst, tol0,
                "started at the steady state; error stayed at " + fmt3(worst));
    } else {
        bool fit_ok = crep.fit_u.has_value() && crep.fit_u->rate > 0.0 &&
                      crep.fit_u->r_squared >= kRateR2Min;
        bool pass = fit_ok && crep.rate_certified_pass;
        double margin = crep.f_value > 0.0
                            ? crep.fitted_rate_sq - 0.75 * crep.predicted_rate_sq
                            : crep.fitted_rate_sq;
        std::string det = "squared-error decay rate " + fmt3(crep.fitted_rate_sq) +
                          " vs certified floor 2 mu F = " + fmt3(crep.predicted_rate_sq) +
                          " (25% slack), r^2 = " +
                          (crep.fit_u ? fmt3(crep.fit_u->r_squared) : std::string("n/a")) +
                          ", F = " + fmt3(crep.f_value);
        rep.add("error_decay_rate", pass, margin, 0.0, det);
        bool gv_ok = crep.fit_gradv.has_value() && crep.fit_gradv->rate > 0.0;
        rep.add("gradv_decay_rate", gv_ok, crep.fit_gradv ? crep.fit_gradv->rate : -1.0, 0.0,
                "gradient-error decay rate " +
                    (crep.fit_gradv ? fmt3(crep.fit_gradv->rate) : std::string("n/a")));
        rep.add("error_monotone_tail", crep.monotone_after_transient,
                crep.monotone_after_transient ? 1.0 : -1.0, 0.0,
                "both error series decrease monotonically after the transient");
    }
    rep.record("c22_estimate", crep.c22_estimate);
    rep.record("decay_functional", crep.f_value);
    rep.record("predicted_rate_sq", crep.predicted_rate_sq);
    rep.record("fitted_rate_sq", crep.fitted_rate_sq);
    rep.record("eps1", crep.eps1);

    if (cfg.emit_plots) emit_convergence_plots(crep, dir);
}

void run_sweep(const RunConfig& cfg, const std::string& dir, InvariantReport& rep) {
    ModelParams base = cfg.model_params();
    SweepOptions sopts;
    sopts.steady = cfg.steady;
    sopts.convergence = cfg.convergence;
    sopts.convergence.t_end = cfg.t_end;
    sopts.convergence.observe_interval = cfg.observation_interval;
    sopts.convergence.error_floor =
        std::max(sopts.convergence.error_floor, 100.0 * cfg.steady.tol);
    sopts.parallel = cfg.sweep_parallel;

    SweepReport srep = threshold_sweep(base, cfg.v_bar_grid, cfg.control, sopts);

    std::ofstream out(dir + "/sweep.csv");
    if (!out) throw SimulationError("cannot open sweep.csv");
    out << "v_bar,f_value,f_value_row_c22,predicted_rate,fitted_rate,fitted_r2,certified,"
           "observed_converged,steady_converged,err_u_initial,err_u_final,c22\n";
    for (const auto& r : srep.rows) {
        out << fmt(r.v_bar) << ',' << fmt(r.f_value) << ',' << fmt(r.f_value_row_c22) << ','
            << fmt(r.predicted_rate_sq) << ',' << fmt(r.fitted_rate_sq) << ','
            << fmt(r.fitted_r2) << ',' << (r.certified ? 1 : 0) << ','
            << (r.observed_converged ? 1 : 0) << ',' << (r.steady_converged ? 1 : 0) << ','
            << fmt(r.err_u_initial) << ',' << fmt(r.err_u_final) << ',' << fmt(r.c22_estimate)
            << '\n';
    }
    out.close();

    bool rows_ok = true;
    for (const auto& r : srep.rows)
        if (!r.error.empty()) rows_ok = false;
    rep.add("sweep_rows_ok", rows_ok, rows_ok ? 1.0 : -1.0, 0.0,
            rows_ok ? "every row completed" : "at least one row failed; see sweep.csv");

    bool monotone = true;
    for (std::size_t i = 1; i < srep.rows.size(); ++i) {
        if (srep.rows[i].v_bar > srep.rows[i - 1].v_bar &&
            !(srep.rows[i].f_value < srep.rows[i - 1].f_value))
            monotone = false;
    }
    rep.add("sweep_f_monotone", monotone, monotone ? 1.0 : -1.0, 0.0,
            "decay functional decreases along increasing v_bar (common empirical constant)");
    rep.record("largest_certified_v_bar", srep.largest_certified);
    rep.record("largest_observed_v_bar", srep.largest_observed);

    if (cfg.emit_plots) emit_sweep_plots(srep, dir);
}

void run_audit(const RunConfig& cfg, const std::string& dir, InvariantReport& rep) {
    Snapshot snap = read_snapshot(cfg.audit_snapshot);
    (void)dir;

    bool finite = true;
    for (const auto& f : snap.fields) finite = finite && f.all_finite();
    rep.add("snapshot_fields_finite", finite, finite ? 1.0 : -1.0, 0.0,
            "all stored fields are finite");
    if (!finite) return;

    const Field* u = snap.find("u");
    const Field* v = snap.find("v");
    const Field* U = snap.find("U");
    const Field* V = snap.find("V");
    const double v_bar = cfg.v_bar;

    if (u != nullptr)
        rep.add("density_positive", u->min() > 0.0, u->min(), 0.0,
                "stored density is strictly positive; min " + fmt3(u->min()));

    auto check_signal = [&](const Field& sig, const Field* dens, const char* tag) {
        double vmin = sig.min(), vmax = sig.max();
        double margin = std::min(vmin + kSignalRangeTol, v_bar + kSignalRangeTol - vmax);
        rep.add(std::string(tag) + "_max_principle", margin >= 0.0, margin, kSignalRangeTol,
                "stored signal must satisfy 0 <= v <= v_bar (elliptic maximum principle); "
                "range [" +
                    fmt3(vmin) + ", " + fmt3(vmax) + "] vs v_bar " + fmt3(v_bar));
        const Grid& g = sig.grid;
        bool has_interior = g.nx() > 2 && (g.dim == 1 || g.ny() > 2);
        if (dens != nullptr && dens->min() > 0.0 && has_interior) {
            double vmax_int = -std::numeric_limits<double>::infinity();
            for (int iy = (g.dim == 2 ? 1 : 0); iy < (g.dim == 2 ? g.ny() - 1 : 1); ++iy)
                for (int ix = 1; ix < g.nx() - 1; ++ix)
                    vmax_int = std::max(vmax_int, sig(ix, iy));
            rep.add(std::string(tag) + "_interior_strict", vmax_int < v_bar, v_bar - vmax_int,
                    0.0, "interior maximum " + fmt3(vmax_int) + " must stay below v_bar");
        }
    };

    if (v != nullptr) check_signal(*v, u, "signal");
    if (u != nullptr && v != nullptr) {
        // Operator-level consistency of the stored pair.
        const Grid& g = u->grid;
        std::vector<double> z(g.cell_count()), az;
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = v_bar - v->values[i];
        Field uc = *u;
        for (double& x : uc.values) x = x < 0.0 ? 0.0 : x;
        apply_shifted_laplacian(uc, z, az, g);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            double b = v_bar * uc.values[i];
            num += (az[i] - b) * (az[i] - b);
            den += b * b;
        }
        double rel = den > 0.0 ? std::sqrt(num / den) : 0.0;
        rep.add("signal_consistency", rel <= kAuditConsistencyTol, kAuditConsistencyTol - rel,
                kAuditConsistencyTol,
                "stored signal solves the discrete signal equation for the stored density; "
                "relative residual " +
                    fmt3(rel));
    }

    if (U != nullptr && V != nullptr) {
        ModelParams p;
        p.lambda = cfg.lambda;
        p.mu = cfg.mu;
        p.v_bar = v_bar;
        p.grid = U->grid;
        p.u0 = *U;  // only bounds are evaluated; u0 positivity checked separately
        SteadyBoundReport b = steady_bound_report(*U, *V, p);
        double sandwich = std::min(b.lower_margin, b.upper_margin);
        rep.add("steady_sandwich_bounds", sandwich >= -kSteadyMarginTol,
                sandwich + kSteadyMarginTol, kSteadyMarginTol,
                "stored steady pair satisfies the two-sided pinch; margins lower " +
                    fmt3(b.lower_margin) + ", upper " + fmt3(b.upper_margin));
        check_signal(*V, U, "steady_signal");
    }
}

} // namespace

RunResult run(const RunConfig& cfg) {
    RunConfig effective = cfg;
    if (const char* env = std::getenv("CHEMOFV_OUTPUT_DIR"); env != nullptr && *env != '\0')
        effective.output_dir = env;
    effective.validate();

    RunResult result;
    result.output_dir = effective.output_dir;
    result.report.experiment = effective.experiment;
    result.report.oracle_mode = effective.dim == 1;

    fs::create_directories(effective.output_dir);

    try {
        if (effective.experiment == "simulate")
            run_simulate(effective, effective.output_dir, result.report);
        else if (effective.experiment == "steady")
            run_steady(effective, effective.output_dir, result.report);
        else if (effective.experiment == "convergence")
            run_convergence(effective, effective.output_dir, result.report);
        else if (effective.experiment == "sweep")
            run_sweep(effective, effective.output_dir, result.report);
        else if (effective.experiment == "audit")
            run_audit(effective, effective.output_dir, result.report);
        else
            throw std::invalid_argument("unknown experiment: " + effective.experiment);
    } catch (const SimulationError& e) {
        result.report.abort_reason = e.what();
    }

    write_report(effective.output_dir + "/report.json", result.report);
    if (!result.report.abort_reason.empty())
        result.exit_code = 2;
    else
        result.exit_code = result.report.all_pass() ? 0 : 1;
    return result;
}

void emit_convergence_plots(const ConvergenceReport& rep, const std::string& dir) {
    {
        std::ofstream out(dir + "/error_decay.dat");
        if (!out) throw SimulationError("cannot open error_decay.dat");
        out << "# t err_u_l2 err_gradv_l2 certified_envelope\n";
        double t_ref = rep.fit_u ? rep.fit_u->t_lo : 0.0;
        double e_ref = 0.0;
        for (const auto& s : rep.series)
            if (s.t >= t_ref) {
                e_ref = s.err_u;
                break;
            }
        for (const auto& s : rep.series) {
            double env = nan_value();
            if (rep.f_value > 0.0 && s.t >= t_ref && e_ref > 0.0)
                env = e_ref * std::exp(-0.5 * rep.predicted_rate_sq * (s.t - t_ref));
            out << fmt(s.t) << ' ' << fmt(s.err_u) << ' ' << fmt(s.err_gradv) << ' ' << fmt(env)
                << '\n';
        }
    }
    std::ofstream gp(dir + "/error_decay.gp");
    if (!gp) throw SimulationError("cannot open error_decay.gp");
    gp << "set logscale y\n"
          "set xlabel 't'\n"
          "set ylabel 'error'\n"
          "set key left bottom\n"
          "plot 'error_decay.dat' using 1:2 with lines title '||u - U||_2', \\\n"
          "     'error_decay.dat' using 1:3 with lines title '||grad(v - V)||_2', \\\n"
          "     'error_decay.dat' using 1:4 with lines dashtype 2 title 'certified envelope'\n";
}

void emit_sweep_plots(const SweepReport& rep, const std::string& dir) {
    {
        std::ofstream out(dir + "/threshold.dat");
        if (!out) throw SimulationError("cannot open threshold.dat");
        out << "# v_bar f_value predicted_rate fitted_rate\n";
        for (const auto& r : rep.rows)
            out << fmt(r.v_bar) << ' ' << fmt(r.f_value) << ' ' << fmt(r.predicted_rate_sq) << ' '
                << fmt(r.fitted_rate_sq) << '\n';
    }
    std::ofstream gp(dir + "/threshold.gp");
    if (!gp) throw SimulationError("cannot open threshold.gp");
    gp << "set xlabel 'v_bar'\n"
          "set ylabel 'rate'\n"
          "set key left bottom\n"
          "plot 'threshold.dat' using 1:2 with linespoints title 'decay functional', \\\n"
          "     'threshold.dat' using 1:3 with linespoints title 'certified rate', \\\n"
          "     'threshold.dat' using 1:4 with linespoints title 'fitted rate'\n";
}

} // namespace chemofv

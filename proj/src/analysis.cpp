#include "chemofv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "chemofv/gradient.hpp"
#include "chemofv/norms.hpp"

namespace chemofv {

double logistic_exact(const LogisticParams& p, double t) {
    p.validate();
    require(t >= 0.0, "logistic_exact: t must be >= 0");
    const double lam = p.growth, k = p.damping, y0 = p.y0;
    if (lam == 0.0) return y0 / (1.0 + k * y0 * t);
    // lam y0 e^{lam t} / (lam + k y0 (e^{lam t} - 1)), rewritten with e^{-lam t}
    // so large t cannot overflow.
    double e = std::exp(-lam * t);
    return lam * y0 / (lam * e + k * y0 * (1.0 - e));
}

namespace {

// Adaptive Simpson with absolute tolerance, recursion-depth capped.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate_adaptive(const F& f, double a, double b, double tol) {
    if (a >= b) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

// integral_Y^inf dy / (a y^theta - b) as a convergent series, valid when
// a Y^theta >= 2 b:
//   1/(a y^t - b) = sum_k b^k a^{-(k+1)} y^{-t(k+1)}.
double tail_integral(double a, double b, double theta, double Y) {
    double sum = 0.0;
    double bk = 1.0;  // b^k
    for (int k = 0; k < 200; ++k) {
        double expo = theta * (k + 1) - 1.0;
        double term = bk / std::pow(a, k + 1) * std::pow(Y, -expo) / expo;
        sum += term;
        if (term < 1e-18 * sum) break;
        bk *= b;
    }
    return sum;
}

} // namespace

double ode_comparison_bound(double a, double b, double tau, double theta) {
    require(a > 0.0 && b > 0.0 && tau > 0.0, "ode_comparison_bound: a, b, tau must be > 0");
    require(theta > 1.0, "ode_comparison_bound: theta must be > 1 (integral diverges otherwise)");

    const double y_star = std::pow(b / a, 1.0 / theta);

    // G(z) = integral_z^inf dy/(a y^theta - b), finite and decreasing on
    // (y_star, inf). Split at Y with a Y^theta >= 4b; analytic series tail.
    auto G = [&](double z) {
        double Y = std::max(z, std::pow(4.0 * b / a, 1.0 / theta));
        double head = 0.0;
        if (Y > z) {
            auto f = [&](double y) { return 1.0 / (a * std::pow(y, theta) - b); };
            head = integrate_adaptive(f, z, Y, 1e-14 * (1.0 + tau));
        }
        return head + tail_integral(a, b, theta, Y);
    };

    // Bracket the root of G(z) = tau. G blows up as z -> y_star+ and decays
    // to zero, so a bracket always exists.
    double lo = y_star * (1.0 + 1e-9) + 1e-300;
    if (G(lo) <= tau) return std::max(y_star, lo);
    double hi = std::max(2.0 * y_star, y_star + 1.0);
    while (G(hi) > tau) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw SimulationError("ode_comparison_bound: bracket failed");
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (G(mid) > tau)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-10 * hi) break;
    }
    double z_star = 0.5 * (lo + hi);
    return std::max(y_star, z_star);
}

void DecayRateParams::validate() const {
    require(lambda >= 0.0 && mu > 0.0 && v_bar >= 0.0, "DecayRateParams: invalid model constants");
    require(inf_u0 > 0.0, "DecayRateParams: inf_u0 must be > 0");
    require(c22_estimate >= 0.0, "DecayRateParams: c22_estimate must be >= 0");
    double cap = std::min(inf_u0, lambda / (mu + v_bar));
    require(eps1 > 0.0 && eps1 <= cap,
            "DecayRateParams: eps1 must lie in (0, min(inf u0, lambda/(mu+v_bar))]");
}

double decay_functional(const DecayRateParams& p) {
    p.validate();
    const double lam = p.lambda, mu = p.mu, vb = p.v_bar;
    double head = std::min(p.inf_u0, lam / (mu + vb));
    double drop = std::exp(-vb) * lam / mu - lam / mu;
    double taxis_term = vb * vb * p.c22_estimate / mu;
    double coupling_term = vb * vb * lam * lam * std::exp(2.0 * vb) / (4.0 * p.eps1 * mu * mu * mu);
    return head + drop - taxis_term - coupling_term;
}

RateFit fit_decay_rate(std::span<const std::pair<double, double>> series, double t_lo,
                       double t_hi) {
    require(t_lo < t_hi, "fit_decay_rate: empty window");
    std::vector<std::pair<double, double>> pts;
    for (const auto& [t, v] : series) {
        if (t < t_lo || t > t_hi) continue;
        if (!(v > 0.0))
            throw std::invalid_argument(
                "fit_decay_rate: nonpositive value in window; shrink the window");
        pts.emplace_back(t, std::log(v));
    }
    require(pts.size() >= 10, "fit_decay_rate: need at least 10 samples in the window");

    double n = static_cast<double>(pts.size());
    double st = 0, sy = 0;
    for (auto& [t, y] : pts) {
        st += t;
        sy += y;
    }
    double tbar = st / n, ybar = sy / n;
    double stt = 0, sty = 0, syy = 0;
    for (auto& [t, y] : pts) {
        double dt = t - tbar, dy = y - ybar;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    require(stt > 0.0, "fit_decay_rate: degenerate time samples");
    double slope = sty / stt;
    double ss_res = syy - slope * sty;

    RateFit fit;
    fit.rate = -slope;
    fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    fit.samples = static_cast<int>(pts.size());
    return fit;
}

DifferenceDiagnostics difference_diagnostics(const SimState& state, const SteadyState& ss,
                                             const DecayRateParams& p) {
    const Grid& g = state.u.grid;
    require(ss.U.grid == g && state.v.grid == g, "difference_diagnostics: grid mismatch");
    p.validate();

    Field du(g), dv(g);
    for (std::size_t i = 0; i < du.values.size(); ++i) {
        du.values[i] = state.u.values[i] - ss.U.values[i];
        dv.values[i] = state.v.values[i] - ss.V.values[i];
    }

    DifferenceDiagnostics d;
    d.err_u_l2 = lp_norm(du, 2.0);
    double grad_energy = dirichlet_energy(dv, BoundaryRule::dirichlet(0.0));
    d.err_gradv_l2 = std::sqrt(std::max(0.0, grad_energy));

    KahanSum absorb;
    for (std::size_t i = 0; i < du.values.size(); ++i) {
        double vv = dv.values[i];
        absorb.add((state.u.values[i] - p.eps1) * vv * vv);
    }
    d.lyap_lhs = grad_energy + absorb.value() * g.cell_volume();
    double vinf = lp_norm(ss.V, std::numeric_limits<double>::infinity());
    d.lyap_rhs = vinf * vinf / (4.0 * p.eps1) * d.err_u_l2 * d.err_u_l2;
    return d;
}

ConvergenceReport convergence_experiment(const ModelParams& params, const StepControl& ctl,
                                         const SteadyState& ss, const ConvergenceOptions& opts,
                                         const std::vector<Observer>& extra_observers) {
    require(ss.U.grid == params.grid, "convergence_experiment: steady state grid mismatch");

    ConvergenceReport rep;
    rep.v_bar = params.v_bar;
    rep.eps1 = DecayRateParams::default_eps1(params.u0.min(), params.lambda, params.mu,
                                             params.v_bar);

    DecayRateParams p;
    p.eps1 = rep.eps1;
    p.c22_estimate = 0.0;
    p.inf_u0 = params.u0.min();
    p.lambda = params.lambda;
    p.mu = params.mu;
    p.v_bar = params.v_bar;

    double sup_gradv_ratio = 0.0;
    std::vector<Observer> observers;
    observers.push_back([&](const Simulator& sim, const Observation& o) {
        SimState st = sim.state();
        DifferenceDiagnostics d = difference_diagnostics(st, ss, p);
        rep.series.push_back({o.t, d.err_u_l2, d.err_gradv_l2, d.lyap_lhs, d.lyap_rhs});
        rep.max_lyap_violation = std::max(rep.max_lyap_violation, d.violation());
        if (params.v_bar > 0.0)
            sup_gradv_ratio = std::max(sup_gradv_ratio, o.grad_v_linf / params.v_bar);
    });
    for (const auto& f : extra_observers) observers.push_back(f);

    rep.trajectory = simulate(params, ctl, opts.t_end, opts.observe_interval, observers);

    rep.err_u_initial = rep.series.front().err_u;
    rep.err_u_final = rep.series.back().err_u;
    rep.c22_estimate = sup_gradv_ratio * sup_gradv_ratio;
    p.c22_estimate = rep.c22_estimate;
    rep.f_value = decay_functional(p);
    rep.predicted_rate_sq = 2.0 * params.mu * rep.f_value;

    const double floor = std::max(opts.error_floor,
                                  1e3 * std::numeric_limits<double>::epsilon() *
                                      std::max(rep.err_u_initial, lp_norm(ss.U, 2.0)));
    rep.started_at_steady = rep.err_u_initial <= floor;
    if (rep.started_at_steady) return rep;

    // Fit window: from the end of the transient down to the roundoff /
    // steady-residual plateau.
    double t_lo = rep.series.front().t, t_hi = rep.series.back().t;
    bool found_lo = false;
    for (const auto& s : rep.series) {
        if (!found_lo && s.err_u <= opts.fit_drop_factor * rep.err_u_initial) {
            t_lo = s.t;
            found_lo = true;
        }
        if (found_lo && s.err_u <= floor) {
            t_hi = s.t;
            break;
        }
    }
    if (found_lo && t_hi > t_lo) {
        std::vector<std::pair<double, double>> su, sg;
        for (const auto& s : rep.series) {
            if (s.t < t_lo || s.t > t_hi) continue;
            su.emplace_back(s.t, s.err_u);
            if (s.err_gradv > 0.0) sg.emplace_back(s.t, s.err_gradv);
        }
        if (su.size() >= 10) {
            rep.fit_u = fit_decay_rate(su, t_lo, t_hi);
            rep.fitted_rate_sq = 2.0 * rep.fit_u->rate;
        }
        if (sg.size() >= 10) rep.fit_gradv = fit_decay_rate(sg, t_lo, t_hi);
    }

    // Monotone decrease after the transient (tiny slack for roundoff plateaus).
    rep.monotone_after_transient = found_lo;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& s : rep.series) {
        if (s.t < t_lo) continue;
        if (s.err_u > prev * (1.0 + 1e-9) && s.err_u > floor)
            rep.monotone_after_transient = false;
        prev = s.err_u;
    }

    if (rep.f_value > 0.0)
        rep.rate_certified_pass =
            rep.fit_u && rep.fitted_rate_sq >= (1.0 - opts.rate_slack) * rep.predicted_rate_sq;
    else
        rep.rate_certified_pass = true;  // nothing certified, nothing to miss
    return rep;
}

SweepReport threshold_sweep(const ModelParams& base, std::span<const double> v_bar_grid,
                            const StepControl& ctl, const SweepOptions& opts) {
    auto run_row = [&](double vb) {
        SweepRow row;
        row.v_bar = vb;
        try {
            ModelParams params = base;
            params.v_bar = vb;
            SteadyState ss = find_steady(params, ctl, opts.steady);
            row.steady_converged = ss.converged;
            ConvergenceReport rep = convergence_experiment(params, ctl, ss, opts.convergence);
            row.f_value = rep.f_value;
            row.predicted_rate_sq = rep.predicted_rate_sq;
            row.fitted_rate_sq = rep.fitted_rate_sq;
            row.fitted_r2 = rep.fit_u ? rep.fit_u->r_squared : 0.0;
            row.certified = rep.f_value > 0.0;
            row.err_u_initial = rep.err_u_initial;
            row.err_u_final = rep.err_u_final;
            row.c22_estimate = rep.c22_estimate;
            row.observed_converged =
                rep.err_u_final <= std::max(1e-4 * rep.err_u_initial, 1e-8);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    };

    SweepReport report;
    if (opts.parallel && v_bar_grid.size() > 1) {
        std::vector<std::future<SweepRow>> futs;
        futs.reserve(v_bar_grid.size());
        for (double vb : v_bar_grid)
            futs.push_back(std::async(std::launch::async, run_row, vb));
        for (auto& f : futs) report.rows.push_back(f.get());
    } else {
        for (double vb : v_bar_grid) report.rows.push_back(run_row(vb));
    }

    // Re-evaluate every row's certificate with the sweep-wide constant (the
    // worst per-row c22). This keeps the certificate sufficient and makes the
    // published F column monotone in v_bar regardless of per-row sampling.
    double c22_common = 0.0;
    for (const auto& r : report.rows)
        if (r.error.empty()) c22_common = std::max(c22_common, r.c22_estimate);
    const double inf_u0 = base.u0.min();
    for (auto& r : report.rows) {
        if (!r.error.empty()) continue;
        r.f_value_row_c22 = r.f_value;
        DecayRateParams p;
        p.eps1 = DecayRateParams::default_eps1(inf_u0, base.lambda, base.mu, r.v_bar);
        p.c22_estimate = c22_common;
        p.inf_u0 = inf_u0;
        p.lambda = base.lambda;
        p.mu = base.mu;
        p.v_bar = r.v_bar;
        r.f_value = decay_functional(p);
        r.predicted_rate_sq = 2.0 * base.mu * r.f_value;
        r.certified = r.f_value > 0.0;
    }

    for (const auto& r : report.rows) {
        if (r.error.empty() && r.certified)
            report.largest_certified = std::max(report.largest_certified, r.v_bar);
        if (r.error.empty() && r.observed_converged)
            report.largest_observed = std::max(report.largest_observed, r.v_bar);
    }
    return report;
}

} // namespace chemofv

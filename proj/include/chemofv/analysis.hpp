/// @file analysis.hpp
/// @brief Verification harness: logistic comparison oracle, the ODE-envelope
///        constant, the decay functional and its certified threshold, decay
///        rate fitting, and the difference-system diagnostics.
#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "chemofv/evolve.hpp"
#include "chemofv/steady.hpp"

namespace chemofv {

/// Parameters of y' = growth * y - damping * y^2 (damping = mu + v_bar for the
/// comparison sub-solution; any positive damping otherwise).
struct LogisticParams {
    double growth = 0.0;
    double damping = 1.0;
    double y0 = 1.0;

    void validate() const {
        require(damping > 0.0, "LogisticParams: damping must be > 0");
        require(y0 > 0.0, "LogisticParams: y0 must be > 0");
        require(growth >= 0.0, "LogisticParams: growth must be >= 0");
    }
};

/// Closed-form logistic solution, written in an overflow-safe form.
double logistic_exact(const LogisticParams& p, double t);

/// The envelope constant for y' + a y^theta <= b: every solution satisfies
/// y(t) <= max((b/a)^(1/theta), z*) for t > tau, where z* is the unique root
/// of integral_z^inf dy/(a y^theta - b) = tau. The improper integral is
/// evaluated by adaptive quadrature plus an analytic series tail; the root is
/// found by bisection to relative 1e-10. Requires theta > 1.
double ode_comparison_bound(double a, double b, double tau, double theta);

struct DecayRateParams {
    double eps1 = 0.0;          ///< in (0, min(inf u0, lambda/(mu + v_bar)))
    double c22_estimate = 0.0;  ///< empirical (sup_t ||grad v||_inf / v_bar)^2
    double inf_u0 = 0.0;
    double lambda = 1.0;
    double mu = 1.0;
    double v_bar = 0.0;

    /// Midpoint of the admissible interval.
    static double default_eps1(double inf_u0, double lambda, double mu, double v_bar) {
        return 0.5 * std::min(inf_u0, lambda / (mu + v_bar));
    }
    void validate() const;
};

/// The decay functional: positivity certifies exponential convergence of the
/// squared L2 error at rate 2 mu F. Negative values are meaningful (outside
/// the certified regime), so no error is raised for them.
double decay_functional(const DecayRateParams& p);

struct RateFit {
    double rate = 0.0;       ///< minus the least-squares slope of log(value) vs t
    double r_squared = 1.0;
    double t_lo = 0.0, t_hi = 0.0;
    int samples = 0;
};

/// Least-squares exponential-rate fit over samples with t in [t_lo, t_hi].
/// Requires at least 10 samples in the window, all values > 0.
RateFit fit_decay_rate(std::span<const std::pair<double, double>> series, double t_lo,
                       double t_hi);

/// Norms of the deviation from a steady state plus the two sides of the
/// audited Lyapunov-type inequality
///   ||grad(v-V)||_2^2 + sum (u - eps1)(v-V)^2 <= ||V||_inf^2/(4 eps1) ||u-U||_2^2.
/// The gradient term uses the face-based energy so the discrete identity
/// behind the inequality holds exactly up to the linear-solve tolerance.
struct DifferenceDiagnostics {
    double err_u_l2 = 0.0;
    double err_gradv_l2 = 0.0;
    double lyap_lhs = 0.0;
    double lyap_rhs = 0.0;
    double violation() const { return lyap_lhs > lyap_rhs ? lyap_lhs - lyap_rhs : 0.0; }
};
DifferenceDiagnostics difference_diagnostics(const SimState& state, const SteadyState& ss,
                                             const DecayRateParams& p);

struct ConvergenceOptions {
    double t_end = 40.0;
    double observe_interval = 0.25;
    double fit_drop_factor = 0.1;  ///< window starts when the error first falls below this fraction
    double error_floor = 1e-8;     ///< window ends when the error first falls below this
    double rate_slack = 0.25;      ///< certified-rate comparison slack
};

struct ErrorSample {
    double t = 0.0;
    double err_u = 0.0;
    double err_gradv = 0.0;
    double lyap_lhs = 0.0;
    double lyap_rhs = 0.0;
};

struct ConvergenceReport {
    double v_bar = 0.0;
    std::vector<ErrorSample> series;
    Trajectory trajectory;
    double err_u_initial = 0.0;
    double err_u_final = 0.0;
    bool started_at_steady = false;

    double eps1 = 0.0;
    double c22_estimate = 0.0;
    double f_value = 0.0;           ///< decay functional with the measured c22
    double predicted_rate_sq = 0.0; ///< 2 mu F (floor for the squared-error rate)

    std::optional<RateFit> fit_u;      ///< fit of log ||u-U||_2
    double fitted_rate_sq = 0.0;       ///< 2 * fit_u.rate, comparable to predicted_rate_sq
    std::optional<RateFit> fit_gradv;

    double max_lyap_violation = 0.0;
    bool monotone_after_transient = false;
    bool rate_certified_pass = false;  ///< fitted_rate_sq >= (1-slack) predicted when F > 0
};

/// Run the evolution against a precomputed steady state, record the error
/// series, fit decay rates, and compare against the certified floor.
/// extra_observers run after the internal one at each observation.
ConvergenceReport convergence_experiment(const ModelParams& params, const StepControl& ctl,
                                         const SteadyState& ss,
                                         const ConvergenceOptions& opts = {},
                                         const std::vector<Observer>& extra_observers = {});

struct SweepRow {
    double v_bar = 0.0;
    bool steady_converged = false;
    /// Decay functional with the sweep-wide common empirical constant (the
    /// largest per-row c22); a sufficient certificate that is also provably
    /// monotone along the grid. f_value_row_c22 keeps the per-row value.
    double f_value = 0.0;
    double f_value_row_c22 = 0.0;
    double predicted_rate_sq = 0.0;
    double fitted_rate_sq = 0.0;
    double fitted_r2 = 0.0;
    bool certified = false;           ///< F > 0 (common-constant value)
    bool observed_converged = false;  ///< error series actually decayed
    double err_u_initial = 0.0;
    double err_u_final = 0.0;
    double c22_estimate = 0.0;        ///< per-row measured constant
    std::string error;                ///< non-empty if the row failed outright
};

struct SweepReport {
    std::vector<SweepRow> rows;
    /// Largest v_bar whose row is certified (F > 0); negative if none.
    double largest_certified = -1.0;
    /// Largest v_bar with observed convergence; negative if none. May exceed
    /// the certified threshold: the certificate is sufficient, not necessary.
    double largest_observed = -1.0;
};

struct SweepOptions {
    SteadyOptions steady;
    ConvergenceOptions convergence;
    bool parallel = true;
};

/// One convergence experiment per v_bar value; rows run concurrently and are
/// assembled in grid order. Row failures are recorded, not fatal.
SweepReport threshold_sweep(const ModelParams& base, std::span<const double> v_bar_grid,
                            const StepControl& ctl, const SweepOptions& opts = {});

} // namespace chemofv

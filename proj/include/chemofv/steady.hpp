/// @file steady.hpp
/// @brief Positive steady states by pseudo-time marching, the two-sided
///        steady-state bounds, and checks around the trivial state (0, v_bar).
#pragma once

#include "chemofv/evolve.hpp"

namespace chemofv {

/// Cellwise margins of the steady-state sandwich
///   e^(V - v_bar) lambda/mu <= U <= lambda/mu e^V,   0 < V <= v_bar.
/// All margins are >= 0 for the exact solution; discrete margins may dip
/// slightly negative and must improve under grid refinement.
struct SteadyBoundReport {
    double lower_margin = 0.0;    ///< min over cells of U - e^(V - v_bar) lambda/mu
    double upper_margin = 0.0;    ///< min over cells of lambda/mu e^V - U
    double v_upper_margin = 0.0;  ///< min over cells of v_bar - V
    double v_min = 0.0;           ///< min over cells of V (positivity)
};

struct SteadyState {
    Field U;
    Field V;
    double residual = 0.0;      ///< max |u_next - u| / dt at termination
    double marched_time = 0.0;
    long steps = 0;
    bool converged = false;     ///< false iff the time cap was hit first
    SteadyBoundReport bound_report;
};

struct SteadyOptions {
    double tol = 1e-10;   ///< pseudo-time residual target
    double t_cap = 500.0; ///< give up after this much marched time (reported, not fatal)
};

/// March the evolution from params.u0 until the pseudo-time residual drops
/// below tol (or t_cap is exceeded, which is reported via `converged`).
/// Pass observe_interval > 0 and observers to watch the march; out_traj, when
/// non-null, receives the full march trajectory.
SteadyState find_steady(const ModelParams& params, const StepControl& ctl,
                        const SteadyOptions& opts = {}, double observe_interval = -1.0,
                        const std::vector<Observer>& observers = {},
                        Trajectory* out_traj = nullptr);

SteadyBoundReport steady_bound_report(const Field& U, const Field& V,
                                      const ModelParams& params);

/// Pointwise residuals of the coupled steady system at an arbitrary pair
/// (U, V), evaluated with the production stencils. Used to certify the
/// trivial state (0, v_bar) exactly and as a negative control.
struct SteadyResidualReport {
    double u_residual_max = 0.0;     ///< max |div(grad U - U grad V) + lambda U - mu U^2|
    double v_residual_max = 0.0;     ///< max |lap V - U V| with boundary data v_bar
    double dirichlet_mismatch = 0.0; ///< max |extrapolated boundary face value of V - v_bar|
};
SteadyResidualReport steady_residual_report(const Field& U, const Field& V,
                                            const ModelParams& params);

/// Evaluate the density-equation right-hand side at (u, v) with the same
/// upwind flux assembly the stepper uses. Exposed so the pseudo-time residual
/// can be cross-checked against an independent operator evaluation.
Field density_rhs(const Field& u, const Field& v, const ModelParams& params);

/// Short run from the spatially constant state u0 = delta: measures the
/// initial total-mass growth rate against lambda * delta * |Omega|. Strictly
/// positive growth demonstrates the dynamic instability of (0, v_bar).
struct InstabilityReport {
    double delta = 0.0;
    double measured_rate = 0.0;
    double expected_rate = 0.0;  ///< lambda * delta * |Omega|
    double relative_gap = 0.0;
    bool mass_strictly_increasing = false;
};
InstabilityReport check_instability_trivial(const ModelParams& base, double delta,
                                            int sample_steps = 32);

} // namespace chemofv

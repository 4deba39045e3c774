/// @file evolve.hpp
/// @brief Explicit, conservative, positivity-preserving time stepping for the
///        density equation coupled to the per-step signal solve.
///
/// One step: (1) solve the signal system for the current density, (2) assemble
/// composite face fluxes -grad(u) + u_upwind * grad(v) on interior faces
/// (boundary faces carry zero total flux, which IS the discrete boundary
/// condition), (3) forward-Euler update with the logistic reaction.
/// Under the compute_dt restriction the update preserves u > 0, and the flux
/// divergence telescopes so that total mass changes by the reaction terms
/// exactly (up to compensated-summation roundoff).
#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "chemofv/elliptic.hpp"
#include "chemofv/params.hpp"

namespace chemofv {

struct StepControl {
    double cfl_safety = 0.4;       ///< in (0, 1]
    double dt_max = 1.0;
    double blowup_threshold = 1e6; ///< L-infinity cap; exceeding it aborts the run
    EllipticOptions elliptic;
    bool audit_every_solve = true; ///< energy audit fused into each signal solve

    void validate() const {
        require(cfl_safety > 0.0 && cfl_safety <= 1.0, "StepControl: cfl_safety in (0,1] required");
        require(dt_max > 0.0, "StepControl: dt_max must be > 0");
        require(blowup_threshold > 0.0, "StepControl: blowup_threshold must be > 0");
    }
};

/// One trajectory point (fields materialized; signal consistent with u).
struct SimState {
    Field u;
    Field v;
    double t = 0.0;
    double dt_last = 0.0;
    long step_index = 0;
};

/// Scalar diagnostics of a single accepted step.
struct StepStats {
    double t_before = 0.0;
    double dt = 0.0;
    double mass = 0.0;             ///< ||u||_1 before the step
    double l2_sq = 0.0;            ///< ||u||_2^2 before the step
    double mass_delta_rate = 0.0;  ///< sum (u_new - u_old) vol / dt
    double identity_residual = 0.0;///< |rate - (lambda*mass - mu*l2_sq)|
    double steady_residual = 0.0;  ///< max |u_new - u_old| / dt
    double min_u_after = 0.0;
    double max_u_after = 0.0;
    int cg_iterations = 0;
    double cg_residual = 0.0;
};

/// Worst-case monitors accumulated over a whole run (every step, not just
/// observations). Margins are signed so reports can show slack, not just
/// pass/fail.
struct RunAccumulators {
    long steps = 0;
    long long cg_iterations_total = 0;
    double mass_cap = 0.0;
    double max_mass = -std::numeric_limits<double>::infinity();
    double max_mass_excess = -std::numeric_limits<double>::infinity();       ///< mass - cap*(1+1e-12)
    double max_identity_residual_scaled = 0.0;                               ///< residual / (1 + mass)
    double min_u = std::numeric_limits<double>::infinity();
    double max_u = -std::numeric_limits<double>::infinity();
    double min_v = std::numeric_limits<double>::infinity();
    double max_v_excess = -std::numeric_limits<double>::infinity();          ///< max v - v_bar
    double max_interior_v_gap = std::numeric_limits<double>::infinity();     ///< min over steps of v_bar - max interior v
    double max_energy_violation = 0.0;     ///< worst audited energy-inequality violation
    double max_energy_gap_rel = 0.0;       ///< worst relative energy-identity gap
    double max_cg_residual = 0.0;
};

/// Stability-limited time step:
/// cfl_safety * min(diffusion, advection, reaction) capped by dt_max, with
///   diffusion = 1 / (2 sum_axis 1/h_a^2)  (= h^2/(2 dim) for square cells),
///   advection = min_axis h_a / max_face |grad v|,
///   reaction  = 1 / (lambda + 2 mu max u).
/// Degenerate maxima yield the remaining minima.
double compute_dt(const Field& u, const Field& v, const StepControl& ctl,
                  const ModelParams& params);

/// Same formula from precomputed bounds (used by the stepper hot path).
double compute_dt_from_bounds(const Grid& grid, double max_face_grad_v, double max_u,
                              const StepControl& ctl, const ModelParams& params);

/// Trajectory stepper. Owns the density and substituted-signal buffers and a
/// persistent CG workspace; signal solves are warm-started by quadratic
/// extrapolation of the previous solutions (the exit test is always against
/// ||b||, so warm starts cannot loosen accuracy).
class Simulator {
  public:
    Simulator(ModelParams params, StepControl ctl);

    /// Advance one step; dt additionally capped by dt_cap (used to land on
    /// observation/end times). Throws BlowupError / PositivityError /
    /// NonFiniteError / SolverError per the step contract.
    StepStats step(double dt_cap = std::numeric_limits<double>::infinity());

    /// Re-solve the signal for the *current* density so that (u, v) pairs
    /// consistently; cheap (warm start) and idempotent.
    void refresh_signal();

    double time() const { return t_; }
    long step_index() const { return step_; }
    double last_dt() const { return dt_last_; }
    double last_steady_residual() const { return last_stats_.steady_residual; }
    const StepStats& last_stats() const { return last_stats_; }
    const EllipticAudit& last_audit() const { return audit_; }
    int last_cg_iterations() const { return cg_iters_; }
    double last_guess_residual() const { return cg_ws_.initial_residual; }

    const ModelParams& params() const { return params_; }
    const StepControl& control() const { return ctl_; }
    const Grid& grid() const { return params_.grid; }

    const Field& density() const { return u_; }
    const Field& z() const { return z_; }
    Field signal() const;  ///< v = v_bar - z, materialized
    SimState state() const;

    const RunAccumulators& accumulators() const { return acc_; }

  private:
    void solve_signal_();
    void advance_(double dt);

    ModelParams params_;
    StepControl ctl_;
    Field u_, u_next_;
    Field z_, z_hist1_, z_hist2_, z_guess_;
    int history_ = 0;
    bool signal_fresh_ = false;

    double t_ = 0.0;
    long step_ = 0;
    double dt_last_ = 0.0;
    double max_u_ = 0.0, min_u_ = 0.0;
    double max_face_grad_v_ = 0.0;
    EllipticAudit audit_;
    int cg_iters_ = 0;
    double cg_residual_ = 0.0;
    StepStats last_stats_;
    RunAccumulators acc_;

    std::vector<double> fx_, fy_below_, fy_above_;
    CgWorkspace cg_ws_;
};

/// Scalar record captured at each observation time.
struct Observation {
    double t = 0.0;
    long step_index = 0;
    double dt_last = 0.0;
    double mass = 0.0;
    double l2 = 0.0;
    double l3 = 0.0;
    double linf = 0.0;
    double min_u = 0.0;
    double grad_u_l2 = 0.0;
    double grad_v_l4 = 0.0;
    double grad_v_linf = 0.0;
    double min_v = 0.0;
    double max_v = 0.0;
    double max_interior_v = 0.0;
    int cg_iterations_last = 0;
    /// Worst in-step monitor values since the previous observation.
    double max_identity_residual_scaled = 0.0;
    double max_energy_violation = 0.0;
};

using Observer = std::function<void(const Simulator&, const Observation&)>;
using StopPredicate = std::function<bool(const StepStats&)>;

struct Trajectory {
    std::vector<Observation> observations;
    SimState final_state;
    RunAccumulators accumulators;
    StepStats last_stats;
    bool stopped_early = false;  ///< stop predicate fired before t_end
};

/// March to t_end, emitting observations (initial state, every crossing of
/// observe_interval, final state). observe_interval <= 0 observes only the
/// endpoints. Observers run synchronously inside the loop. A stop predicate,
/// checked after every step, ends the run early (used by pseudo-time
/// marching).
Trajectory simulate(const ModelParams& params, const StepControl& ctl, double t_end,
                    double observe_interval, const std::vector<Observer>& observers = {},
                    const StopPredicate& stop = {});

} // namespace chemofv

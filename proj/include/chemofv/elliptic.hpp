/// @file elliptic.hpp
/// @brief Signal equation solver: -lap(v) = -u v with v = v_bar on the boundary,
///        solved through the substitution z = v_bar - v, which turns the problem
///        into the SPD system (-lap + u) z = v_bar * u with homogeneous Dirichlet
///        data. Also exposes the measured elliptic estimates.
#pragma once

#include <memory>
#include <optional>

#include "chemofv/gradient.hpp"
#include "chemofv/grid.hpp"

namespace chemofv {

/// Preconditioner for the conjugate-gradient solve.
/// fast_poisson inverts the constant-shift operator (-lap + c) exactly via a
/// sine-transform diagonalization; it clusters the spectrum so tightly that
/// warm-started solves cost about one iteration, which is what makes per-step
/// signal recomputation affordable. jacobi and none remain as reference modes.
enum class EllipticPrecond { none, jacobi, fast_poisson };

struct EllipticOptions {
    double tol = 1e-10;          ///< relative residual ||b - A z|| <= tol ||b||
    int max_iter_per_n = 50;     ///< iteration cap = max_iter_per_n * max cells per axis
    EllipticPrecond precond = EllipticPrecond::fast_poisson;
    /// Entries of u in (clamp_floor, 0) are clamped to zero before assembly;
    /// anything at or below clamp_floor is an error.
    double clamp_floor = -1e-12;
    /// When a solve cannot accept its warm start it converges to
    /// tol/inner_tol_factor instead of tol, so that extrapolated warm starts
    /// built from past solutions still clear the contractual tolerance. Exit
    /// residuals never exceed tol either way.
    double inner_tol_factor = 16.0;
};

struct EllipticSolution {
    Field v;            ///< signal field, v = v_bar - z
    Field z;            ///< substituted unknown, z >= 0
    double v_bar = 0.0;
    int iterations = 0;
    double residual = 0.0;  ///< relative linear residual at exit
};

/// Per-solve audit quantities, cheap enough to evaluate on every solve.
struct EllipticAudit {
    double energy_face = 0.0;      ///< face-based ||grad z||_2^2
    double energy_interior = 0.0;  ///< sum u z (v_bar - z) vol, the identity partner
    double energy_rhs = 0.0;       ///< v_bar^2 ||u||_1, the upper bound
    double min_v = 0.0;
    double max_v = 0.0;
    double max_interior_v = 0.0;   ///< max of v over cells not adjacent to the boundary
    double identity_gap() const {
        double d = energy_face - energy_interior;
        return d < 0 ? -d : d;
    }
    /// Positive part of the audited inequality violation (relative slack 1e-6).
    double inequality_violation() const {
        double m = energy_face - energy_rhs * (1.0 + 1e-6);
        return m > 0 ? m : 0.0;
    }
};

/// Recorded elliptic estimates for one solve. The two ratio fields are the
/// empirical stand-ins for the unquantified embedding constants; they are
/// reported, never asserted.
struct EllipticEstimateReport {
    double energy_lhs = 0.0;  ///< face-based ||grad z||_2^2
    double energy_rhs = 0.0;  ///< v_bar^2 ||u||_1
    double energy_interior = 0.0;
    std::optional<double> gn_ratio;     ///< ||grad v||_4^4 / (v_bar^4 ||u||_1 ||u||_2^2)
    std::optional<double> c1_estimate;  ///< ||grad v||_inf / (v_bar ||u||_3)
};

/// Solve the signal system for a given nonnegative density field.
///
/// The linear system is solved with (optionally Jacobi-preconditioned)
/// conjugate gradients; the matrix is symmetric positive definite for u >= 0.
/// `initial_z` supplies a warm start (time steppers pass an extrapolated
/// previous solution); convergence is always measured against ||b||, so the
/// warm start cannot weaken the exit criterion.
///
/// Throws std::invalid_argument for u entries at or below the clamp floor and
/// SolverError if the iteration cap is reached.
EllipticSolution solve_v(const Field& u, double v_bar, const EllipticOptions& opts = {},
                         const Field* initial_z = nullptr);

class FastPoissonSolver;

/// Reusable buffers for the low-level solver (steppers keep one alive to avoid
/// per-step allocation; the fast-Poisson plan is cached here per grid).
struct CgWorkspace {
    std::vector<double> b, r, d, q, s, inv_diag;
    std::shared_ptr<FastPoissonSolver> fast;
    double initial_residual = 0.0;  ///< relative residual of the warm start, for diagnostics
};

/// Low-level CG on (-lap_h + diag(u)) z = v_bar * u. `z` carries the warm
/// start in and the solution out. The density must already be finite and
/// nonnegative (solve_v validates; the stepper maintains u > 0 invariantly).
/// Returns the iteration count; out_residual receives the relative residual.
int cg_solve(const Field& u_nonneg, double v_bar, std::vector<double>& z,
             const EllipticOptions& opts, double& out_residual, CgWorkspace& ws,
             const Grid& grid);

/// Shared audit sweep (face energy, identity partner, bound, v extrema);
/// optionally reports the largest face-gradient magnitude of v and the z
/// extrema, which the stepper folds into its CFL and bound checks.
EllipticAudit audit_core(const Field& u, const std::vector<double>& z, double v_bar,
                         const Grid& grid, double* max_face_grad = nullptr,
                         double* min_z = nullptr, double* max_z = nullptr);

/// Audit quantities for a completed solve (face energy sweep + cell sweep).
EllipticAudit elliptic_audit(const Field& u, const EllipticSolution& sol);

/// Full estimate report; gn_ratio / c1_estimate are absent when u == 0.
EllipticEstimateReport elliptic_report(const Field& u, const EllipticSolution& sol);

/// y = (-lap_h + diag(u)) z with homogeneous Dirichlet ghosts, exposed so tests
/// can form operator residuals independently of the solver.
void apply_shifted_laplacian(const Field& u_clamped, const std::vector<double>& z,
                             std::vector<double>& out, const Grid& grid);

} // namespace chemofv

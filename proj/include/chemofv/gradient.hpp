/// @file gradient.hpp
/// @brief Face-centered gradients, cell-assembled gradient norms, and the
///        face-based Dirichlet energy used by the elliptic audits.
#pragma once

#include <array>
#include <functional>
#include <vector>

#include "chemofv/grid.hpp"

namespace chemofv {

/// Boundary closure for face gradients.
///
/// dirichlet(g): ghost value 2g - f_cell, i.e. one-sided gradient
///               (f_cell - g)/(h/2) pointing out of the domain. The data is a
///               constant or, for test oracles, a function of the face center.
/// zero_flux:    boundary faces carry no gradient demand (gradient 0).
/// none:         boundary faces are an error; only valid for purely interior use.
struct BoundaryRule {
    enum class Kind { none, dirichlet, zero_flux };
    Kind kind = Kind::none;
    double value = 0.0;
    std::function<double(double, double)> fn;  ///< overrides value when set

    static BoundaryRule dirichlet(double g) { return {Kind::dirichlet, g, {}}; }
    static BoundaryRule dirichlet(std::function<double(double, double)> g) {
        return {Kind::dirichlet, 0.0, std::move(g)};
    }
    static BoundaryRule zero_flux() { return {Kind::zero_flux, 0.0, {}}; }
    static BoundaryRule none() { return {Kind::none, 0.0, {}}; }

    double data_at(double x, double y) const { return fn ? fn(x, y) : value; }
};

/// Gradient components on cell faces, one array per axis.
/// Axis 0 faces: (nx+1) x ny, index iy*(nx+1)+ix; axis 1 faces: nx x (ny+1),
/// index iy*nx+ix. The component is the derivative along the +axis direction.
struct FaceGradients {
    Grid grid;
    std::array<std::vector<double>, 2> axis;

    double x_face(int ix, int iy) const { return axis[0][static_cast<std::size_t>(iy) * (grid.nx() + 1) + ix]; }
    double y_face(int ix, int iy) const { return axis[1][static_cast<std::size_t>(iy) * grid.nx() + ix]; }
};

/// Central differences on interior faces, boundary closure per rule.
/// Requires at least 2 cells per active axis.
FaceGradients face_gradients(const Field& f, const BoundaryRule& rule);

/// Cellwise gradient magnitude: per-axis arithmetic mean of the two adjacent
/// face components, then the Euclidean magnitude.
Field cell_gradient_magnitude(const Field& f, const BoundaryRule& rule);

/// lp_norm of the cell-assembled gradient magnitude.
double grad_lp_norm(const Field& f, double p, const BoundaryRule& rule);

/// Face-based Dirichlet energy: sum over faces of g_f^2 * w_f with w_f equal
/// to the cell volume on interior faces and half of it on boundary faces.
/// For a field solving the discrete Poisson-type systems in this project this
/// quantity satisfies the discrete integration-by-parts identity exactly, so
/// it is the form used wherever an energy identity is audited.
double dirichlet_energy(const Field& f, const BoundaryRule& rule);

} // namespace chemofv

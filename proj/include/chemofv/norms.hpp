/// @file norms.hpp
/// @brief Midpoint quadrature and discrete Lp norms on cell-centered fields.
#pragma once

#include <span>
#include <vector>

#include "chemofv/grid.hpp"

namespace chemofv {

/// Midpoint-rule integral: sum of f_i * cell volume (compensated sum).
/// Exact for cellwise-constant data. Throws NonFiniteError on NaN/Inf input.
double integrate(const Field& f);

/// Discrete Lp norm: (sum |f_i|^p * vol)^(1/p); p = infinity gives max |f_i|.
/// Requires p >= 1.
double lp_norm(const Field& f, double p);

/// sum |f_i|^2 * vol, shared accumulation path with lp_norm(f, 2).
double l2_norm_squared(const Field& f);

/// One trajectory sample as consumed by the space-time seminorm: time plus the
/// spatial L2 norms of the field and of its gradient at that time.
struct SeminormSample {
    double t = 0.0;
    double l2 = 0.0;
    double grad_l2 = 0.0;
};

/// Space-time seminorm over a window [t1, t2]:
/// sup of the L2 norm over stored samples plus the L2(space-time) norm of the
/// gradient (trapezoid rule in time on grad_l2^2).
/// Throws std::invalid_argument if the samples do not cover [t1, t2].
double v_seminorm(std::span<const SeminormSample> samples, double t1, double t2);

} // namespace chemofv

#include "chemofv/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chemofv {

namespace {

void check_finite(const Field& f, const char* op) {
    if (!f.all_finite()) throw NonFiniteError(std::string(op) + ": non-finite value in field");
}

} // namespace

double integrate(const Field& f) {
    check_finite(f, "integrate");
    KahanSum s;
    for (double v : f.values) s.add(v);
    return s.value() * f.grid.cell_volume();
}

double lp_norm(const Field& f, double p) {
    check_finite(f, "lp_norm");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    require(p >= 1.0, "lp_norm: p >= 1 required");
    KahanSum s;
    if (p == 1.0) {
        for (double v : f.values) s.add(std::abs(v));
    } else if (p == 2.0) {
        for (double v : f.values) s.add(v * v);
    } else {
        for (double v : f.values) s.add(std::pow(std::abs(v), p));
    }
    double integral = s.value() * f.grid.cell_volume();
    if (p == 1.0) return integral;
    if (p == 2.0) return std::sqrt(integral);
    return std::pow(integral, 1.0 / p);
}

double l2_norm_squared(const Field& f) {
    check_finite(f, "l2_norm_squared");
    KahanSum s;
    for (double v : f.values) s.add(v * v);
    return s.value() * f.grid.cell_volume();
}

double v_seminorm(std::span<const SeminormSample> samples, double t1, double t2) {
    require(t1 < t2, "v_seminorm: t1 < t2 required");
    // Locate the samples bracketing the window; the window must be covered.
    const double pad = 1e-12 * (1.0 + std::abs(t2));
    if (samples.empty() || samples.front().t > t1 + pad || samples.back().t < t2 - pad)
        throw std::invalid_argument("v_seminorm: window not covered by trajectory samples");

    double sup_l2 = 0.0;
    KahanSum grad_sq_dt;
    const SeminormSample* prev = nullptr;
    for (const auto& s : samples) {
        if (s.t < t1 - pad) {
            prev = &s;
            continue;
        }
        if (s.t > t2 + pad) break;
        sup_l2 = std::max(sup_l2, s.l2);
        if (prev != nullptr && prev->t >= t1 - pad) {
            double dt = s.t - prev->t;
            grad_sq_dt.add(0.5 * dt * (s.grad_l2 * s.grad_l2 + prev->grad_l2 * prev->grad_l2));
        }
        prev = &s;
    }
    return sup_l2 + std::sqrt(std::max(0.0, grad_sq_dt.value()));
}

} // namespace chemofv

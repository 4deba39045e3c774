/// @file params.hpp
/// @brief Model parameters of the density/signal system.
#pragma once

#include "chemofv/grid.hpp"
#include "chemofv/norms.hpp"

namespace chemofv {

/// Parameters of the coupled system: logistic growth rate lambda >= 0,
/// crowding coefficient mu > 0, boundary signal level v_bar, grid, and a
/// strictly positive initial density u0.
///
/// v_bar == 0 is admitted at the library level as the taxis-free limit mode
/// (the signal solve then returns v identically 0 and the advective flux
/// vanishes); it is used by tests and excluded at the configuration layer,
/// which enforces v_bar > 0 for real runs.
struct ModelParams {
    double lambda = 1.0;
    double mu = 1.0;
    double v_bar = 0.1;
    Grid grid;
    Field u0;

    void validate() const {
        require(mu > 0.0, "ModelParams: mu must be > 0 (positive crowding coefficient)");
        require(lambda >= 0.0, "ModelParams: lambda must be >= 0");
        require(v_bar >= 0.0, "ModelParams: v_bar must be >= 0");
        require(u0.grid == grid, "ModelParams: u0 grid mismatch");
        require(u0.all_finite(), "ModelParams: u0 has non-finite entries");
        require(u0.min() > 0.0, "ModelParams: u0 must be strictly positive everywhere");
        require(integrate(u0) > 0.0, "ModelParams: initial mass must be positive");
    }

    /// max(||u0||_1, lambda |Omega| / mu): the invariant cap on total mass.
    double mass_cap() const {
        double m0 = integrate(u0);
        double logistic_cap = lambda * grid.measure() / mu;
        return m0 > logistic_cap ? m0 : logistic_cap;
    }
};

} // namespace chemofv

/// @file common.hpp
/// @brief Shared error types and deterministic reduction helpers.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace chemofv {

/// Base class for runtime failures of the simulation engine.
struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite value detected in a field or reduction.
struct NonFiniteError : SimulationError {
    using SimulationError::SimulationError;
};

/// Density reached the configured L-infinity cap (extensibility monitor tripped).
struct BlowupError : SimulationError {
    using SimulationError::SimulationError;
};

/// Cell density dropped to zero or below; indicates a broken time-step restriction.
struct PositivityError : SimulationError {
    using SimulationError::SimulationError;
};

/// Iterative linear solve failed to reach its tolerance within the iteration cap.
struct SolverError : SimulationError {
    using SimulationError::SimulationError;
};

/// Compensated (Kahan) accumulator.
///
/// All audited identities (mass accounting, per-step balance residuals) are
/// accumulated through this type in a fixed sequential order so that results
/// are bit-reproducible and the flux-telescoping checks are not polluted by
/// naive summation error.
class KahanSum {
  public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace chemofv

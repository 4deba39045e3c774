/// @file config.hpp
/// @brief Run configuration: JSON ingestion with exhaustive validation.
#pragma once

#include <string>
#include <vector>

#include "chemofv/analysis.hpp"
#include "chemofv/evolve.hpp"
#include "chemofv/steady.hpp"

namespace chemofv {

struct InitialData {
    enum class Kind { constant, bump, snapshot };
    Kind kind = Kind::constant;
    double value = 0.5;      // constant
    double base = 0.5;       // bump: base + amplitude * exp(-|x-c|^2 / (2 width^2))
    double amplitude = 0.0;
    double width = 0.1;
    std::string path;        // snapshot
    std::string field = "u";
};

struct RunConfig {
    std::string experiment;  ///< simulate | steady | convergence | sweep | audit
    double lambda = 1.0;
    double mu = 1.0;
    double v_bar = 0.1;
    int dim = 2;
    std::array<int, 2> n_cells{64, 64};
    std::array<double, 2> extent{1.0, 1.0};
    InitialData initial;

    StepControl control;
    double t_end = 10.0;
    double observation_interval = 0.25;
    std::string output_dir = "out";
    bool write_snapshots = true;
    bool emit_plots = true;

    SteadyOptions steady;
    ConvergenceOptions convergence;
    std::vector<double> v_bar_grid;
    bool sweep_parallel = true;
    std::string audit_snapshot;

    /// Throws std::invalid_argument listing every violated field by path.
    void validate() const;

    Grid grid() const;
    /// Builds the model (loads the snapshot file for snapshot initial data).
    ModelParams model_params() const;
};

/// Parse and validate a configuration file (strict JSON).
RunConfig load_config(const std::string& path);
/// Same from in-memory text (used by tests).
RunConfig load_config_text(const std::string& json_text, const std::string& origin = "<text>");

} // namespace chemofv

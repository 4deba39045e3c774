/// @file runner.hpp
/// @brief Experiment orchestration: wires monitors and persistence around the
///        solver modules and turns monitor verdicts into an exit status.
#pragma once

#include <string>

#include "chemofv/analysis.hpp"
#include "chemofv/config.hpp"
#include "chemofv/report.hpp"

namespace chemofv {

struct RunResult {
    int exit_code = 0;  ///< 0 iff every monitored estimate passed
    InvariantReport report;
    std::string output_dir;
};

/// Execute the configured experiment and write timeseries.csv, report.json,
/// snapshots, and (for sweep) sweep.csv into the output directory.
/// The CHEMOFV_OUTPUT_DIR environment variable overrides config.output_dir.
RunResult run(const RunConfig& cfg);

/// Plot-ready artifacts (columnar .dat plus a gnuplot script). An empty
/// series yields a header-only file.
void emit_convergence_plots(const ConvergenceReport& rep, const std::string& dir);
void emit_sweep_plots(const SweepReport& rep, const std::string& dir);

} // namespace chemofv

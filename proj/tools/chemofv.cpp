/// @file chemofv.cpp
/// @brief Command-line driver: one subcommand per experiment, exit status 0
///        iff every monitored estimate passes.
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "chemofv/runner.hpp"

namespace {

void print_summary(const chemofv::RunResult& result) {
    const auto& rep = result.report;
    if (!rep.abort_reason.empty()) {
        std::printf("ABORT  %s\n", rep.abort_reason.c_str());
    }
    for (const auto& e : rep.estimates)
        std::printf("%-5s %-28s margin=% .3e  %s\n", e.pass ? "PASS" : "FAIL", e.name.c_str(),
                    e.margin, e.details.c_str());
    std::printf("report: %s/report.json%s\n", result.output_dir.c_str(),
                rep.oracle_mode ? "  [oracle mode: 1-D grid]" : "");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-volume simulator and estimate auditor for a "
                 "density/signal consumption system with logistic growth"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    double observe = -1.0;

    const char* subcommands[] = {"simulate", "steady", "convergence", "sweep", "audit"};
    for (const char* name : subcommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--output", output_dir, "output directory (overrides config and env)");
        sub->add_option("--observe", observe, "observation interval override");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        chemofv::RunConfig cfg = chemofv::load_config(config_path);
        std::string sub = app.get_subcommands().front()->get_name();
        if (!cfg.experiment.empty() && cfg.experiment != sub)
            throw std::invalid_argument("config experiment '" + cfg.experiment +
                                        "' does not match subcommand '" + sub + "'");
        cfg.experiment = sub;
        if (!output_dir.empty()) {
            cfg.output_dir = output_dir;
            // --output beats the environment override as well
            setenv("CHEMOFV_OUTPUT_DIR", output_dir.c_str(), 1);
        }
        if (observe > 0.0) cfg.observation_interval = observe;

        chemofv::RunResult result = chemofv::run(cfg);
        print_summary(result);
        return result.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

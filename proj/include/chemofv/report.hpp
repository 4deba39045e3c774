/// @file report.hpp
/// @brief Pass/fail ledger for the monitored estimates with measured margins.
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace chemofv {

struct EstimateVerdict {
    std::string name;
    bool pass = true;
    double margin = 0.0;     ///< signed slack; >= 0 means satisfied
    double threshold = 0.0;  ///< pinned tolerance the check ran against
    std::string details;
};

struct InvariantReport {
    std::string experiment;
    bool oracle_mode = false;  ///< set for 1-D grids
    std::string abort_reason;  ///< non-empty when the run aborted
    std::vector<EstimateVerdict> estimates;
    std::vector<std::pair<std::string, double>> empirical_constants;

    void add(std::string name, bool pass, double margin, double threshold,
             std::string details) {
        estimates.push_back(
            {std::move(name), pass, margin, threshold, std::move(details)});
    }
    void record(std::string name, double value) {
        empirical_constants.emplace_back(std::move(name), value);
    }
    bool all_pass() const {
        if (!abort_reason.empty()) return false;
        for (const auto& e : estimates)
            if (!e.pass) return false;
        return true;
    }
};

std::string to_json_string(const InvariantReport& rep);
void write_report(const std::string& path, const InvariantReport& rep);

} // namespace chemofv

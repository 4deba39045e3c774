#include "chemofv/report.hpp"

#include <fstream>

#include <json.hpp>

#include "chemofv/common.hpp"

namespace chemofv {

using nlohmann::json;

std::string to_json_string(const InvariantReport& rep) {
    json j;
    j["experiment"] = rep.experiment;
    j["oracle_mode"] = rep.oracle_mode;
    j["all_pass"] = rep.all_pass();
    if (!rep.abort_reason.empty()) j["abort_reason"] = rep.abort_reason;
    json est = json::array();
    for (const auto& e : rep.estimates) {
        est.push_back({{"name", e.name},
                       {"pass", e.pass},
                       {"margin", e.margin},
                       {"threshold", e.threshold},
                       {"details", e.details}});
    }
    j["estimates"] = est;
    json consts = json::object();
    for (const auto& [k, v] : rep.empirical_constants) consts[k] = v;
    j["empirical_constants"] = consts;
    return j.dump(2);
}

void write_report(const std::string& path, const InvariantReport& rep) {
    std::ofstream out(path);
    if (!out) throw SimulationError("write_report: cannot open " + path);
    out << to_json_string(rep) << '\n';
    if (!out) throw SimulationError("write_report: write failed for " + path);
}

} // namespace chemofv

#include "chemofv/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chemofv/snapshot.hpp"

namespace chemofv {

using nlohmann::json;

namespace {

const char* kExperiments[] = {"simulate", "steady", "convergence", "sweep", "audit"};

bool known_experiment(const std::string& e) {
    for (const char* k : kExperiments)
        if (e == k) return true;
    return false;
}

double get_num(const json& j, const char* key, double fallback, std::vector<std::string>& errs,
               const std::string& path) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) {
        errs.push_back(path + "." + key + ": expected a number");
        return fallback;
    }
    return j.at(key).get<double>();
}

} // namespace

Grid RunConfig::grid() const {
    if (dim == 1) return Grid::interval(extent[0], n_cells[0]);
    return Grid::rectangle(extent[0], extent[1], n_cells[0], n_cells[1]);
}

void RunConfig::validate() const {
    std::vector<std::string> errs;
    if (!known_experiment(experiment))
        errs.push_back("experiment: must be one of simulate|steady|convergence|sweep|audit");
    if (!(mu > 0.0))
        errs.push_back("model.mu: must be > 0 (the crowding coefficient is assumed positive)");
    if (!(lambda >= 0.0)) errs.push_back("model.lambda: must be >= 0");
    if (!(v_bar > 0.0))
        errs.push_back("model.v_bar: must be > 0 (positive boundary signal level)");
    if (dim != 1 && dim != 2) errs.push_back("model.grid.dim: must be 1 or 2");
    if (n_cells[0] < 2 || (dim == 2 && n_cells[1] < 2))
        errs.push_back("model.grid.n_cells: at least 2 cells per axis");
    if (!(extent[0] > 0.0) || (dim == 2 && !(extent[1] > 0.0)))
        errs.push_back("model.grid.extent: must be positive");

    switch (initial.kind) {
        case InitialData::Kind::constant:
            if (!(initial.value > 0.0))
                errs.push_back(
                    "model.initial.value: must be > 0 (initial density is strictly positive)");
            break;
        case InitialData::Kind::bump:
            if (!(initial.base > 0.0)) errs.push_back("model.initial.base: must be > 0");
            if (!(initial.base + initial.amplitude > 0.0))
                errs.push_back("model.initial.amplitude: base + amplitude must stay > 0");
            if (!(initial.width > 0.0)) errs.push_back("model.initial.width: must be > 0");
            break;
        case InitialData::Kind::snapshot:
            if (initial.path.empty()) errs.push_back("model.initial.path: required");
            break;
    }

    if (!(control.cfl_safety > 0.0 && control.cfl_safety <= 1.0))
        errs.push_back("control.cfl_safety: must lie in (0, 1]");
    if (!(control.dt_max > 0.0)) errs.push_back("control.dt_max: must be > 0");
    if (!(control.blowup_threshold > 0.0)) errs.push_back("control.blowup_threshold: must be > 0");
    if (!(control.elliptic.tol > 0.0)) errs.push_back("control.elliptic_tol: must be > 0");

    if (!(t_end >= 0.0)) errs.push_back("t_end: must be >= 0");
    if (!(steady.tol > 0.0)) errs.push_back("steady.tol: must be > 0");
    if (!(steady.t_cap > 0.0)) errs.push_back("steady.t_cap: must be > 0");
    if (experiment == "sweep") {
        if (v_bar_grid.empty()) errs.push_back("sweep.v_bar_grid: at least one value");
        for (std::size_t i = 0; i < v_bar_grid.size(); ++i)
            if (!(v_bar_grid[i] > 0.0))
                errs.push_back("sweep.v_bar_grid[" + std::to_string(i) + "]: must be > 0");
    }
    if (experiment == "audit" && audit_snapshot.empty())
        errs.push_back("audit.snapshot: required for the audit experiment");

    if (!errs.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errs) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
}

ModelParams RunConfig::model_params() const {
    ModelParams p;
    p.lambda = lambda;
    p.mu = mu;
    p.v_bar = v_bar;
    p.grid = grid();
    switch (initial.kind) {
        case InitialData::Kind::constant:
            p.u0 = Field::constant(p.grid, initial.value);
            break;
        case InitialData::Kind::bump: {
            const double cx = 0.5 * extent[0];
            const double cy = dim == 2 ? 0.5 * extent[1] : 0.0;
            const double w2 = 2.0 * initial.width * initial.width;
            const InitialData& init = initial;
            p.u0 = Field::from_function(p.grid, [&](double x, double y) {
                double r2 = (x - cx) * (x - cx);
                if (dim == 2) r2 += (y - cy) * (y - cy);
                return init.base + init.amplitude * std::exp(-r2 / w2);
            });
            break;
        }
        case InitialData::Kind::snapshot: {
            Snapshot snap = read_snapshot(initial.path);
            const Field* f = snap.find(initial.field);
            if (f == nullptr)
                throw std::invalid_argument("model.initial: field '" + initial.field +
                                            "' not present in snapshot " + initial.path);
            if (!(f->grid == p.grid))
                throw std::invalid_argument(
                    "model.initial: snapshot grid does not match the configured grid");
            p.u0 = *f;
            break;
        }
    }
    p.validate();
    return p;
}

RunConfig load_config_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in " + origin + ": " + e.what());
    }

    std::vector<std::string> errs;
    RunConfig cfg;

    if (j.contains("experiment")) {
        if (j.at("experiment").is_string())
            cfg.experiment = j.at("experiment").get<std::string>();
        else
            errs.push_back("experiment: expected a string");
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        cfg.lambda = get_num(m, "lambda", cfg.lambda, errs, "model");
        cfg.mu = get_num(m, "mu", cfg.mu, errs, "model");
        cfg.v_bar = get_num(m, "v_bar", cfg.v_bar, errs, "model");
        if (m.contains("grid")) {
            const json& g = m.at("grid");
            cfg.dim = static_cast<int>(get_num(g, "dim", 2, errs, "model.grid"));
            if (g.contains("n")) {
                int n = static_cast<int>(get_num(g, "n", 64, errs, "model.grid"));
                cfg.n_cells = {n, n};
            }
            if (g.contains("n_cells")) {
                const json& nc = g.at("n_cells");
                if (nc.is_array() && nc.size() >= 1) {
                    cfg.n_cells[0] = nc[0].get<int>();
                    cfg.n_cells[1] = nc.size() > 1 ? nc[1].get<int>() : nc[0].get<int>();
                } else {
                    errs.push_back("model.grid.n_cells: expected an array of 1 or 2 integers");
                }
            }
            if (g.contains("extent")) {
                const json& ex = g.at("extent");
                if (ex.is_array() && ex.size() >= 1) {
                    cfg.extent[0] = ex[0].get<double>();
                    cfg.extent[1] = ex.size() > 1 ? ex[1].get<double>() : ex[0].get<double>();
                } else if (ex.is_number()) {
                    cfg.extent = {ex.get<double>(), ex.get<double>()};
                } else {
                    errs.push_back("model.grid.extent: expected a number or array");
                }
            }
        }
        if (m.contains("initial")) {
            const json& init = m.at("initial");
            std::string kind = init.value("type", "constant");
            if (kind == "constant") {
                cfg.initial.kind = InitialData::Kind::constant;
                cfg.initial.value = get_num(init, "value", cfg.initial.value, errs, "model.initial");
            } else if (kind == "bump") {
                cfg.initial.kind = InitialData::Kind::bump;
                cfg.initial.base = get_num(init, "base", cfg.initial.base, errs, "model.initial");
                cfg.initial.amplitude =
                    get_num(init, "amplitude", cfg.initial.amplitude, errs, "model.initial");
                cfg.initial.width = get_num(init, "width", cfg.initial.width, errs, "model.initial");
            } else if (kind == "snapshot") {
                cfg.initial.kind = InitialData::Kind::snapshot;
                cfg.initial.path = init.value("path", "");
                cfg.initial.field = init.value("field", "u");
            } else {
                errs.push_back("model.initial.type: must be constant|bump|snapshot");
            }
        }
    }

    if (j.contains("control")) {
        const json& c = j.at("control");
        cfg.control.cfl_safety = get_num(c, "cfl_safety", cfg.control.cfl_safety, errs, "control");
        cfg.control.dt_max = get_num(c, "dt_max", cfg.control.dt_max, errs, "control");
        cfg.control.blowup_threshold =
            get_num(c, "blowup_threshold", cfg.control.blowup_threshold, errs, "control");
        cfg.control.elliptic.tol =
            get_num(c, "elliptic_tol", cfg.control.elliptic.tol, errs, "control");
        if (c.contains("elliptic_precond")) {
            std::string m = c.at("elliptic_precond").get<std::string>();
            if (m == "none")
                cfg.control.elliptic.precond = EllipticPrecond::none;
            else if (m == "jacobi")
                cfg.control.elliptic.precond = EllipticPrecond::jacobi;
            else if (m == "fast")
                cfg.control.elliptic.precond = EllipticPrecond::fast_poisson;
            else
                errs.push_back("control.elliptic_precond: must be none|jacobi|fast");
        }
        if (c.contains("audit_every_solve"))
            cfg.control.audit_every_solve = c.at("audit_every_solve").get<bool>();
    }

    cfg.t_end = get_num(j, "t_end", cfg.t_end, errs, "");
    cfg.observation_interval =
        get_num(j, "observation_interval", cfg.observation_interval, errs, "");
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("write_snapshots")) cfg.write_snapshots = j.at("write_snapshots").get<bool>();
    if (j.contains("emit_plots")) cfg.emit_plots = j.at("emit_plots").get<bool>();

    if (j.contains("steady")) {
        const json& s = j.at("steady");
        cfg.steady.tol = get_num(s, "tol", cfg.steady.tol, errs, "steady");
        cfg.steady.t_cap = get_num(s, "t_cap", cfg.steady.t_cap, errs, "steady");
    }
    if (j.contains("convergence")) {
        const json& c = j.at("convergence");
        cfg.convergence.fit_drop_factor =
            get_num(c, "fit_drop_factor", cfg.convergence.fit_drop_factor, errs, "convergence");
        cfg.convergence.error_floor =
            get_num(c, "error_floor", cfg.convergence.error_floor, errs, "convergence");
        cfg.convergence.rate_slack =
            get_num(c, "rate_slack", cfg.convergence.rate_slack, errs, "convergence");
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        if (s.contains("v_bar_grid")) cfg.v_bar_grid = s.at("v_bar_grid").get<std::vector<double>>();
        if (s.contains("parallel")) cfg.sweep_parallel = s.at("parallel").get<bool>();
    }
    if (j.contains("audit")) cfg.audit_snapshot = j.at("audit").value("snapshot", "");

    if (!errs.empty()) {
        std::string msg = "invalid configuration in " + origin + ":";
        for (const auto& e : errs) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str(), path);
}

} // namespace chemofv

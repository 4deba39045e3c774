#include "chemofv/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace chemofv {

static_assert(std::endian::native == std::endian::little,
              "snapshot payload assumes a little-endian host");
static_assert(sizeof(double) == 8, "snapshot payload assumes 64-bit doubles");

using nlohmann::json;

void write_snapshot(const std::string& path, const Snapshot& snap) {
    require(snap.field_names.size() == snap.fields.size(), "write_snapshot: name/field mismatch");
    for (const auto& f : snap.fields)
        require(f.grid == snap.grid, "write_snapshot: field grid mismatch");

    json header;
    header["format_version"] = Snapshot::format_version;
    header["byte_order"] = "little";
    header["grid"] = {{"dim", snap.grid.dim},
                      {"n_cells", {snap.grid.n_cells[0], snap.grid.n_cells[1]}},
                      {"extent", {snap.grid.extent[0], snap.grid.extent[1]}},
                      {"h", {snap.grid.h[0], snap.grid.h[1]}}};
    header["time"] = snap.time;
    header["fields"] = snap.field_names;
    header["cells_per_field"] = snap.grid.cell_count();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimulationError("write_snapshot: cannot open " + path);
    out << header.dump() << '\n';
    for (const auto& f : snap.fields)
        out.write(reinterpret_cast<const char*>(f.values.data()),
                  static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!out) throw SimulationError("write_snapshot: write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SimulationError("read_snapshot: cannot open " + path);
    std::string header_line;
    if (!std::getline(in, header_line))
        throw SimulationError("read_snapshot: missing header line in " + path);

    json header = json::parse(header_line);
    if (header.at("format_version").get<int>() != Snapshot::format_version)
        throw SimulationError("read_snapshot: unsupported format version in " + path);
    if (header.at("byte_order").get<std::string>() != "little")
        throw SimulationError("read_snapshot: unsupported byte order in " + path);

    Snapshot snap;
    const auto& jg = header.at("grid");
    snap.grid.dim = jg.at("dim").get<int>();
    snap.grid.n_cells = {jg.at("n_cells")[0].get<int>(), jg.at("n_cells")[1].get<int>()};
    snap.grid.extent = {jg.at("extent")[0].get<double>(), jg.at("extent")[1].get<double>()};
    snap.grid.h = {jg.at("h")[0].get<double>(), jg.at("h")[1].get<double>()};
    snap.time = header.at("time").get<double>();
    snap.field_names = header.at("fields").get<std::vector<std::string>>();

    const std::size_t n = snap.grid.cell_count();
    if (header.contains("cells_per_field") &&
        header.at("cells_per_field").get<std::size_t>() != n)
        throw SimulationError("read_snapshot: header cell count inconsistent in " + path);

    for (const auto& name : snap.field_names) {
        Field f(snap.grid);
        in.read(reinterpret_cast<char*>(f.values.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double))
            throw SimulationError("read_snapshot: truncated payload for field '" + name + "' in " +
                                  path);
        snap.fields.push_back(std::move(f));
    }
    // Exactly the declared payload, nothing more.
    char extra;
    if (in.read(&extra, 1))
        throw SimulationError("read_snapshot: trailing bytes after payload in " + path);
    return snap;
}

} // namespace chemofv

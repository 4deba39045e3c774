/// @file snapshot.hpp
/// @brief Field snapshots: one-line JSON header followed by raw little-endian
///        float64 payload, row-major, one block per named field. Round trips
///        are bit-exact.
#pragma once

#include <string>
#include <vector>

#include "chemofv/grid.hpp"

namespace chemofv {

struct Snapshot {
    static constexpr int format_version = 1;
    Grid grid;
    double time = 0.0;
    std::vector<std::string> field_names;
    std::vector<Field> fields;  ///< same order as field_names

    const Field* find(const std::string& name) const {
        for (std::size_t i = 0; i < field_names.size(); ++i)
            if (field_names[i] == name) return &fields[i];
        return nullptr;
    }
};

void write_snapshot(const std::string& path, const Snapshot& snap);
Snapshot read_snapshot(const std::string& path);

} // namespace chemofv

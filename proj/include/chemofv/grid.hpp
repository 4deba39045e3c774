/// @file grid.hpp
/// @brief Uniform cell-centered grids (interval / rectangle) and scalar fields.
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "chemofv/common.hpp"

namespace chemofv {

/// Uniform cell-centered grid on an interval (dim 1) or axis-aligned
/// rectangle (dim 2). Cell (i,j) has its center at ((i+1/2)h_x, (j+1/2)h_y),
/// so boundary faces lie exactly on the domain boundary.
///
/// 1-D grids are carried as nx-by-1 grids with a unit transverse extent; they
/// exist as oracle/test vehicles and are labeled "oracle mode" in reports.
struct Grid {
    int dim = 2;
    std::array<int, 2> n_cells{1, 1};
    std::array<double, 2> extent{1.0, 1.0};
    std::array<double, 2> h{1.0, 1.0};

    static Grid interval(double length, int n) {
        require(length > 0.0 && n >= 1, "Grid::interval: length > 0 and n >= 1 required");
        Grid g;
        g.dim = 1;
        g.n_cells = {n, 1};
        g.extent = {length, 1.0};
        g.h = {length / n, 1.0};
        return g;
    }

    static Grid rectangle(double lx, double ly, int nx, int ny) {
        require(lx > 0.0 && ly > 0.0 && nx >= 1 && ny >= 1,
                "Grid::rectangle: positive extents and cell counts required");
        Grid g;
        g.dim = 2;
        g.n_cells = {nx, ny};
        g.extent = {lx, ly};
        g.h = {lx / nx, ly / ny};
        return g;
    }

    static Grid unit_square(int n) { return rectangle(1.0, 1.0, n, n); }

    int nx() const { return n_cells[0]; }
    int ny() const { return n_cells[1]; }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(n_cells[0]) * static_cast<std::size_t>(n_cells[1]);
    }
    /// Volume (length in 1-D, area in 2-D) of one cell.
    double cell_volume() const { return dim == 2 ? h[0] * h[1] : h[0]; }
    /// Measure of the whole domain.
    double measure() const { return dim == 2 ? extent[0] * extent[1] : extent[0]; }

    std::size_t index(int ix, int iy = 0) const {
        return static_cast<std::size_t>(iy) * n_cells[0] + ix;
    }
    std::array<double, 2> cell_center(int ix, int iy = 0) const {
        return {(ix + 0.5) * h[0], (iy + 0.5) * h[1]};
    }

    bool operator==(const Grid& o) const {
        return dim == o.dim && n_cells == o.n_cells && extent == o.extent;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

/// Discrete scalar field: one value per cell, row-major (x fastest).
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.cell_count(), fill) {}

    static Field constant(const Grid& g, double c) { return Field(g, c); }

    /// Sample a function at cell centers.
    static Field from_function(const Grid& g, const std::function<double(double, double)>& f) {
        Field out(g);
        for (int iy = 0; iy < g.ny(); ++iy)
            for (int ix = 0; ix < g.nx(); ++ix) {
                auto c = g.cell_center(ix, iy);
                out.values[g.index(ix, iy)] = f(c[0], c[1]);
            }
        return out;
    }

    double& operator()(int ix, int iy = 0) { return values[grid.index(ix, iy)]; }
    double operator()(int ix, int iy = 0) const { return values[grid.index(ix, iy)]; }

    std::size_t size() const { return values.size(); }

    double min() const;
    double max() const;
    bool all_finite() const;
};

} // namespace chemofv

#include "chemofv/gradient.hpp"

#include <algorithm>
#include <cmath>

#include "chemofv/norms.hpp"

namespace chemofv {

namespace {

// Gradient component along +axis at a boundary face, one-sided through the
// face value: (cell - data)/(h/2) at the low face, (data - cell)/(h/2) at the
// high face (equivalently the ghost form with ghost = 2 data - cell).
double boundary_face_gradient(double cell_value, double data, double half_h, bool high_face,
                              const BoundaryRule& rule) {
    switch (rule.kind) {
        case BoundaryRule::Kind::zero_flux:
            return 0.0;
        case BoundaryRule::Kind::dirichlet: {
            double g = (cell_value - data) / half_h;
            return high_face ? -g : g;
        }
        case BoundaryRule::Kind::none:
        default:
            throw std::logic_error("face_gradients: no boundary rule registered");
    }
}

} // namespace

FaceGradients face_gradients(const Field& f, const BoundaryRule& rule) {
    const Grid& g = f.grid;
    require(g.nx() >= 2 && (g.dim == 1 || g.ny() >= 2),
            "face_gradients: at least 2 cells per active axis required");
    if (!f.all_finite()) throw NonFiniteError("face_gradients: non-finite value in field");

    FaceGradients out;
    out.grid = g;
    const int nx = g.nx(), ny = g.ny();
    const double hx = g.h[0], hy = g.h[1];
    const bool need_data = rule.kind == BoundaryRule::Kind::dirichlet;

    out.axis[0].assign(static_cast<std::size_t>(nx + 1) * ny, 0.0);
    for (int iy = 0; iy < ny; ++iy) {
        const double yc = g.dim == 2 ? (iy + 0.5) * hy : 0.0;
        const double* row = f.values.data() + g.index(0, iy);
        double* fx = out.axis[0].data() + static_cast<std::size_t>(iy) * (nx + 1);
        double d_lo = need_data ? rule.data_at(0.0, yc) : 0.0;
        double d_hi = need_data ? rule.data_at(g.extent[0], yc) : 0.0;
        fx[0] = boundary_face_gradient(row[0], d_lo, 0.5 * hx, false, rule);
        for (int ix = 1; ix < nx; ++ix) fx[ix] = (row[ix] - row[ix - 1]) / hx;
        fx[nx] = boundary_face_gradient(row[nx - 1], d_hi, 0.5 * hx, true, rule);
    }

    if (g.dim == 2) {
        out.axis[1].assign(static_cast<std::size_t>(nx) * (ny + 1), 0.0);
        for (int ix = 0; ix < nx; ++ix) {
            const double xc = (ix + 0.5) * hx;
            double d_lo = need_data ? rule.data_at(xc, 0.0) : 0.0;
            double d_hi = need_data ? rule.data_at(xc, g.extent[1]) : 0.0;
            out.axis[1][ix] = boundary_face_gradient(f(ix, 0), d_lo, 0.5 * hy, false, rule);
            out.axis[1][static_cast<std::size_t>(ny) * nx + ix] =
                boundary_face_gradient(f(ix, ny - 1), d_hi, 0.5 * hy, true, rule);
        }
        for (int iy = 1; iy < ny; ++iy) {
            const double* lo = f.values.data() + g.index(0, iy - 1);
            const double* hi = f.values.data() + g.index(0, iy);
            double* fy = out.axis[1].data() + static_cast<std::size_t>(iy) * nx;
            for (int ix = 0; ix < nx; ++ix) fy[ix] = (hi[ix] - lo[ix]) / hy;
        }
    }
    return out;
}

Field cell_gradient_magnitude(const Field& f, const BoundaryRule& rule) {
    FaceGradients fg = face_gradients(f, rule);
    const Grid& g = f.grid;
    Field mag(g);
    const int nx = g.nx(), ny = g.ny();
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            double gx = 0.5 * (fg.x_face(ix, iy) + fg.x_face(ix + 1, iy));
            if (g.dim == 1) {
                mag(ix, iy) = std::abs(gx);
            } else {
                double gy = 0.5 * (fg.y_face(ix, iy) + fg.y_face(ix, iy + 1));
                mag(ix, iy) = std::hypot(gx, gy);
            }
        }
    }
    return mag;
}

double grad_lp_norm(const Field& f, double p, const BoundaryRule& rule) {
    return lp_norm(cell_gradient_magnitude(f, rule), p);
}

double dirichlet_energy(const Field& f, const BoundaryRule& rule) {
    FaceGradients fg = face_gradients(f, rule);
    const Grid& g = f.grid;
    const double vol = g.cell_volume();
    const int nx = g.nx(), ny = g.ny();
    KahanSum e;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix <= nx; ++ix) {
            double gx = fg.x_face(ix, iy);
            double w = (ix == 0 || ix == nx) ? 0.5 * vol : vol;
            e.add(gx * gx * w);
        }
    }
    if (g.dim == 2) {
        for (int iy = 0; iy <= ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                double gy = fg.y_face(ix, iy);
                double w = (iy == 0 || iy == ny) ? 0.5 * vol : vol;
                e.add(gy * gy * w);
            }
        }
    }
    return e.value();
}

} // namespace chemofv

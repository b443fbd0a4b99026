#pragma once

#include <span>
#include <string>
#include <vector>

#include "epiforge/errors.hpp"

namespace epiforge {

/// Uniform 2D structured grid of square cells.
///
/// Flattening is row-major and fixed: cell (x, y) has index k = y*nx + x.
struct Grid {
    int nx = 0;
    int ny = 0;
    double dx = 0.0; // cell spacing, km

    int n_cells() const { return nx * ny; }
    int index(int x, int y) const { return y * nx + x; }

    /// Cell-center coordinate of cell (x, y) in km.
    double center_x(int x) const { return (x + 0.5) * dx; }
    double center_y(int y) const { return (y + 0.5) * dx; }
};

inline Grid build_grid(int nx, int ny, double dx) {
    if (nx < 3 || ny < 3)
        raise(ErrorKind::InvalidDimension,
              "grid needs nx >= 3 and ny >= 3, got " + std::to_string(nx) + "x" + std::to_string(ny));
    if (!(dx > 0.0))
        raise(ErrorKind::InvalidDimension, "grid spacing must be positive, got " + std::to_string(dx));
    return Grid{nx, ny, dx};
}

/// Conservative variable-coefficient Laplacian under no-flux boundaries.
///
/// Flux form: each interior face carries c_face * (u_nbr - u_cell) / dx^2 with
/// c_face the arithmetic mean of the two adjacent cell coefficients. Boundary
/// faces carry zero flux, so the output always sums to zero over the grid
/// (every interior face contributes +/- the same flux exactly once each).
inline void laplacian_varcoef(std::span<const double> u, std::span<const double> coeff,
                              const Grid& grid, std::span<double> out) {
    const std::size_t n = static_cast<std::size_t>(grid.n_cells());
    if (u.size() != n || coeff.size() != n || out.size() != n)
        raise(ErrorKind::DimensionMismatch,
              "laplacian_varcoef: grid has " + std::to_string(n) + " cells, got fields of length " +
                  std::to_string(u.size()) + "/" + std::to_string(coeff.size()));

    for (std::size_t k = 0; k < n; ++k) out[k] = 0.0;

    const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
    // x-oriented faces
    for (int y = 0; y < grid.ny; ++y) {
        for (int x = 0; x + 1 < grid.nx; ++x) {
            const int a = grid.index(x, y);
            const int b = grid.index(x + 1, y);
            const double flux = 0.5 * (coeff[a] + coeff[b]) * (u[b] - u[a]) * inv_dx2;
            out[a] += flux;
            out[b] -= flux;
        }
    }
    // y-oriented faces
    for (int y = 0; y + 1 < grid.ny; ++y) {
        for (int x = 0; x < grid.nx; ++x) {
            const int a = grid.index(x, y);
            const int b = grid.index(x, y + 1);
            const double flux = 0.5 * (coeff[a] + coeff[b]) * (u[b] - u[a]) * inv_dx2;
            out[a] += flux;
            out[b] -= flux;
        }
    }
}

inline std::vector<double> laplacian_varcoef(const std::vector<double>& u,
                                             const std::vector<double>& coeff, const Grid& grid) {
    std::vector<double> out(u.size());
    laplacian_varcoef(std::span<const double>(u), std::span<const double>(coeff), grid, out);
    return out;
}

/// Adjoint helper for the Laplacian's coefficient dependence: accumulates
/// d<w, laplacian_varcoef(u, c)> / dc into c_bar. The u dependence is
/// self-adjoint, so d/du is laplacian_varcoef(w, c) itself.
inline void laplacian_varcoef_coeff_adjoint(std::span<const double> u, std::span<const double> w,
                                            const Grid& grid, std::span<double> c_bar) {
    const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
    for (int y = 0; y < grid.ny; ++y) {
        for (int x = 0; x + 1 < grid.nx; ++x) {
            const int a = grid.index(x, y);
            const int b = grid.index(x + 1, y);
            const double g = 0.5 * (u[b] - u[a]) * inv_dx2 * (w[a] - w[b]);
            c_bar[a] += g;
            c_bar[b] += g;
        }
    }
    for (int y = 0; y + 1 < grid.ny; ++y) {
        for (int x = 0; x < grid.nx; ++x) {
            const int a = grid.index(x, y);
            const int b = grid.index(x, y + 1);
            const double g = 0.5 * (u[b] - u[a]) * inv_dx2 * (w[a] - w[b]);
            c_bar[a] += g;
            c_bar[b] += g;
        }
    }
}

} // namespace epiforge

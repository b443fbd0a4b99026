#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "epiforge/data_io.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/grid.hpp"
#include "epiforge/seird.hpp"
#include "epiforge/textio.hpp"

namespace epiforge {

constexpr int kPgmMaxval = 65535;

/// Write one scalar field as an ASCII (P2) PGM image. Pixel values are the
/// field linearly rescaled so that `scale` maps to the maximum grey level;
/// negative values clamp to 0. Image row 0 is grid row y = ny-1 so the image
/// reads with the y axis pointing up.
inline void write_pgm(const std::string& path, std::span<const double> field, const Grid& grid,
                      double scale) {
    const auto n_cells = static_cast<std::size_t>(grid.n_cells());
    if (field.size() != n_cells)
        raise(ErrorKind::DimensionMismatch, "field length " + std::to_string(field.size()) +
                                                " does not match grid with " +
                                                std::to_string(n_cells) + " cells");
    std::ofstream out(path);
    if (!out) raise(ErrorKind::IoError, "cannot open " + path + " for writing");
    out << "P2\n" << grid.nx << ' ' << grid.ny << '\n' << kPgmMaxval << '\n';
    for (int y = grid.ny - 1; y >= 0; --y) {
        for (int x = 0; x < grid.nx; ++x) {
            double v = field[static_cast<std::size_t>(grid.index(x, y))];
            long pixel = 0;
            if (scale > 0.0 && v > 0.0)
                pixel = std::lround(std::min(v / scale, 1.0) * kPgmMaxval);
            out << pixel;
            out << (x + 1 == grid.nx ? '\n' : ' ');
        }
    }
    if (!out) raise(ErrorKind::IoError, "failed writing " + path);
}

/// Write per-day, per-compartment heatmaps for a snapshot matrix, one PGM per
/// (compartment, day). Grey levels are normalized per compartment by its
/// maximum over all days, so frames of one compartment are comparable; the
/// chosen scales are recorded in `scale.txt` next to the images.
inline std::vector<std::string> write_heatmaps(const std::string& dir, const SnapshotMatrix& snap,
                                               const Grid& grid) {
    const auto n_cells = static_cast<std::size_t>(grid.n_cells());
    if (snap.n_cells != n_cells)
        raise(ErrorKind::DimensionMismatch,
              "snapshot cell count " + std::to_string(snap.n_cells) + " does not match grid (" +
                  std::to_string(n_cells) + ")");

    double scales[kCompartments];
    for (int c = 0; c < kCompartments; ++c) {
        double maxv = 0.0;
        for (const auto& row : snap.rows)
            for (std::size_t j = 0; j < n_cells; ++j)
                maxv = std::max(maxv, row[static_cast<std::size_t>(c) * n_cells + j]);
        scales[c] = maxv;
    }

    std::vector<std::string> paths;
    std::ofstream scale_file(dir + "/scale.txt");
    if (!scale_file) raise(ErrorKind::IoError, "cannot open " + dir + "/scale.txt for writing");
    scale_file << "# grey level " << kPgmMaxval << " corresponds to this field value\n";
    for (int c = 0; c < kCompartments; ++c)
        scale_file << kCompartmentNames[c] << ' ' << detail::format_double(scales[c]) << '\n';

    for (std::size_t d = 0; d < snap.rows.size(); ++d) {
        char day_label[16];
        std::snprintf(day_label, sizeof(day_label), "%04d", snap.days[d]);
        for (int c = 0; c < kCompartments; ++c) {
            const std::string path = dir + "/" + kCompartmentNames[c] + "_day" + day_label + ".pgm";
            const std::span<const double> field(snap.rows[d].data() +
                                                    static_cast<std::size_t>(c) * n_cells,
                                                n_cells);
            write_pgm(path, field, grid, scales[c]);
            paths.push_back(path);
        }
    }
    return paths;
}

} // namespace epiforge

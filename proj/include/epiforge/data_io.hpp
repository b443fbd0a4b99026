#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "epiforge/errors.hpp"
#include "epiforge/grid.hpp"
#include "epiforge/integrators.hpp"
#include "epiforge/seird.hpp"
#include "epiforge/textio.hpp"

namespace epiforge {

// ---------------------------------------------------------------------------
// Snapshot matrices: one row per day index, compartment-major columns
// ---------------------------------------------------------------------------

/// Time-ordered observations of a (possibly single-cell) compartment field.
/// Each row is the flattened state s_0..s_{n-1}, e_0..e_{n-1}, ..., d_0..d_{n-1}.
struct SnapshotMatrix {
    std::size_t n_cells = 0;
    std::vector<int> days;
    std::vector<std::vector<double>> rows;

    std::size_t state_dim() const { return kCompartments * n_cells; }
    std::size_t n_days() const { return rows.size(); }

    void check() const {
        if (n_cells == 0) raise(ErrorKind::InvalidDimension, "snapshot matrix has zero cells");
        if (days.size() != rows.size())
            raise(ErrorKind::ShapeMismatch, "snapshot matrix day/row counts differ");
        for (const auto& row : rows) {
            if (row.size() != state_dim())
                raise(ErrorKind::ShapeMismatch, "snapshot matrix row length mismatch");
            for (double v : row)
                if (!std::isfinite(v))
                    raise(ErrorKind::NonFiniteState, "snapshot matrix entry not finite");
        }
        for (std::size_t k = 1; k < days.size(); ++k)
            if (days[k] <= days[k - 1])
                raise(ErrorKind::NonMonotonicDates, "snapshot matrix days must strictly increase");
    }
};

/// Downsample a simulated trajectory to one row per cadence interval.
/// `cadence` (days) must be a positive whole multiple of the trajectory step;
/// day 0 is the initial state, day k the state at t0 + k*cadence.
inline SnapshotMatrix assemble_snapshots(const Trajectory& traj, double cadence) {
    if (traj.times.size() != traj.states.size() || traj.times.empty())
        raise(ErrorKind::ShapeMismatch, "assemble_snapshots: malformed trajectory");
    if (!(cadence > 0.0) || !std::isfinite(cadence))
        raise(ErrorKind::CadenceMismatch, "assemble_snapshots: cadence must be positive");
    if (traj.states[0].size() % kCompartments != 0 || traj.states[0].empty())
        raise(ErrorKind::ShapeMismatch,
              "assemble_snapshots: state length is not a multiple of the compartment count");

    std::size_t stride = 1;
    if (traj.times.size() > 1) {
        const double h = traj.times[1] - traj.times[0];
        if (!(h > 0.0))
            raise(ErrorKind::CadenceMismatch, "assemble_snapshots: times must increase");
        const double ratio = cadence / h;
        const double rounded = std::nearbyint(ratio);
        if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
            raise(ErrorKind::CadenceMismatch,
                  "assemble_snapshots: cadence " + detail::format_double(cadence) +
                      " is not a whole multiple of the step " + detail::format_double(h));
        stride = static_cast<std::size_t>(rounded);
        // Guard against non-uniform trajectories: every used sample must sit
        // on the cadence grid.
        for (std::size_t k = 0; k < traj.times.size(); k += stride) {
            const double expect = traj.times[0] + static_cast<double>(k) * h;
            if (std::abs(traj.times[k] - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
                raise(ErrorKind::CadenceMismatch, "assemble_snapshots: non-uniform trajectory times");
        }
    }

    SnapshotMatrix snap;
    snap.n_cells = traj.states[0].size() / kCompartments;
    for (std::size_t k = 0; k < traj.times.size(); k += stride) {
        snap.days.push_back(static_cast<int>(snap.days.size()));
        snap.rows.push_back(traj.states[k]);
    }
    snap.check();
    return snap;
}

inline void write_snapshot_csv(const SnapshotMatrix& snap, std::ostream& out) {
    snap.check();
    out << "day";
    for (std::size_t c = 0; c < kCompartments; ++c)
        for (std::size_t cell = 0; cell < snap.n_cells; ++cell)
            out << ',' << kCompartmentNames[c] << '_' << cell;
    out << '\n';
    for (std::size_t row = 0; row < snap.rows.size(); ++row) {
        out << snap.days[row];
        for (double v : snap.rows[row]) out << ',' << detail::format_double(v);
        out << '\n';
    }
}

inline void write_snapshot_csv(const SnapshotMatrix& snap, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::IoError, "cannot open for writing: " + path);
    write_snapshot_csv(snap, out);
    if (!out) raise(ErrorKind::IoError, "write failed: " + path);
}

inline SnapshotMatrix read_snapshot_csv(std::istream& in, const char* what = "snapshot csv") {
    std::string line;
    if (!std::getline(in, line))
        raise(ErrorKind::ParseError, std::string(what) + " line 1: missing header");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 1 + kCompartments || header[0] != "day" ||
        (header.size() - 1) % kCompartments != 0)
        raise(ErrorKind::ParseError, std::string(what) + " line 1: malformed header");
    SnapshotMatrix snap;
    snap.n_cells = (header.size() - 1) / kCompartments;
    for (std::size_t c = 0; c < kCompartments; ++c)
        for (std::size_t cell = 0; cell < snap.n_cells; ++cell) {
            const std::string expect =
                std::string(kCompartmentNames[c]) + "_" + std::to_string(cell);
            if (header[1 + c * snap.n_cells + cell] != expect)
                raise(ErrorKind::ParseError,
                      std::string(what) + " line 1: expected column '" + expect + "'");
        }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            raise(ErrorKind::ParseError, std::string(what) + " line " + std::to_string(line_no) +
                                             ": expected " + std::to_string(header.size()) +
                                             " fields, got " + std::to_string(fields.size()));
        snap.days.push_back(static_cast<int>(detail::parse_int(fields[0], line_no, what)));
        std::vector<double> row(fields.size() - 1);
        for (std::size_t j = 1; j < fields.size(); ++j)
            row[j - 1] = detail::parse_double(fields[j], line_no, what);
        snap.rows.push_back(std::move(row));
    }
    if (snap.rows.empty())
        raise(ErrorKind::ParseError, std::string(what) + ": no data rows");
    snap.check();
    return snap;
}

inline SnapshotMatrix read_snapshot_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open for reading: " + path);
    return read_snapshot_csv(in, path.c_str());
}

/// Divide every entry by the day-0 total living population (sum of the
/// s, e, i, r columns of the first row). Returns the scaled matrix and the
/// scale factor needed to invert.
inline std::pair<SnapshotMatrix, double> normalize(const SnapshotMatrix& snap) {
    snap.check();
    double scale = 0.0;
    const std::size_t n = snap.n_cells;
    for (std::size_t c = 0; c < 4; ++c) // s, e, i, r
        for (std::size_t cell = 0; cell < n; ++cell) scale += snap.rows[0][c * n + cell];
    if (!(scale > 0.0) || !std::isfinite(scale))
        raise(ErrorKind::ZeroPopulation, "normalize: day-0 living population is not positive");
    SnapshotMatrix out = snap;
    for (auto& row : out.rows)
        for (auto& v : row) v /= scale;
    return {std::move(out), scale};
}

/// Per-compartment spatial mean: collapses an n-cell matrix to a single-cell
/// one (the aggregate view a surveillance feed would provide).
inline SnapshotMatrix aggregate_mean(const SnapshotMatrix& snap) {
    snap.check();
    SnapshotMatrix out;
    out.n_cells = 1;
    out.days = snap.days;
    const double inv = 1.0 / static_cast<double>(snap.n_cells);
    for (const auto& row : snap.rows) {
        std::vector<double> agg(kCompartments, 0.0);
        for (std::size_t c = 0; c < kCompartments; ++c) {
            double sum = 0.0;
            for (std::size_t cell = 0; cell < snap.n_cells; ++cell)
                sum += row[c * snap.n_cells + cell];
            agg[c] = sum * inv;
        }
        out.rows.push_back(std::move(agg));
    }
    return out;
}

/// First `train_days` rows for fitting, the remainder held out.
inline std::pair<SnapshotMatrix, SnapshotMatrix> split_train_forecast(const SnapshotMatrix& snap,
                                                                      int train_days) {
    snap.check();
    if (train_days < 2 || static_cast<std::size_t>(train_days) >= snap.rows.size())
        raise(ErrorKind::InvalidSplit, "split_train_forecast: train_days=" +
                                           std::to_string(train_days) + " with " +
                                           std::to_string(snap.rows.size()) + " rows");
    SnapshotMatrix train, holdout;
    train.n_cells = holdout.n_cells = snap.n_cells;
    const auto cut = static_cast<std::size_t>(train_days);
    train.days.assign(snap.days.begin(), snap.days.begin() + static_cast<std::ptrdiff_t>(cut));
    train.rows.assign(snap.rows.begin(), snap.rows.begin() + static_cast<std::ptrdiff_t>(cut));
    holdout.days.assign(snap.days.begin() + static_cast<std::ptrdiff_t>(cut), snap.days.end());
    holdout.rows.assign(snap.rows.begin() + static_cast<std::ptrdiff_t>(cut), snap.rows.end());
    return {std::move(train), std::move(holdout)};
}

// ---------------------------------------------------------------------------
// Synthetic initial conditions
// ---------------------------------------------------------------------------

struct GaussianBump {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;
    double amp = 0.0;
};

/// Per-compartment uniform background plus any number of Gaussian bumps.
struct InitialConditionSpec {
    std::array<double, kCompartments> uniform{};
    std::array<std::vector<GaussianBump>, kCompartments> bumps;

    void validate() const {
        for (double u : uniform)
            if (!std::isfinite(u) || u < 0.0)
                raise(ErrorKind::InvalidSpec, "initial condition: uniform level must be >= 0");
        for (const auto& list : bumps)
            for (const auto& b : list) {
                if (!std::isfinite(b.sigma) || b.sigma <= 0.0)
                    raise(ErrorKind::InvalidSpec, "initial condition: bump sigma must be > 0");
                if (!std::isfinite(b.amp) || b.amp < 0.0)
                    raise(ErrorKind::InvalidSpec, "initial condition: bump amplitude must be >= 0");
                if (!std::isfinite(b.x) || !std::isfinite(b.y))
                    raise(ErrorKind::InvalidSpec, "initial condition: bump center must be finite");
            }
    }
};

/// Evaluate the configured fields at cell centers; purely additive, so an
/// empty description gives all-zero fields.
/// A bump of amplitude A and width sigma integrates to about
/// A*2*pi*sigma^2/dx^2 in cell-sum units when the grid is much wider than
/// sigma.
inline CompartmentFields synth_initial_conditions(const Grid& grid,
                                                  const InitialConditionSpec& spec) {
    spec.validate();
    const auto n_cells = static_cast<std::size_t>(grid.n_cells());
    CompartmentFields fields(n_cells);
    for (std::size_t c = 0; c < kCompartments; ++c) {
        auto& field = fields.compartment(static_cast<int>(c));
        for (std::size_t cell = 0; cell < n_cells; ++cell) field[cell] = spec.uniform[c];
        for (const auto& b : spec.bumps[c]) {
            const double inv_two_sigma_sq = 1.0 / (2.0 * b.sigma * b.sigma);
            for (int gy = 0; gy < grid.ny; ++gy)
                for (int gx = 0; gx < grid.nx; ++gx) {
                    const double dx = grid.center_x(gx) - b.x;
                    const double dy = grid.center_y(gy) - b.y;
                    field[static_cast<std::size_t>(grid.index(gx, gy))] +=
                        b.amp * std::exp(-(dx * dx + dy * dy) * inv_two_sigma_sq);
                }
        }
    }
    return fields;
}

// ---------------------------------------------------------------------------
// Surveillance case series
// ---------------------------------------------------------------------------

namespace detail {

/// Days since 1970-01-01 for a proleptic-Gregorian civil date.
inline long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const long yoe = static_cast<long>(y) - era * 400;
    const long doy = (153L * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

inline long parse_iso_date(const std::string& field, std::size_t line_no, const char* what) {
    int y = 0, m = 0, d = 0;
    char extra = '\0';
    if (std::sscanf(field.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &extra) != 3 || m < 1 || m > 12 ||
        d < 1 || d > 31)
        raise(ErrorKind::ParseError, std::string(what) + " line " + std::to_string(line_no) +
                                         ": bad ISO-8601 date '" + field + "'");
    return days_from_civil(y, m, d);
}

} // namespace detail

/// Daily counts as a public dashboard would publish them. Columns other than
/// the date are optional; a compartment that is absent from the file is
/// flagged absent rather than silently zero.
struct CaseSeries {
    std::string region;
    std::vector<std::string> dates;  // ISO-8601, strictly increasing
    std::vector<int> day_offsets;    // days since the first date
    std::array<bool, kCompartments> present{};
    std::array<std::vector<double>, kCompartments> counts; // persons; empty when absent
};

/// CSV with header `date[,s][,e][,i][,r][,d]`; compartment columns may be any
/// subset but must keep the canonical order. An optional first line
/// `# region: <label>` names the series.
inline CaseSeries load_case_series(std::istream& in, const char* what = "case series") {
    CaseSeries series;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line))
        raise(ErrorKind::ParseError, std::string(what) + " line 1: missing header");
    ++line_no;
    if (line.rfind("# region:", 0) == 0) {
        series.region = line.substr(9);
        while (!series.region.empty() && series.region.front() == ' ')
            series.region.erase(series.region.begin());
        if (!std::getline(in, line))
            raise(ErrorKind::ParseError, std::string(what) + ": missing header after region line");
        ++line_no;
    }

    const auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "date" || header.size() < 2)
        raise(ErrorKind::ParseError, std::string(what) + " line " + std::to_string(line_no) +
                                         ": header must start with 'date' and name compartments");
    std::vector<std::size_t> column_compartment; // per data column, compartment index
    {
        std::size_t cursor = 0;
        for (std::size_t j = 1; j < header.size(); ++j) {
            while (cursor < kCompartments && header[j] != kCompartmentNames[cursor]) ++cursor;
            if (cursor == kCompartments)
                raise(ErrorKind::ParseError, std::string(what) + " line " +
                                                 std::to_string(line_no) + ": unknown column '" +
                                                 header[j] + "' (order must be s,e,i,r,d)");
            column_compartment.push_back(cursor);
            series.present[cursor] = true;
            ++cursor;
        }
    }

    long first_serial = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            raise(ErrorKind::ParseError, std::string(what) + " line " + std::to_string(line_no) +
                                             ": expected " + std::to_string(header.size()) +
                                             " fields");
        const long serial = detail::parse_iso_date(fields[0], line_no, what);
        if (series.dates.empty()) {
            first_serial = serial;
        } else if (serial <= first_serial + series.day_offsets.back()) {
            raise(ErrorKind::NonMonotonicDates, std::string(what) + " line " +
                                                    std::to_string(line_no) +
                                                    ": dates must strictly increase");
        }
        series.dates.push_back(fields[0]);
        series.day_offsets.push_back(static_cast<int>(serial - first_serial));
        for (std::size_t j = 1; j < fields.size(); ++j) {
            const double v = detail::parse_double(fields[j], line_no, what);
            if (v < 0.0)
                raise(ErrorKind::NegativeCount, std::string(what) + " line " +
                                                    std::to_string(line_no) +
                                                    ": counts must be non-negative");
            series.counts[column_compartment[j - 1]].push_back(v);
        }
    }
    if (series.dates.empty()) raise(ErrorKind::ParseError, std::string(what) + ": no data rows");
    return series;
}

inline CaseSeries load_case_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open for reading: " + path);
    return load_case_series(in, path.c_str());
}

inline void write_case_series(const CaseSeries& series, std::ostream& out) {
    if (!series.region.empty()) out << "# region: " << series.region << '\n';
    out << "date";
    for (std::size_t c = 0; c < kCompartments; ++c)
        if (series.present[c]) out << ',' << kCompartmentNames[c];
    out << '\n';
    for (std::size_t k = 0; k < series.dates.size(); ++k) {
        out << series.dates[k];
        for (std::size_t c = 0; c < kCompartments; ++c)
            if (series.present[c]) out << ',' << detail::format_double(series.counts[c][k]);
        out << '\n';
    }
}

/// Documented imputation from partial surveillance counts to full rows:
/// present columns are taken as-is; a missing e is a fixed multiple of i, a
/// missing r or d is zero, and s absorbs the remainder of the population.
/// i must be observed.
inline SnapshotMatrix case_series_to_snapshots(const CaseSeries& series, double population,
                                               double exposed_ratio = 1.5) {
    if (!(population > 0.0) || !std::isfinite(population))
        raise(ErrorKind::ZeroPopulation, "case_series_to_snapshots: population must be positive");
    if (!(exposed_ratio >= 0.0) || !std::isfinite(exposed_ratio))
        raise(ErrorKind::InvalidConfig, "case_series_to_snapshots: exposed_ratio must be >= 0");
    if (!series.present[2])
        raise(ErrorKind::InvalidConfig, "case_series_to_snapshots: the i column is required");
    SnapshotMatrix snap;
    snap.n_cells = 1;
    snap.days = series.day_offsets;
    for (std::size_t k = 0; k < series.day_offsets.size(); ++k) {
        const double i = series.counts[2][k];
        const double e = series.present[1] ? series.counts[1][k] : exposed_ratio * i;
        const double r = series.present[3] ? series.counts[3][k] : 0.0;
        const double d = series.present[4] ? series.counts[4][k] : 0.0;
        double s = series.present[0] ? series.counts[0][k] : population - e - i - r - d;
        if (s < 0.0)
            raise(ErrorKind::InvalidConfig,
                  "case_series_to_snapshots: population too small on day " +
                      std::to_string(series.day_offsets[k]));
        snap.rows.push_back({s, e, i, r, d});
    }
    snap.check();
    return snap;
}

} // namespace epiforge

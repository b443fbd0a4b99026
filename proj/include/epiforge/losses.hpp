#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "epiforge/data_io.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/ode.hpp"
#include "epiforge/seird.hpp"

namespace epiforge {

/// The per-epoch / per-evaluation error summary. The algebraic invariant
/// mse_l == omega_u*mse_u + omega_s*mse_s is established by the producer and
/// verified by tests.
struct LossReport {
    std::array<double, kCompartments> per_compartment{}; // s, e, i, r, d
    double mse_l = 0.0;
    double mse_u = 0.0;
    double mse_s = 0.0;
    double wall_seconds = 0.0;
};

/// Composite objective value from its parts.
inline double combined_loss(double mse_u, double mse_s, double omega_u, double omega_s) {
    if (mse_u < 0.0 || mse_s < 0.0)
        raise(ErrorKind::InvalidConfig, "combined_loss: inputs must be >= 0");
    return omega_u * mse_u + omega_s * mse_s;
}

// ---------------------------------------------------------------------------
// Batch-of-rows helpers (used by the trainers)
// ---------------------------------------------------------------------------

/// Mean squared mismatch between predictions and targets over a batch of
/// equal-length state vectors; normalized by (rows * state dimension).
inline double mse_data(const std::vector<std::vector<double>>& predicted,
                       const std::vector<std::vector<double>>& target) {
    if (predicted.size() != target.size())
        raise(ErrorKind::ShapeMismatch, "mse_data: batch sizes differ");
    if (predicted.empty()) raise(ErrorKind::ShapeMismatch, "mse_data: empty batch");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t row = 0; row < predicted.size(); ++row) {
        if (predicted[row].size() != target[row].size())
            raise(ErrorKind::ShapeMismatch, "mse_data: row lengths differ");
        for (std::size_t j = 0; j < predicted[row].size(); ++j) {
            const double diff = predicted[row][j] - target[row][j];
            acc += diff * diff;
            ++count;
        }
    }
    if (count == 0) raise(ErrorKind::ShapeMismatch, "mse_data: zero-length rows");
    return acc / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Snapshot-level operations
// ---------------------------------------------------------------------------

/// Mean squared error between two snapshot matrices covering the same days.
inline double mse_data(const SnapshotMatrix& predicted, const SnapshotMatrix& observed) {
    predicted.check();
    observed.check();
    if (predicted.n_cells != observed.n_cells || predicted.rows.size() != observed.rows.size())
        raise(ErrorKind::ShapeMismatch, "mse_data: snapshot shapes differ");
    if (predicted.days != observed.days)
        raise(ErrorKind::TimestampMismatch, "mse_data: snapshot day indices differ");
    return mse_data(predicted.rows, observed.rows);
}

/// Per-compartment mean squared errors plus the overall value (mean over all
/// entries, i.e. the mean of the per-compartment means when cells are equal).
inline LossReport compartment_mse(const SnapshotMatrix& predicted,
                                  const SnapshotMatrix& observed) {
    predicted.check();
    observed.check();
    if (predicted.n_cells != observed.n_cells || predicted.rows.size() != observed.rows.size())
        raise(ErrorKind::ShapeMismatch, "compartment_mse: snapshot shapes differ");
    if (predicted.days != observed.days)
        raise(ErrorKind::TimestampMismatch, "compartment_mse: snapshot day indices differ");
    LossReport report;
    const std::size_t n = predicted.n_cells;
    double total = 0.0;
    for (std::size_t c = 0; c < kCompartments; ++c) {
        double acc = 0.0;
        for (std::size_t row = 0; row < predicted.rows.size(); ++row)
            for (std::size_t cell = 0; cell < n; ++cell) {
                const double diff =
                    predicted.rows[row][c * n + cell] - observed.rows[row][c * n + cell];
                acc += diff * diff;
            }
        report.per_compartment[c] =
            acc / (static_cast<double>(predicted.rows.size()) * static_cast<double>(n));
        total += acc;
    }
    report.mse_u = total / (static_cast<double>(predicted.rows.size()) *
                            static_cast<double>(predicted.state_dim()));
    report.mse_l = report.mse_u;
    return report;
}

/// PDE-defect loss of a stored trajectory against the SEIRD dynamics: for
/// each consecutive row pair, residual = (y_next - y_prev)/h - rhs(y_next),
/// averaged (squared) over all pairs and entries. Rows are h days apart.
inline double mse_physics(const SnapshotMatrix& trajectory, const SeirdParams& params,
                          const Grid& grid, double h) {
    trajectory.check();
    if (trajectory.rows.size() < 2)
        raise(ErrorKind::ShapeMismatch, "mse_physics: need at least two snapshots");
    if (!(h > 0.0) || !std::isfinite(h))
        raise(ErrorKind::InvalidConfig, "mse_physics: h must be positive");
    if (trajectory.n_cells != static_cast<std::size_t>(grid.n_cells()))
        raise(ErrorKind::DimensionMismatch, "mse_physics: snapshot cells do not match grid");

    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k + 1 < trajectory.rows.size(); ++k) {
        const auto& prev = trajectory.rows[k];
        const auto& next = trajectory.rows[k + 1];
        const CompartmentFields state = CompartmentFields::unflatten(next, trajectory.n_cells);
        const CompartmentFields rates = seird_rhs(state, params, grid);
        const std::vector<double> rate_flat = rates.flatten();
        for (std::size_t j = 0; j < next.size(); ++j) {
            const double defect = (next[j] - prev[j]) / h - rate_flat[j];
            acc += defect * defect;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

/// Implicit-Euler defect of predicted steps against an arbitrary dynamical
/// system (the trainers' physics term):
///   q = (y_next_hat - y_t)/h - f(t_next, y_next_hat).
inline double mse_physics(const std::vector<std::vector<double>>& predicted,
                          const std::vector<std::vector<double>>& previous,
                          const std::vector<double>& t_next, double h, const OdeSystem& f) {
    if (predicted.size() != previous.size() || predicted.size() != t_next.size())
        raise(ErrorKind::ShapeMismatch, "mse_physics: batch sizes differ");
    if (predicted.empty()) raise(ErrorKind::ShapeMismatch, "mse_physics: empty batch");
    if (!(h > 0.0) || !std::isfinite(h))
        raise(ErrorKind::InvalidConfig, "mse_physics: h must be positive");

    double acc = 0.0;
    std::size_t count = 0;
    std::vector<double> rate;
    for (std::size_t row = 0; row < predicted.size(); ++row) {
        const auto& y_hat = predicted[row];
        const auto& y_prev = previous[row];
        if (y_hat.size() != y_prev.size() || y_hat.size() != f.dim())
            raise(ErrorKind::ShapeMismatch, "mse_physics: row length differs from system dimension");
        rate.assign(y_hat.size(), 0.0);
        f.eval(t_next[row], y_hat, rate);
        for (std::size_t j = 0; j < y_hat.size(); ++j) {
            const double defect = (y_hat[j] - y_prev[j]) / h - rate[j];
            acc += defect * defect;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

/// Mean absolute trajectory error over sequences x time steps x features,
/// normalized by the total number of scalar entries.
inline double trajectory_l1_loss(const std::vector<std::vector<std::vector<double>>>& predicted,
                                 const std::vector<std::vector<std::vector<double>>>& target) {
    if (predicted.size() != target.size())
        raise(ErrorKind::ShapeMismatch, "trajectory_l1_loss: sequence counts differ");
    if (predicted.empty()) raise(ErrorKind::ShapeMismatch, "trajectory_l1_loss: empty batch");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < predicted.size(); ++s) {
        if (predicted[s].size() != target[s].size())
            raise(ErrorKind::ShapeMismatch, "trajectory_l1_loss: sequence lengths differ");
        for (std::size_t t = 0; t < predicted[s].size(); ++t) {
            if (predicted[s][t].size() != target[s][t].size())
                raise(ErrorKind::ShapeMismatch, "trajectory_l1_loss: state lengths differ");
            for (std::size_t j = 0; j < predicted[s][t].size(); ++j) {
                acc += std::abs(predicted[s][t][j] - target[s][t][j]);
                ++count;
            }
        }
    }
    if (count == 0) raise(ErrorKind::ShapeMismatch, "trajectory_l1_loss: no entries");
    return acc / static_cast<double>(count);
}

} // namespace epiforge

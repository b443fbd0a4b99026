#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "epiforge/adam.hpp"
#include "epiforge/data_io.hpp"
#include "epiforge/drrnn.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/grad.hpp"
#include "epiforge/losses.hpp"
#include "epiforge/rnn.hpp"
#include "epiforge/textio.hpp"

namespace epiforge {

struct TrainConfig {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 500;
    double omega_u = 1.0;
    double omega_s = 1.0;
    int train_days = 106;
    int total_days = 120;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0) || !(adam_beta1 > 0.0) || !(adam_beta2 > 0.0) ||
            !(adam_eps > 0.0))
            raise(ErrorKind::InvalidConfig, "TrainConfig: all rates must be > 0");
        if (adam_beta1 >= 1.0 || adam_beta2 >= 1.0)
            raise(ErrorKind::InvalidConfig, "TrainConfig: Adam decay factors must be < 1");
        if (epochs < 0) raise(ErrorKind::InvalidConfig, "TrainConfig: epochs must be >= 0");
        if (omega_u < 0.0 || omega_s < 0.0)
            raise(ErrorKind::InvalidConfig, "TrainConfig: loss weights must be >= 0");
        if (train_days >= total_days)
            raise(ErrorKind::InvalidConfig, "TrainConfig: train_days must be < total_days");
        if (train_days < 2) raise(ErrorKind::InvalidConfig, "TrainConfig: train_days must be >= 2");
    }

    AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
};

inline double combined_loss(double mse_u, double mse_s, const TrainConfig& config) {
    return combined_loss(mse_u, mse_s, config.omega_u, config.omega_s);
}

/// One row of the epoch-history log.
struct EpochRecord {
    int epoch = 0; // 1-based
    double mse_u = 0.0;
    double mse_s = 0.0;
    double mse_l = 0.0;
    double wall_seconds = 0.0; // cumulative since training start
};

inline void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out) {
    out << "epoch,mse_u,mse_s,mse_l,wall_seconds\n";
    for (const auto& rec : history)
        out << rec.epoch << ',' << detail::format_double(rec.mse_u) << ','
            << detail::format_double(rec.mse_s) << ',' << detail::format_double(rec.mse_l) << ','
            << detail::format_double(rec.wall_seconds) << '\n';
}

inline void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::IoError, "cannot open for writing: " + path);
    write_history_csv(history, out);
    if (!out) raise(ErrorKind::IoError, "write failed: " + path);
}

inline std::vector<EpochRecord> read_history_csv(std::istream& in,
                                                 const char* what = "history csv") {
    std::string line;
    if (!std::getline(in, line) ||
        detail::split_csv_line(line) !=
            std::vector<std::string>{"epoch", "mse_u", "mse_s", "mse_l", "wall_seconds"})
        raise(ErrorKind::ParseError, std::string(what) + " line 1: malformed header");
    std::vector<EpochRecord> history;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 5)
            raise(ErrorKind::ParseError,
                  std::string(what) + " line " + std::to_string(line_no) + ": expected 5 fields");
        EpochRecord rec;
        rec.epoch = static_cast<int>(detail::parse_int(fields[0], line_no, what));
        rec.mse_u = detail::parse_double(fields[1], line_no, what);
        rec.mse_s = detail::parse_double(fields[2], line_no, what);
        rec.mse_l = detail::parse_double(fields[3], line_no, what);
        rec.wall_seconds = detail::parse_double(fields[4], line_no, what);
        history.push_back(rec);
    }
    return history;
}

inline std::vector<EpochRecord> read_history_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open for reading: " + path);
    return read_history_csv(in, path.c_str());
}

/// Consecutive-row supervision pairs from daily (or any uniformly spaced)
/// snapshots. Returns the pairs and the spacing in days.
inline std::pair<std::vector<TrainingPair>, double> make_training_pairs(
    const SnapshotMatrix& data) {
    data.check();
    if (data.rows.size() < 2)
        raise(ErrorKind::InvalidConfig, "make_training_pairs: need at least two snapshots");
    const int spacing = data.days[1] - data.days[0];
    for (std::size_t k = 1; k < data.days.size(); ++k)
        if (data.days[k] - data.days[k - 1] != spacing)
            raise(ErrorKind::CadenceMismatch, "make_training_pairs: day spacing is not uniform");
    std::vector<TrainingPair> pairs;
    pairs.reserve(data.rows.size() - 1);
    for (std::size_t k = 0; k + 1 < data.rows.size(); ++k) {
        TrainingPair pair;
        pair.t = static_cast<double>(data.days[k]);
        pair.y_t = data.rows[k];
        pair.y_next = data.rows[k + 1];
        pairs.push_back(std::move(pair));
    }
    return {std::move(pairs), static_cast<double>(spacing)};
}

namespace detail {

inline void check_epoch_finite(double mse_l, int epoch) {
    if (!std::isfinite(mse_l))
        raise(ErrorKind::DivergedTraining,
              "loss became non-finite at epoch " + std::to_string(epoch));
}

class WallTimer {
public:
    WallTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace detail

/// Full-batch Adam on the composite one-step objective. One epoch = one Adam
/// step over all consecutive-row pairs of `data`. The logged losses are the
/// values at the parameters the epoch started from. `params` is updated in
/// place; the epoch history is returned. config.epochs == 0 leaves params
/// untouched and returns an empty history.
inline std::vector<EpochRecord> train_drrnn(DrRnnParams& params, const OdeSystem& f,
                                            const SnapshotMatrix& data,
                                            const TrainConfig& config) {
    config.validate();
    params.check();
    auto [pairs, h] = make_training_pairs(data);

    std::vector<EpochRecord> history;
    if (config.epochs == 0) return history;
    history.reserve(static_cast<std::size_t>(config.epochs));

    std::vector<double> theta = flatten(params);
    AdamState adam_state(theta.size());
    const AdamConfig adam_config = config.adam();
    DrRnnGrads grads;
    detail::WallTimer timer;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const LossReport report =
            drrnn_batch_gradient(params, f, pairs, h, config.omega_u, config.omega_s, grads);
        detail::check_epoch_finite(report.mse_l, epoch);
        const std::vector<double> grad_flat = flatten(grads);
        adam_step(theta, grad_flat, adam_state, adam_config);
        unflatten(theta, params);
        history.push_back({epoch, report.mse_u, report.mse_s, report.mse_l, timer.seconds()});
    }
    return history;
}

/// Teacher-forced LSTM baseline on the L1 trajectory objective (the
/// recurrent-baseline loss, not the composite one): inputs are rows 0..T-2,
/// targets rows 1..T-1. The trajectory loss is logged in the data column;
/// the physics column is identically zero.
inline std::vector<EpochRecord> train_lstm(LstmParams& params, const SnapshotMatrix& data,
                                           const TrainConfig& config) {
    config.validate();
    params.check();
    data.check();
    if (data.rows.size() < 2)
        raise(ErrorKind::InvalidConfig, "train_lstm: need at least two snapshots");
    if (params.p != data.state_dim() || params.q != data.state_dim())
        raise(ErrorKind::DimensionMismatch, "train_lstm: model input/output size must equal the state dimension");

    const std::vector<std::vector<double>> inputs(data.rows.begin(), data.rows.end() - 1);
    const std::vector<std::vector<double>> targets(data.rows.begin() + 1, data.rows.end());

    std::vector<EpochRecord> history;
    if (config.epochs == 0) return history;
    history.reserve(static_cast<std::size_t>(config.epochs));

    std::vector<double> theta = flatten(params);
    AdamState adam_state(theta.size());
    const AdamConfig adam_config = config.adam();
    LstmGrads grads;
    detail::WallTimer timer;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double loss = lstm_sequence_gradient(params, inputs, targets, grads);
        const double mse_l = combined_loss(loss, 0.0, config);
        detail::check_epoch_finite(mse_l, epoch);
        const std::vector<double> grad_flat = flatten(grads);
        adam_step(theta, grad_flat, adam_state, adam_config);
        unflatten(theta, params);
        history.push_back({epoch, loss, 0.0, mse_l, timer.seconds()});
    }
    return history;
}

/// Plain-RNN analog of train_lstm.
inline std::vector<EpochRecord> train_rnn(RnnParams& params, const SnapshotMatrix& data,
                                          const TrainConfig& config) {
    config.validate();
    params.check();
    data.check();
    if (data.rows.size() < 2)
        raise(ErrorKind::InvalidConfig, "train_rnn: need at least two snapshots");
    if (params.p != data.state_dim() || params.q != data.state_dim())
        raise(ErrorKind::DimensionMismatch, "train_rnn: model input/output size must equal the state dimension");

    const std::vector<std::vector<double>> inputs(data.rows.begin(), data.rows.end() - 1);
    const std::vector<std::vector<double>> targets(data.rows.begin() + 1, data.rows.end());

    std::vector<EpochRecord> history;
    if (config.epochs == 0) return history;
    history.reserve(static_cast<std::size_t>(config.epochs));

    std::vector<double> theta = flatten(params);
    AdamState adam_state(theta.size());
    const AdamConfig adam_config = config.adam();
    RnnGrads grads;
    detail::WallTimer timer;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double loss = rnn_sequence_gradient(params, inputs, targets, grads);
        const double mse_l = combined_loss(loss, 0.0, config);
        detail::check_epoch_finite(mse_l, epoch);
        const std::vector<double> grad_flat = flatten(grads);
        adam_step(theta, grad_flat, adam_state, adam_config);
        unflatten(theta, params);
        history.push_back({epoch, loss, 0.0, mse_l, timer.seconds()});
    }
    return history;
}

} // namespace epiforge

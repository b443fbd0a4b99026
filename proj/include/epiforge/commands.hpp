#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epiforge/config.hpp"
#include "epiforge/data_io.hpp"
#include "epiforge/drrnn.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/grad.hpp"
#include "epiforge/losses.hpp"
#include "epiforge/manifest.hpp"
#include "epiforge/pgm.hpp"
#include "epiforge/rnn.hpp"
#include "epiforge/serialize.hpp"
#include "epiforge/train.hpp"

namespace epiforge {

// Process exit codes shared by all subcommands.
constexpr int kExitOk = 0;            // ran and all checks passed
constexpr int kExitCheckFailure = 1;  // ran, but a verification check failed
constexpr int kExitUsage = 2;         // bad arguments, config, or input files
constexpr int kExitNumerical = 3;     // numerical breakdown during the run

inline int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::NonFiniteState:
        case ErrorKind::NoConvergence:
        case ErrorKind::DivergedTraining:
        case ErrorKind::NonFiniteGradient:
        case ErrorKind::NonPositivePopulation:
        case ErrorKind::ZeroPopulation:
            return kExitNumerical;
        default:
            return kExitUsage;
    }
}

namespace detail {

/// Run a command body with manifest bookkeeping: the manifest lands in
/// out_dir on success and on failure, and errors map to process exit codes.
template <typename Body>
int run_command(RunManifest& manifest, const std::string& out_dir, Body&& body) {
    const std::string manifest_path = out_dir + "/" + manifest.command + "_manifest.json";
    try {
        std::filesystem::create_directories(out_dir);
        const int code = body();
        if (code == kExitOk)
            manifest.finish_ok();
        else
            manifest.finish_error("check failed (exit " + std::to_string(code) + ")");
        manifest.write(manifest_path);
        return code;
    } catch (const Error& e) {
        std::cerr << "epiforge " << manifest.command << ": " << e.what() << '\n';
        manifest.finish_error(e.what());
        try {
            manifest.write(manifest_path);
        } catch (...) {
            // The manifest is best-effort on a failing run.
        }
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "epiforge " << manifest.command << ": " << e.what() << '\n';
        manifest.finish_error(e.what());
        try {
            manifest.write(manifest_path);
        } catch (...) {
        }
        return kExitUsage;
    }
}

inline void record_config(RunManifest& manifest, const KeyValueConfig& config) {
    for (const auto& entry : config.entries()) manifest.config[entry.key] = entry.value;
}

/// Whole number of integrator steps covering `days` at step size dt.
inline int steps_for(int days, double dt) {
    const double exact = static_cast<double>(days) / dt;
    const int steps = static_cast<int>(std::lround(exact));
    if (steps < 1 || std::abs(steps * dt - static_cast<double>(days)) > 1e-9 * std::max(1.0, exact))
        raise(ErrorKind::InvalidConfig,
              "days must be a whole multiple of dt (days=" + std::to_string(days) +
                  ", dt=" + std::to_string(dt) + ")");
    return steps;
}

inline double total_mass(const std::vector<double>& row) {
    double total = 0.0;
    for (double v : row) total += v;
    return total;
}

} // namespace detail

// ---------------------------------------------------------------------------
// simulate: integrate the gridded model and archive snapshots + heatmaps.
// ---------------------------------------------------------------------------

inline int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    RunManifest manifest("simulate");
    return detail::run_command(manifest, out_dir, [&]() -> int {
        const KeyValueConfig config = KeyValueConfig::parse_file(config_path);
        detail::record_config(manifest, config);
        const Scenario scenario = scenario_from_config(config);
        manifest.seed = scenario.seed;

        const CompartmentFields y0 = synth_initial_conditions(scenario.grid, scenario.ic);
        const SeirdGridSystem f(scenario.grid, scenario.schedule);
        const int n_steps = detail::steps_for(scenario.days, scenario.dt);
        const Trajectory traj =
            simulate(f, y0.flatten(), 0.0, n_steps, scenario.dt, scenario.method);
        const SnapshotMatrix snap = assemble_snapshots(traj, 1.0);

        const std::string snap_path = out_dir + "/snapshots.csv";
        write_snapshot_csv(snap, snap_path);
        manifest.add_artifact(snap_path);

        const std::string heat_dir = out_dir + "/heatmaps";
        std::filesystem::create_directories(heat_dir);
        write_heatmaps(heat_dir, snap, scenario.grid);
        manifest.add_artifact(heat_dir);

        // Conservation audit: the model moves mass between compartments and
        // cells but never creates or destroys it, so the grand total per day
        // should match day 0 to rounding error.
        const double total0 = detail::total_mass(snap.rows.front());
        const double denom = std::abs(total0) > 0.0 ? std::abs(total0) : 1.0;
        double max_drift = 0.0;
        const std::string cons_path = out_dir + "/conservation.txt";
        {
            std::ofstream cons(cons_path);
            if (!cons) raise(ErrorKind::IoError, "cannot open " + cons_path + " for writing");
            cons << "day total_mass relative_drift\n";
            for (std::size_t k = 0; k < snap.rows.size(); ++k) {
                const double total = detail::total_mass(snap.rows[k]);
                const double drift = std::abs(total - total0) / denom;
                max_drift = std::max(max_drift, drift);
                cons << snap.days[k] << ' ' << detail::format_double(total) << ' '
                     << detail::format_double(drift) << '\n';
            }
            cons << "max_relative_drift " << detail::format_double(max_drift) << '\n';
            if (!cons) raise(ErrorKind::IoError, "failed writing " + cons_path);
        }
        manifest.add_artifact(cons_path);
        manifest.config["max_relative_drift"] = detail::format_double(max_drift);

        std::cout << "simulate: " << snap.rows.size() << " daily snapshots on a " << scenario.grid.nx
                  << "x" << scenario.grid.ny << " grid, max relative mass drift "
                  << detail::format_double(max_drift) << '\n';
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// train: two-phase learned-integrator fitting on aggregated snapshots.
// ---------------------------------------------------------------------------

/// One-step evaluation of a trained integrator on consecutive snapshot pairs:
/// per-compartment and overall data MSE plus the physics-defect MSE of the
/// predictions, combined with the configured weights.
inline LossReport one_step_report(const DrRnnParams& params, const OdeSystem& f,
                                  const SnapshotMatrix& data, const TrainConfig& config) {
    const auto [pairs, h] = make_training_pairs(data);
    SnapshotMatrix pred, obs;
    pred.n_cells = obs.n_cells = data.n_cells;
    std::vector<std::vector<double>> previous;
    std::vector<double> t_next;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        pred.days.push_back(data.days[k + 1]);
        obs.days.push_back(data.days[k + 1]);
        pred.rows.push_back(drrnn_step(params, f, pairs[k].t, pairs[k].y_t, h));
        obs.rows.push_back(pairs[k].y_next);
        previous.push_back(pairs[k].y_t);
        t_next.push_back(pairs[k].t + h);
    }
    LossReport report = compartment_mse(pred, obs);
    report.mse_s = mse_physics(pred.rows, previous, t_next, h, f);
    report.mse_l = combined_loss(report.mse_u, report.mse_s, config);
    return report;
}

inline void write_loss_report(const LossReport& report, const std::string& path) {
    nlohmann::json j;
    for (int c = 0; c < kCompartments; ++c)
        j["mse_per_compartment"][kCompartmentNames[c]] =
            report.per_compartment[static_cast<std::size_t>(c)];
    j["mse_u"] = report.mse_u;
    j["mse_s"] = report.mse_s;
    j["mse_l"] = report.mse_l;
    j["wall_seconds"] = report.wall_seconds;
    std::ofstream out(path);
    if (!out) raise(ErrorKind::IoError, "cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) raise(ErrorKind::IoError, "failed writing " + path);
}

inline int cmd_train(const std::string& config_path, const std::string& snapshots_path,
                     const std::string& out_dir) {
    RunManifest manifest("train");
    return detail::run_command(manifest, out_dir, [&]() -> int {
        const KeyValueConfig config = KeyValueConfig::parse_file(config_path);
        detail::record_config(manifest, config);
        const Scenario scenario = scenario_from_config(config);
        manifest.seed = scenario.seed;

        // Observed data: spatial mean per compartment, rescaled so the day-0
        // living population is 1, with day 0 reserved as the initial state.
        const SnapshotMatrix raw = read_snapshot_csv(snapshots_path);
        const SnapshotMatrix agg = raw.n_cells > 1 ? aggregate_mean(raw) : raw;
        const auto [norm, scale] = normalize(agg);
        manifest.config["normalization_scale"] = detail::format_double(scale);
        if (norm.rows.size() < 3)
            raise(ErrorKind::InvalidConfig, "train: need at least three snapshot rows");

        const std::vector<double> day0_state = norm.rows.front();
        const double day0 = static_cast<double>(norm.days.front());
        SnapshotMatrix observed;
        observed.n_cells = norm.n_cells;
        observed.days.assign(norm.days.begin() + 1, norm.days.end());
        observed.rows.assign(norm.rows.begin() + 1, norm.rows.end());
        if (static_cast<int>(observed.rows.size()) != scenario.train.total_days)
            raise(ErrorKind::InvalidConfig,
                  "train: snapshot file has " + std::to_string(observed.rows.size()) +
                      " days after day 0 but train.total_days = " +
                      std::to_string(scenario.train.total_days));
        const auto [train_data, holdout] = split_train_forecast(observed, scenario.train.train_days);

        const std::string full_path = out_dir + "/observed_full.csv";
        const std::string train_path = out_dir + "/observed_train.csv";
        write_snapshot_csv(observed, full_path);
        write_snapshot_csv(train_data, train_path);
        manifest.add_artifact(full_path);
        manifest.add_artifact(train_path);

        const Seird0dSystem f(scenario.schedule);

        // Phase 1: pretrain on an internally integrated trajectory of the
        // aggregate model started from the observed day-0 state.
        const int n_steps = detail::steps_for(scenario.train.total_days, scenario.dt);
        const Trajectory pre_traj =
            simulate(f, day0_state, day0, n_steps, scenario.dt, scenario.method);
        const SnapshotMatrix pre_data = assemble_snapshots(pre_traj, 1.0);

        DrRnnParams params = init_drrnn(kCompartments, scenario.model_K, scenario.seed);
        TrainConfig phase = scenario.train;
        phase.epochs = scenario.pretrain_epochs;
        const auto pre_history = train_drrnn(params, f, pre_data, phase);
        const std::string pre_params_path = out_dir + "/pretrained.params";
        const std::string pre_hist_path = out_dir + "/pretrain_history.csv";
        save_params_file(params, pre_params_path);
        write_history_csv(pre_history, pre_hist_path);
        manifest.add_artifact(pre_params_path);
        manifest.add_artifact(pre_hist_path);

        // Phase 2: fine-tune on the observed training window.
        phase.epochs = scenario.finetune_epochs;
        const auto fine_history = train_drrnn(params, f, train_data, phase);
        const std::string fine_params_path = out_dir + "/finetuned.params";
        const std::string fine_hist_path = out_dir + "/finetune_history.csv";
        save_params_file(params, fine_params_path);
        write_history_csv(fine_history, fine_hist_path);
        manifest.add_artifact(fine_params_path);
        manifest.add_artifact(fine_hist_path);

        LossReport report = one_step_report(params, f, train_data, phase);
        report.wall_seconds = (pre_history.empty() ? 0.0 : pre_history.back().wall_seconds) +
                              (fine_history.empty() ? 0.0 : fine_history.back().wall_seconds);
        const std::string report_path = out_dir + "/loss_report.json";
        write_loss_report(report, report_path);
        manifest.add_artifact(report_path);

        std::cout << "train: pretrain " << pre_history.size() << " epochs, fine-tune "
                  << fine_history.size() << " epochs; final mse_u "
                  << detail::format_double(report.mse_u) << ", mse_s "
                  << detail::format_double(report.mse_s) << ", mse_l "
                  << detail::format_double(report.mse_l) << " ("
                  << detail::format_double(report.wall_seconds) << " s)\n";
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// forecast: closed-loop rollout from the end of the supplied history.
// ---------------------------------------------------------------------------

inline int cmd_forecast(const std::string& config_path, const std::string& params_path,
                        const std::string& snapshots_path, int horizon,
                        const std::string& out_dir) {
    RunManifest manifest("forecast");
    return detail::run_command(manifest, out_dir, [&]() -> int {
        if (horizon <= 0)
            raise(ErrorKind::InvalidConfig,
                  "forecast: horizon must be >= 1, got " + std::to_string(horizon));
        const KeyValueConfig config = KeyValueConfig::parse_file(config_path);
        detail::record_config(manifest, config);
        const Scenario scenario = scenario_from_config(config);
        manifest.seed = scenario.seed;
        manifest.config["horizon"] = std::to_string(horizon);
        manifest.config["params_path"] = params_path;

        SnapshotMatrix history = read_snapshot_csv(snapshots_path);
        const ModelKind kind = peek_params_kind(params_path);

        SnapshotMatrix forecast;
        if (kind == ModelKind::drrnn) {
            const DrRnnParams params = load_drrnn_params_file(params_path);
            if (params.n != history.state_dim() && params.n == kCompartments &&
                history.n_cells > 1) {
                // Aggregate-level model fed gridded snapshots: reduce the
                // history the same way training does.
                history = normalize(aggregate_mean(history)).first;
            }
            if (params.n != history.state_dim())
                raise(ErrorKind::DimensionMismatch,
                      "forecast: model dimension " + std::to_string(params.n) +
                          " does not match snapshot state dimension " +
                          std::to_string(history.state_dim()));
            const std::size_t grid_dim =
                static_cast<std::size_t>(kCompartments) *
                static_cast<std::size_t>(scenario.grid.n_cells());
            const Seird0dSystem f0(scenario.schedule);
            const SeirdGridSystem fg(scenario.grid, scenario.schedule);
            const OdeSystem* f = nullptr;
            if (params.n == kCompartments)
                f = &f0;
            else if (params.n == grid_dim)
                f = &fg;
            else
                raise(ErrorKind::DimensionMismatch,
                      "forecast: model dimension " + std::to_string(params.n) +
                          " matches neither the aggregate model (5) nor the configured grid (" +
                          std::to_string(grid_dim) + ")");

            const int last_day = history.days.back();
            const Trajectory roll = drrnn_rollout(params, *f, history.rows.back(), horizon, 1.0,
                                                  static_cast<double>(last_day));
            forecast.n_cells = history.n_cells;
            for (int k = 1; k <= horizon; ++k) {
                forecast.days.push_back(last_day + k);
                forecast.rows.push_back(roll.states[static_cast<std::size_t>(k)]);
            }
        } else {
            // Recurrent baselines forecast from the history sequence alone.
            const int last_day = history.days.back();
            std::vector<std::vector<double>> preds;
            if (kind == ModelKind::lstm) {
                const LstmParams params = load_lstm_params_file(params_path);
                if (params.p != history.state_dim())
                    raise(ErrorKind::DimensionMismatch,
                          "forecast: model input dimension " + std::to_string(params.p) +
                              " does not match snapshot state dimension " +
                              std::to_string(history.state_dim()));
                preds = sequence_forecast(params, history.rows, horizon);
            } else {
                const RnnParams params = load_rnn_params_file(params_path);
                if (params.p != history.state_dim())
                    raise(ErrorKind::DimensionMismatch,
                          "forecast: model input dimension " + std::to_string(params.p) +
                              " does not match snapshot state dimension " +
                              std::to_string(history.state_dim()));
                preds = sequence_forecast(params, history.rows, horizon);
            }
            forecast.n_cells = history.n_cells;
            for (int k = 1; k <= horizon; ++k) {
                forecast.days.push_back(last_day + k);
                forecast.rows.push_back(std::move(preds[static_cast<std::size_t>(k - 1)]));
            }
        }

        const std::string fc_path = out_dir + "/forecast.csv";
        write_snapshot_csv(forecast, fc_path);
        manifest.add_artifact(fc_path);

        const std::string heat_dir = out_dir + "/heatmaps";
        std::filesystem::create_directories(heat_dir);
        const Grid heat_grid = forecast.n_cells == static_cast<std::size_t>(scenario.grid.n_cells())
                                   ? scenario.grid
                                   : Grid{1, 1, 1.0};
        write_heatmaps(heat_dir, forecast, heat_grid);
        manifest.add_artifact(heat_dir);

        std::cout << "forecast: " << model_kind_name(kind) << " rollout of " << horizon
                  << " days from day " << history.days.back() << " (days "
                  << forecast.days.front() << ".." << forecast.days.back() << ")\n";
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// evaluate: per-compartment accuracy table for a forecast against truth.
// ---------------------------------------------------------------------------

inline int cmd_evaluate(const std::string& forecast_path, const std::string& truth_path,
                        const std::string& out_dir) {
    RunManifest manifest("evaluate");
    return detail::run_command(manifest, out_dir, [&]() -> int {
        const detail::WallTimer timer;
        manifest.config["forecast_path"] = forecast_path;
        manifest.config["truth_path"] = truth_path;
        const SnapshotMatrix forecast = read_snapshot_csv(forecast_path);
        const SnapshotMatrix truth = read_snapshot_csv(truth_path);
        if (forecast.n_cells != truth.n_cells)
            raise(ErrorKind::ShapeMismatch,
                  "evaluate: forecast has " + std::to_string(forecast.n_cells) +
                      " cells per row, truth has " + std::to_string(truth.n_cells));

        // Align on the days the two files share, in forecast order.
        std::map<int, std::size_t> truth_row;
        for (std::size_t k = 0; k < truth.days.size(); ++k) truth_row[truth.days[k]] = k;
        SnapshotMatrix pred, obs;
        pred.n_cells = obs.n_cells = forecast.n_cells;
        for (std::size_t k = 0; k < forecast.days.size(); ++k) {
            const auto it = truth_row.find(forecast.days[k]);
            if (it == truth_row.end()) continue;
            pred.days.push_back(forecast.days[k]);
            obs.days.push_back(forecast.days[k]);
            pred.rows.push_back(forecast.rows[k]);
            obs.rows.push_back(truth.rows[it->second]);
        }
        if (pred.rows.empty())
            raise(ErrorKind::ShapeMismatch, "evaluate: forecast and truth share no days");

        LossReport report = compartment_mse(pred, obs);
        report.wall_seconds = timer.seconds();

        std::string table;
        table += "compartment      MSE\n";
        for (int c = 0; c < kCompartments; ++c) {
            table += kCompartmentNames[c];
            table += "                ";
            table += detail::format_double(report.per_compartment[static_cast<std::size_t>(c)]);
            table += '\n';
        }
        table += "overall          " + detail::format_double(report.mse_u) + '\n';
        table += "days_compared    " + std::to_string(pred.rows.size()) + '\n';
        table += "wall_seconds     " + detail::format_double(report.wall_seconds) + '\n';
        std::cout << table;

        const std::string txt_path = out_dir + "/evaluation.txt";
        {
            std::ofstream out(txt_path);
            if (!out) raise(ErrorKind::IoError, "cannot open " + txt_path + " for writing");
            out << table;
            if (!out) raise(ErrorKind::IoError, "failed writing " + txt_path);
        }
        manifest.add_artifact(txt_path);
        const std::string json_path = out_dir + "/evaluation.json";
        write_loss_report(report, json_path);
        manifest.add_artifact(json_path);
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// gradcheck: analytic vs. central-difference gradients for both model kinds.
// ---------------------------------------------------------------------------

namespace detail {

struct BlockLayout {
    std::vector<std::pair<std::string, std::size_t>> blocks; // name, length

    std::string label(std::size_t flat_index) const {
        for (const auto& [name, len] : blocks) {
            if (flat_index < len) return name + "[" + std::to_string(flat_index) + "]";
            flat_index -= len;
        }
        return "past-the-end";
    }
};

struct WorstEntry {
    double rel_error = 0.0;
    std::string label = "none";

    void consider(std::span<const double> analytic, std::span<const double> numeric,
                  const BlockLayout& layout, const std::string& prefix) {
        for (std::size_t j = 0; j < analytic.size(); ++j) {
            const double err = std::abs(analytic[j] - numeric[j]) /
                               std::max(1.0, std::abs(numeric[j]));
            if (err > rel_error) {
                rel_error = err;
                label = prefix + "." + layout.label(j);
            }
        }
    }
};

} // namespace detail

/// `corrupt_hook` deliberately damages one analytic gradient entry before the
/// comparison; it exists so the failure path of the check is itself testable.
inline int cmd_gradcheck(std::uint64_t seed, const std::string& out_dir,
                         bool corrupt_hook = false) {
    RunManifest manifest("gradcheck");
    manifest.seed = seed;
    manifest.config["corrupt_hook"] = corrupt_hook ? "true" : "false";
    return detail::run_command(manifest, out_dir, [&]() -> int {
        constexpr double kTolerance = 1e-5;
        detail::WorstEntry worst;

        for (int inst = 0; inst < 10; ++inst) {
            const std::uint64_t inst_seed = seed + 1000003u * static_cast<std::uint64_t>(inst);
            Rng rng(inst_seed ^ 0x9e3779b97f4a7c15ull);
            const std::size_t n = 2 + static_cast<std::size_t>(inst) % 4; // 2..5
            const std::size_t K = 1 + static_cast<std::size_t>(inst) % 3; // 1..3

            Matrix a(n, n);
            for (auto& v : a.data) v = rng.uniform(-1.0, 1.0);
            const LinearSystem f(std::move(a));

            std::vector<TrainingPair> pairs(3);
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                pairs[k].t = static_cast<double>(k);
                pairs[k].y_t.resize(n);
                pairs[k].y_next.resize(n);
                for (std::size_t j = 0; j < n; ++j) {
                    pairs[k].y_t[j] = rng.uniform(0.1, 1.0);
                    pairs[k].y_next[j] = pairs[k].y_t[j] + rng.uniform(-0.1, 0.1);
                }
            }
            const double h = 0.25, omega_u = 1.0, omega_s = 0.7;

            DrRnnParams params = init_drrnn(n, K, inst_seed);
            DrRnnGrads grads = zero_grads(params);
            drrnn_batch_gradient(params, f, pairs, h, omega_u, omega_s, grads);
            std::vector<double> analytic = flatten(grads);
            if (corrupt_hook && inst == 0 && !analytic.empty()) analytic[0] += 1.0;

            const std::vector<double> theta = flatten(params);
            const auto loss = [&](std::span<const double> point) {
                DrRnnParams probe = params;
                unflatten(point, probe);
                DrRnnGrads scratch = zero_grads(probe);
                return drrnn_batch_gradient(probe, f, pairs, h, omega_u, omega_s, scratch).mse_l;
            };
            const std::vector<double> numeric = finite_diff_gradient(loss, theta);

            detail::BlockLayout layout{{{"W", n}, {"U", n * n}, {"eta", K - 1}}};
            worst.consider(analytic, numeric, layout,
                           "drrnn[" + std::to_string(inst) + "]");
        }

        for (int inst = 0; inst < 10; ++inst) {
            const std::uint64_t inst_seed = seed + 7777773u * static_cast<std::uint64_t>(inst) + 13u;
            Rng rng(inst_seed ^ 0x6a09e667f3bcc909ull);
            const std::size_t m = 2 + static_cast<std::size_t>(inst) % 3; // 2..4
            const std::size_t p = 2, q = 2;
            const std::size_t T = 2 + static_cast<std::size_t>(inst) % 4; // 2..5

            LstmParams params = init_lstm(m, p, q, inst_seed);
            std::vector<std::vector<double>> inputs(T, std::vector<double>(p));
            for (auto& row : inputs)
                for (auto& v : row) v = rng.uniform(-1.0, 1.0);

            // Targets sit a comfortable margin away from the forward
            // predictions so the absolute-error loss is locally smooth and
            // finite differences are trustworthy.
            std::vector<std::vector<double>> targets(T, std::vector<double>(q));
            {
                std::vector<double> h_state(m, 0.0), c_state(m, 0.0);
                for (std::size_t t = 0; t < T; ++t) {
                    const auto [h_next, c_next] = lstm_cell(params, h_state, c_state, inputs[t]);
                    h_state = h_next;
                    c_state = c_next;
                    const std::vector<double> x = lstm_readout(params, h_state);
                    for (std::size_t j = 0; j < q; ++j) {
                        const double offset = rng.uniform(0.3, 0.7);
                        targets[t][j] = x[j] + (rng.uniform01() < 0.5 ? -offset : offset);
                    }
                }
            }

            LstmGrads grads;
            lstm_sequence_gradient(params, inputs, targets, grads);
            const std::vector<double> analytic = flatten(grads);

            const std::vector<double> theta = flatten(params);
            const auto loss = [&](std::span<const double> point) {
                LstmParams probe = params;
                unflatten(point, probe);
                LstmGrads scratch;
                return lstm_sequence_gradient(probe, inputs, targets, scratch);
            };
            const std::vector<double> numeric = finite_diff_gradient(loss, theta);

            detail::BlockLayout layout{{{"Wf", m * (m + p)},
                                        {"Wi", m * (m + p)},
                                        {"Wo", m * (m + p)},
                                        {"Wc", m * (m + p)},
                                        {"bf", m},
                                        {"bi", m},
                                        {"bo", m},
                                        {"bc", m},
                                        {"V", q * m},
                                        {"c", q}}};
            worst.consider(analytic, numeric, layout, "lstm[" + std::to_string(inst) + "]");
        }

        manifest.config["max_rel_error"] = detail::format_double(worst.rel_error);
        manifest.config["worst_parameter"] = worst.label;
        const bool pass = worst.rel_error <= kTolerance;
        std::cout << "gradcheck: max relative error " << detail::format_double(worst.rel_error)
                  << " at " << worst.label << " (threshold " << kTolerance << ") -> "
                  << (pass ? "pass" : "FAIL") << '\n';
        return pass ? kExitOk : kExitCheckFailure;
    });
}

} // namespace epiforge

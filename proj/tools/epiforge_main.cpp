// epiforge command-line front end: simulate | train | forecast | evaluate |
// gradcheck, wired to the header-only library. Exit codes: 0 success,
// 1 check failure, 2 usage/config error, 3 numerical failure.

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "epiforge/commands.hpp"
#include "epiforge/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"epiforge: physics-informed epidemic simulation and forecasting"};
    app.set_version_flag("--version", std::string(epiforge::kVersion));
    app.require_subcommand(1);

    std::string config_path, out_dir = "run";
    std::string params_path, snapshots_path, forecast_path, truth_path;
    int horizon = 14;
    std::uint64_t seed = 0;
    bool corrupt_hook = false;

    CLI::App* sim = app.add_subcommand("simulate", "integrate the gridded model and write snapshots");
    sim->add_option("--config", config_path, "scenario config file")->required();
    sim->add_option("--out", out_dir, "output directory");

    CLI::App* train = app.add_subcommand("train", "pretrain and fine-tune the learned integrator");
    train->add_option("--config", config_path, "scenario config file")->required();
    train->add_option("--snapshots", snapshots_path, "snapshot CSV with the observations")->required();
    train->add_option("--out", out_dir, "output directory");

    CLI::App* fc = app.add_subcommand("forecast", "roll a trained model past the end of a history");
    fc->add_option("--config", config_path, "scenario config file")->required();
    fc->add_option("--params", params_path, "trained parameter file")->required();
    fc->add_option("--snapshots", snapshots_path, "snapshot CSV ending at the forecast start")->required();
    fc->add_option("--horizon", horizon, "days to forecast (default 14)");
    fc->add_option("--out", out_dir, "output directory");

    CLI::App* ev = app.add_subcommand("evaluate", "score a forecast against a truth snapshot file");
    ev->add_option("--forecast", forecast_path, "forecast CSV")->required();
    ev->add_option("--truth", truth_path, "truth CSV")->required();
    ev->add_option("--out", out_dir, "output directory");

    CLI::App* gc = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
    gc->add_option("--seed", seed, "random seed for the checked instances");
    gc->add_option("--out", out_dir, "output directory");
    gc->add_flag("--corrupt", corrupt_hook,
                 "deliberately damage one gradient entry (negative control)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // CLI11 returns 0 for --help/--version; anything else is a usage error.
        return code == 0 ? epiforge::kExitOk : epiforge::kExitUsage;
    }

    if (sim->parsed()) return epiforge::cmd_simulate(config_path, out_dir);
    if (train->parsed()) return epiforge::cmd_train(config_path, snapshots_path, out_dir);
    if (fc->parsed())
        return epiforge::cmd_forecast(config_path, params_path, snapshots_path, horizon, out_dir);
    if (ev->parsed()) return epiforge::cmd_evaluate(forecast_path, truth_path, out_dir);
    if (gc->parsed()) return epiforge::cmd_gradcheck(seed, out_dir, corrupt_hook);
    return epiforge::kExitUsage;
}

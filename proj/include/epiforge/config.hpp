#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "epiforge/data_io.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/grid.hpp"
#include "epiforge/integrators.hpp"
#include "epiforge/seird.hpp"
#include "epiforge/textio.hpp"
#include "epiforge/train.hpp"

namespace epiforge {

/// Flat-text key-value configuration: one `name = value` per line, `#`
/// comments, blank lines ignored. Time-dependent coefficient overrides use
/// `name@day = value`. Keys must be unique; every key must be consumed by the
/// scenario builder (typos fail loudly).
class KeyValueConfig {
public:
    struct Entry {
        std::string key;
        std::string value;
        std::size_t line_no = 0;
        mutable bool consumed = false;
    };

    static KeyValueConfig parse(std::istream& in, const std::string& what) {
        KeyValueConfig config;
        config.what_ = what;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                raise(ErrorKind::InvalidConfig,
                      what + " line " + std::to_string(line_no) + ": expected 'name = value'");
            Entry entry;
            entry.key = trim(trimmed.substr(0, eq));
            entry.value = trim(trimmed.substr(eq + 1));
            entry.line_no = line_no;
            if (entry.key.empty() || entry.value.empty())
                raise(ErrorKind::InvalidConfig,
                      what + " line " + std::to_string(line_no) + ": empty name or value");
            if (config.index_.count(entry.key))
                raise(ErrorKind::InvalidConfig, what + " line " + std::to_string(line_no) +
                                                    ": duplicate key '" + entry.key + "'");
            config.index_[entry.key] = config.entries_.size();
            config.entries_.push_back(std::move(entry));
        }
        return config;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) raise(ErrorKind::IoError, "cannot open config file: " + path);
        return parse(in, path);
    }

    const Entry* find(const std::string& key) const {
        auto it = index_.find(key);
        if (it == index_.end()) return nullptr;
        const Entry& entry = entries_[it->second];
        entry.consumed = true;
        return &entry;
    }

    bool has(const std::string& key) const { return index_.count(key) != 0; }

    double get_double(const std::string& key, double fallback) const {
        const Entry* entry = find(key);
        if (!entry) return fallback;
        return parse_double_value(*entry);
    }

    long get_int(const std::string& key, long fallback) const {
        const Entry* entry = find(key);
        if (!entry) return fallback;
        return parse_int_value(*entry);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const Entry* entry = find(key);
        if (!entry) return fallback;
        const char* begin = entry->value.c_str();
        char* end = nullptr;
        const unsigned long long v = std::strtoull(begin, &end, 10);
        // strtoull silently wraps negative input, so reject the sign up front.
        if (end == begin || *end != '\0' || entry->value.find('-') != std::string::npos)
            fail(*entry, "expected an unsigned integer, got '" + entry->value + "'");
        return static_cast<std::uint64_t>(v);
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const Entry* entry = find(key);
        return entry ? entry->value : fallback;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        const Entry* entry = find(key);
        if (!entry) return {};
        std::vector<double> values;
        for (const auto& field : detail::split_csv_line(entry->value)) {
            const std::string t = trim(field);
            if (t.empty()) fail(*entry, "empty element in list");
            values.push_back(detail::parse_double(t, entry->line_no, what_.c_str()));
        }
        return values;
    }

    const std::vector<Entry>& entries() const { return entries_; }
    const std::string& origin() const { return what_; }

    /// Error out if any key was never read: a typo would otherwise be a
    /// silently ignored setting.
    void ensure_all_consumed() const {
        for (const auto& entry : entries_)
            if (!entry.consumed)
                raise(ErrorKind::InvalidConfig, what_ + " line " + std::to_string(entry.line_no) +
                                                    ": unknown key '" + entry.key + "'");
    }

    double parse_double_value(const Entry& entry) const {
        return detail::parse_double(entry.value, entry.line_no, what_.c_str());
    }

    long parse_int_value(const Entry& entry) const {
        return detail::parse_int(entry.value, entry.line_no, what_.c_str());
    }

    [[noreturn]] void fail(const Entry& entry, const std::string& msg) const {
        raise(ErrorKind::InvalidConfig,
              what_ + " line " + std::to_string(entry.line_no) + ": " + msg);
    }

    static std::string trim(const std::string& text) {
        std::size_t begin = 0, end = text.size();
        while (begin < end && (text[begin] == ' ' || text[begin] == '\t')) ++begin;
        while (end > begin && (text[end - 1] == ' ' || text[end - 1] == '\t')) --end;
        return text.substr(begin, end - begin);
    }

private:
    std::string what_;
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

/// Everything one run needs: the physical scenario plus the training recipe.
struct Scenario {
    Grid grid;
    int days = 120;
    double dt = 0.25;
    StepMethod method = StepMethod::rk4;
    std::uint64_t seed = 0;
    ParamSchedule schedule;
    InitialConditionSpec ic;

    std::size_t model_K = 4;    // DR-RNN layer count
    int pretrain_epochs = 2000; // phase 1, on internally simulated data
    int finetune_epochs = 500;  // phase 2, on the observed snapshots
    TrainConfig train;
};

inline Scenario scenario_from_config(const KeyValueConfig& config) {
    Scenario scenario;
    scenario.grid = build_grid(static_cast<int>(config.get_int("grid.nx", 32)),
                               static_cast<int>(config.get_int("grid.ny", 32)),
                               config.get_double("grid.dx", 1.0));
    scenario.days = static_cast<int>(config.get_int("days", 120));
    if (scenario.days < 1) raise(ErrorKind::InvalidConfig, config.origin() + ": days must be >= 1");
    scenario.dt = config.get_double("dt", 0.25);
    if (!(scenario.dt > 0.0))
        raise(ErrorKind::InvalidConfig, config.origin() + ": dt must be > 0");
    const std::string method = config.get_string("method", "rk4");
    if (method == "rk4")
        scenario.method = StepMethod::rk4;
    else if (method == "implicit_euler" || method == "implicit-euler")
        scenario.method = StepMethod::implicit_euler;
    else
        raise(ErrorKind::InvalidConfig,
              config.origin() + ": method must be rk4 or implicit-euler, got '" + method + "'");
    scenario.seed = config.get_u64("seed", 0);

    // Epidemiological coefficients: bare names set the base value, name@day
    // sets a piecewise-constant override from that day onward.
    SeirdParams base;
    for (const char* name :
         {"phi_i", "phi_e", "alpha_inc", "gamma_e", "gamma_i", "delta", "nu_s", "nu_e", "nu_i",
          "nu_r", "allee"}) {
        double* slot = base.field(name);
        *slot = config.get_double(name, 0.0);
    }
    base.validate();
    scenario.schedule = ParamSchedule(base);
    for (const auto& entry : config.entries()) {
        const auto at = entry.key.find('@');
        if (at == std::string::npos) continue;
        const std::string field = entry.key.substr(0, at);
        const std::string day_text = entry.key.substr(at + 1);
        SeirdParams probe;
        if (!probe.field(field))
            config.fail(entry, "unknown coefficient '" + field + "' in schedule override");
        const double day = detail::parse_double(day_text, entry.line_no, config.origin().c_str());
        entry.consumed = true;
        scenario.schedule.add_override(field, day, config.parse_double_value(entry));
    }

    // Initial conditions: ic.<compartment>.uniform and ic.<compartment>.bump.<index>.
    for (int c = 0; c < kCompartments; ++c) {
        const std::string prefix = std::string("ic.") + kCompartmentNames[c];
        scenario.ic.uniform[static_cast<std::size_t>(c)] =
            config.get_double(prefix + ".uniform", 0.0);
        for (int bump_index = 0;; ++bump_index) {
            const std::string key = prefix + ".bump." + std::to_string(bump_index);
            if (!config.has(key)) break;
            const std::vector<double> values = config.get_double_list(key);
            if (values.size() != 4)
                raise(ErrorKind::InvalidConfig,
                      config.origin() + ": " + key + " needs 'x, y, sigma, amp'");
            scenario.ic.bumps[static_cast<std::size_t>(c)].push_back(
                GaussianBump{values[0], values[1], values[2], values[3]});
        }
    }
    scenario.ic.validate();

    scenario.model_K = static_cast<std::size_t>(config.get_int("model.K", 4));
    if (scenario.model_K < 1)
        raise(ErrorKind::InvalidConfig, config.origin() + ": model.K must be >= 1");
    scenario.pretrain_epochs = static_cast<int>(config.get_int("train.pretrain_epochs", 2000));
    scenario.finetune_epochs = static_cast<int>(config.get_int("train.finetune_epochs", 500));
    if (scenario.pretrain_epochs < 0 || scenario.finetune_epochs < 0)
        raise(ErrorKind::InvalidConfig, config.origin() + ": epoch counts must be >= 0");

    scenario.train.learning_rate = config.get_double("train.learning_rate", 1e-3);
    scenario.train.omega_u = config.get_double("train.omega_u", 1.0);
    scenario.train.omega_s = config.get_double("train.omega_s", 1.0);
    scenario.train.train_days = static_cast<int>(config.get_int("train.train_days", 106));
    scenario.train.total_days = static_cast<int>(config.get_int("train.total_days", 120));
    scenario.train.seed = scenario.seed;
    scenario.train.validate();

    config.ensure_all_consumed();
    return scenario;
}

inline Scenario load_scenario(const std::string& path) {
    const KeyValueConfig config = KeyValueConfig::parse_file(path);
    return scenario_from_config(config);
}

} // namespace epiforge

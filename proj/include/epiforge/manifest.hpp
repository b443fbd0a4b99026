#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "epiforge/errors.hpp"
#include "epiforge/version.hpp"

namespace epiforge {

inline std::string iso8601_utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

/// Run record written next to every command's outputs, on success and on
/// failure alike, so a result directory is always self-describing.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::string status = "running"; // "ok" or "error" when finished
    std::string error;              // populated when status == "error"
    std::map<std::string, std::string> config; // flattened settings snapshot
    std::vector<std::string> artifacts;        // paths produced by the run

    explicit RunManifest(std::string cmd = "") : command(std::move(cmd)) {
        started_at = iso8601_utc_now();
    }

    void add_artifact(const std::string& path) { artifacts.push_back(path); }

    void finish_ok() {
        status = "ok";
        finished_at = iso8601_utc_now();
    }

    void finish_error(const std::string& message) {
        status = "error";
        error = message;
        finished_at = iso8601_utc_now();
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = kVersion;
        j["command"] = command;
        j["seed"] = seed;
        j["started_at"] = started_at;
        j["finished_at"] = finished_at;
        j["status"] = status;
        if (!error.empty()) j["error"] = error;
        j["config"] = config;
        j["artifacts"] = artifacts;
        return j;
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) raise(ErrorKind::IoError, "cannot open " + path + " for writing");
        out << to_json().dump(2) << '\n';
        if (!out) raise(ErrorKind::IoError, "failed writing " + path);
    }
};

} // namespace epiforge

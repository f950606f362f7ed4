#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "policylens/csv.hpp"
#include "policylens/error.hpp"
#include "policylens/sha256.hpp"
#include "policylens/version.hpp"

namespace policylens::manifest {

struct RunManifest {
    std::string tool_version = kVersion;
    std::string subcommand;
    std::string timestamp;                        // UTC, ISO-8601
    std::map<std::string, std::string> inputs;    // path -> sha256
    std::string config_digest;                    // empty when no config file
    std::map<std::string, std::string> outputs;   // filename -> sha256
};

inline std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

inline std::string to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["tool"] = "policylens";
    j["version"] = m.tool_version;
    j["subcommand"] = m.subcommand;
    j["timestamp"] = m.timestamp;
    j["inputs"] = m.inputs;
    if (!m.config_digest.empty()) j["config_digest"] = m.config_digest;
    j["outputs"] = m.outputs;
    return j.dump(2) + "\n";
}

inline RunManifest from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("manifest: invalid JSON: ") + e.what());
    }
    RunManifest m;
    m.tool_version = j.value("version", "");
    m.subcommand = j.value("subcommand", "");
    m.timestamp = j.value("timestamp", "");
    m.config_digest = j.value("config_digest", "");
    if (j.contains("inputs"))
        for (auto& [k, v] : j["inputs"].items()) m.inputs[k] = v.get<std::string>();
    if (j.contains("outputs"))
        for (auto& [k, v] : j["outputs"].items()) m.outputs[k] = v.get<std::string>();
    return m;
}

inline RunManifest load(const std::filesystem::path& path) { return from_json(read_text_file(path)); }

}

#pragma once

/// @file records.hpp
/// Persistence for run artifacts: result records (samples per task),
/// score records, and the manifest written alongside every output file.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxcast/digest.hpp"
#include "ctxcast/errors.hpp"

namespace ctxcast {

inline constexpr const char* kVersion = "0.1.0";

struct ResultRecord {
    std::string task_id;
    std::string strategy;
    std::string model;
    std::vector<std::vector<double>> samples;
    std::optional<std::vector<std::string>> traces;
    long attempts_used = 0;
};

inline nlohmann::json result_to_json(const ResultRecord& r) {
    nlohmann::json j;
    j["task_id"] = r.task_id;
    j["strategy"] = r.strategy;
    j["model"] = r.model;
    j["samples"] = r.samples;
    j["traces"] = r.traces ? nlohmann::json(*r.traces) : nlohmann::json(nullptr);
    j["attempts_used"] = r.attempts_used;
    return j;
}

inline void write_results(const std::vector<ResultRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    for (const auto& r : records) out << result_to_json(r).dump() << "\n";
}

inline std::vector<ResultRecord> load_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    std::vector<ResultRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ResultRecord r;
            r.task_id = j.at("task_id").get<std::string>();
            r.strategy = j.at("strategy").get<std::string>();
            r.model = j.value("model", "");
            r.samples = j.at("samples").get<std::vector<std::vector<double>>>();
            if (j.contains("traces") && !j.at("traces").is_null())
                r.traces = j.at("traces").get<std::vector<std::string>>();
            r.attempts_used = j.value("attempts_used", 0L);
            if (r.samples.empty()) throw Error("record has no samples");
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedLine(lineno, e.what());
        }
    }
    return out;
}

struct ScoreRecord {
    std::string task_id;
    double total = 0.0;
    double roi_term = 0.0;
    double non_roi_term = 0.0;
    double constraint_term = 0.0;
    double alpha = 0.0;
    // reporting context
    std::string model;
    std::string strategy;
    bool partial_roi = false;
    bool has_constraint = false;
};

inline nlohmann::json score_to_json(const ScoreRecord& r) {
    nlohmann::json j;
    j["task_id"] = r.task_id;
    j["total"] = r.total;
    j["roi_term"] = r.roi_term;
    j["non_roi_term"] = r.non_roi_term;
    j["constraint_term"] = r.constraint_term;
    j["alpha"] = r.alpha;
    j["model"] = r.model;
    j["strategy"] = r.strategy;
    j["partial_roi"] = r.partial_roi;
    j["has_constraint"] = r.has_constraint;
    return j;
}

inline void write_scores(const std::vector<ScoreRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    for (const auto& r : records) out << score_to_json(r).dump() << "\n";
}

inline std::vector<ScoreRecord> load_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    std::vector<ScoreRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ScoreRecord r;
            r.task_id = j.at("task_id").get<std::string>();
            r.total = j.at("total").get<double>();
            r.roi_term = j.at("roi_term").get<double>();
            r.non_roi_term = j.at("non_roi_term").get<double>();
            r.constraint_term = j.at("constraint_term").get<double>();
            r.alpha = j.at("alpha").get<double>();
            r.model = j.value("model", "");
            r.strategy = j.value("strategy", "");
            r.partial_roi = j.value("partial_roi", false);
            r.has_constraint = j.value("has_constraint", false);
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedLine(lineno, e.what());
        }
    }
    return out;
}

// ====== manifest ======

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string file_digest(const std::string& path) { return digest_hex(read_file(path)); }

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%d %H:%M:%S", &tm);
    return buf;
}

struct RunManifest {
    std::string command;
    std::string strategy;
    nlohmann::json endpoint;  // config snapshot
    std::string task_file_digest;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::string version = kVersion;
};

inline void write_manifest(const RunManifest& m, const std::string& path) {
    nlohmann::json j;
    j["command"] = m.command;
    if (!m.strategy.empty()) j["strategy"] = m.strategy;
    j["endpoint"] = m.endpoint;
    j["task_file_digest"] = m.task_file_digest;
    j["seed"] = m.seed;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["version"] = m.version;
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace ctxcast

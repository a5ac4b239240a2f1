#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ctxcast/task.hpp"

namespace testutil {

inline ctxcast::Timestamp ts(const std::string& s) {
    return ctxcast::Timestamp::parse_or_throw(s);
}

// Tiny hand-written task: 8 hourly history points, horizon 4, RoI at step 1.
inline ctxcast::TaskInstance small_task(std::string id = "t1") {
    ctxcast::TaskInstance t;
    t.id = std::move(id);
    t.context.background = "This series is the hourly electricity consumption of a building.";
    t.context.scenario = "Consumption quadruples in the second forecast hour.";
    const auto start = ts("2024-01-01 00:00:00");
    const double hist[8] = {10.0, 12.0, 11.0, 13.0, 10.0, 12.0, 11.0, 13.0};
    for (int i = 0; i < 8; ++i) t.history.emplace_back(start.plus_hours(i), hist[i]);
    for (int i = 0; i < 4; ++i) t.pred_timestamps.push_back(start.plus_hours(8 + i));
    t.future = {10.0, 48.0, 11.0, 13.0};
    t.roi = std::vector<int>{1};
    return t;
}

// Same series without roi/context extras, for tests that want a plain task.
inline ctxcast::TaskInstance plain_task(std::string id = "p1") {
    auto t = small_task(std::move(id));
    t.roi.reset();
    t.future = {10.0, 12.0, 11.0, 13.0};
    t.context.scenario.reset();
    return t;
}

inline std::filesystem::path tmp_dir() {
    static std::atomic<int> counter{0};
    auto p = std::filesystem::temp_directory_path() /
             ("ctxcast-test-" + std::to_string(::getpid()) + "-" +
              std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

}  // namespace testutil

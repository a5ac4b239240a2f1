#pragma once

/// @file reasoning.hpp
/// Reasoning-quality evaluation for the reasoning strategy: gold trace
/// generation, LLM-judged alignment, improvement-with-context flags, and
/// the per-model joint distribution with a minimum trace-rate filter.

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctxcast/client.hpp"
#include "ctxcast/errors.hpp"
#include "ctxcast/parse.hpp"
#include "ctxcast/prompts.hpp"
#include "ctxcast/task.hpp"

namespace ctxcast {

struct ReasoningRecord {
    std::string model;
    std::string task_id;
    std::optional<std::string> trace;         // first-sample reasoning trace
    std::optional<bool> judge_correct;        // present iff trace present
    double rcrps_roi_with_context = 0.0;
    double rcrps_roi_without_context = 0.0;
    bool improved = false;
};

/// Percentages over traced tasks. Cell order: correct & improved,
/// correct & not improved, wrong & improved, wrong & not improved.
struct JointTable {
    double pct_correct = 0.0;
    double pct_improved = 0.0;
    std::array<double, 4> cells{};
};

struct JointOutcome {
    bool excluded = false;  // trace rate below the inclusion threshold
    double trace_rate = 0.0;
    int traced = 0;
    int total = 0;
    std::optional<JointTable> table;
};

/// Reference reasoning trace for a task, produced by the judge endpoint
/// from the task's context alone.
inline std::string generate_gold(const TaskInstance& task, const ChatClient& judge) {
    if (task.context.empty())
        throw Error("generate_gold: task " + task.id + " has no context");
    const auto prompt = render(PromptKind::GOLD_TRACE, task);
    auto validator = [](const std::string& text) { return extract_tagged(text, "reason").body; };
    return judge.sample_validated(prompt.text, 1, validator).front();
}

/// Whether the model's trace matches the gold trace's key points,
/// according to the judge endpoint.
inline bool judge_alignment(const std::string& model_trace, const std::string& gold,
                            const ChatClient& judge) {
    if (model_trace.empty()) throw Error("judge_alignment: empty model trace");
    if (gold.empty()) throw Error("judge_alignment: empty gold trace");
    PromptExtras extras;
    extras.model_trace = model_trace;
    extras.gold_trace = gold;
    static const TaskInstance no_task{};  // judge prompt carries no task data
    const auto prompt = render(PromptKind::JUDGE, no_task, extras);
    auto validator = [](const std::string& text) { return parse_judge_verdict(text); };
    return judge.sample_validated(prompt.text, 1, validator).front();
}

/// True when providing context cut the RoI score by at least `threshold`
/// (relative). A zero no-context score never counts as improved.
inline bool improvement_flag(double roi_with, double roi_without, double threshold = 0.5) {
    if (roi_with < 0.0 || roi_without < 0.0)
        throw Error("improvement_flag: scores must be nonnegative");
    if (roi_without <= 0.0) return false;
    return (roi_without - roi_with) / roi_without >= threshold;
}

/// Per-model joint distribution of judged correctness and improvement.
/// Models producing traces on fewer than min_trace_rate of their tasks are
/// excluded rather than tabulated.
inline std::map<std::string, JointOutcome> joint_distribution(
    const std::vector<ReasoningRecord>& records, double min_trace_rate = 0.75) {
    if (records.empty()) throw EmptyInput();

    struct Tally {
        int total = 0, traced = 0;
        std::array<int, 4> cells{};
        int correct = 0, improved = 0;
    };
    std::map<std::string, Tally> tallies;
    for (const auto& r : records) {
        auto& t = tallies[r.model];
        ++t.total;
        if (!r.trace) continue;
        if (!r.judge_correct)
            throw Error("record for task " + r.task_id + " has a trace but no judge verdict");
        ++t.traced;
        const bool c = *r.judge_correct;
        const bool i = r.improved;
        ++t.cells[static_cast<std::size_t>((c ? 0 : 2) + (i ? 0 : 1))];
        if (c) ++t.correct;
        if (i) ++t.improved;
    }

    std::map<std::string, JointOutcome> out;
    for (const auto& [model, t] : tallies) {
        JointOutcome o;
        o.total = t.total;
        o.traced = t.traced;
        o.trace_rate = static_cast<double>(t.traced) / static_cast<double>(t.total);
        if (o.trace_rate < min_trace_rate) {
            o.excluded = true;
        } else {
            JointTable table;
            const auto denom = static_cast<double>(t.traced);
            for (std::size_t c = 0; c < 4; ++c)
                table.cells[c] = 100.0 * static_cast<double>(t.cells[c]) / denom;
            table.pct_correct = 100.0 * static_cast<double>(t.correct) / denom;
            table.pct_improved = 100.0 * static_cast<double>(t.improved) / denom;
            o.table = table;
        }
        out.emplace(model, std::move(o));
    }
    return out;
}

// ====== gold cache ======

struct GoldEntry {
    std::string task_id;
    std::string judge_model;
    std::string gold;
    bool verified = false;  // set by hand after editing the cached trace
};

using GoldKey = std::pair<std::string, std::string>;  // (task_id, judge_model)

inline std::map<GoldKey, GoldEntry> load_gold_cache(const std::string& path) {
    std::map<GoldKey, GoldEntry> out;
    std::ifstream in(path);
    if (!in) return out;  // absent cache is an empty cache
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            GoldEntry e;
            e.task_id = j.at("task_id").get<std::string>();
            e.judge_model = j.at("judge_model").get<std::string>();
            e.gold = j.at("gold").get<std::string>();
            e.verified = j.value("verified", false);
            out[{e.task_id, e.judge_model}] = std::move(e);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedLine(lineno, e.what());
        }
    }
    return out;
}

inline void write_gold_cache(const std::map<GoldKey, GoldEntry>& cache, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    for (const auto& [key, e] : cache) {
        nlohmann::json j;
        j["task_id"] = e.task_id;
        j["judge_model"] = e.judge_model;
        j["gold"] = e.gold;
        j["verified"] = e.verified;
        out << j.dump() << "\n";
    }
}

inline nlohmann::json reasoning_record_to_json(const ReasoningRecord& r) {
    nlohmann::json j;
    j["model"] = r.model;
    j["task_id"] = r.task_id;
    j["trace"] = r.trace ? nlohmann::json(*r.trace) : nlohmann::json(nullptr);
    j["judge_correct"] = r.judge_correct ? nlohmann::json(*r.judge_correct) : nlohmann::json(nullptr);
    j["rcrps_roi_with_context"] = r.rcrps_roi_with_context;
    j["rcrps_roi_without_context"] = r.rcrps_roi_without_context;
    j["improved"] = r.improved;
    return j;
}

inline void write_reasoning_records(const std::vector<ReasoningRecord>& records,
                                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    for (const auto& r : records) out << reasoning_record_to_json(r).dump() << "\n";
}

inline std::vector<ReasoningRecord> load_reasoning_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    std::vector<ReasoningRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ReasoningRecord r;
            r.model = j.at("model").get<std::string>();
            r.task_id = j.at("task_id").get<std::string>();
            if (j.contains("trace") && !j.at("trace").is_null())
                r.trace = j.at("trace").get<std::string>();
            if (j.contains("judge_correct") && !j.at("judge_correct").is_null())
                r.judge_correct = j.at("judge_correct").get<bool>();
            r.rcrps_roi_with_context = j.value("rcrps_roi_with_context", 0.0);
            r.rcrps_roi_without_context = j.value("rcrps_roi_without_context", 0.0);
            r.improved = j.value("improved", false);
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedLine(lineno, e.what());
        }
    }
    return out;
}

/// CSV of the joint distribution, one row per model: marginals then the
/// four joint cells; excluded models carry their trace rate instead.
inline void write_joint_csv(std::ostream& out,
                            const std::map<std::string, JointOutcome>& outcomes) {
    out << "model,tasks,traced,trace_rate,correct,improvement,"
           "correct_and_improvement,correct_no_improvement,"
           "wrong_and_improvement,wrong_no_improvement,excluded\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.1f", v);
        return std::string(buf);
    };
    for (const auto& [model, o] : outcomes) {
        out << model << ',' << o.total << ',' << o.traced << ',';
        std::snprintf(buf, sizeof(buf), "%.3f", o.trace_rate);
        out << buf << ',';
        if (o.table) {
            const auto& t = *o.table;
            out << fmt(t.pct_correct) << ',' << fmt(t.pct_improved) << ',' << fmt(t.cells[0])
                << ',' << fmt(t.cells[1]) << ',' << fmt(t.cells[2]) << ',' << fmt(t.cells[3])
                << ",no\n";
        } else {
            out << ",,,,,,yes\n";
        }
    }
}

}  // namespace ctxcast

#pragma once

/// @file task.hpp
/// Forecasting-task data model: context text, constraint bounds, history,
/// prediction window, ground truth, and region of interest. Includes the
/// JSONL loader/writer, a non-throwing validator, and a deterministic
/// synthetic-task generator used for offline testing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctxcast/errors.hpp"
#include "ctxcast/timestamp.hpp"

namespace ctxcast {

/// Natural-language side information attached to a task. An all-absent
/// Context is the "without context" condition.
struct Context {
    std::optional<std::string> background;
    std::optional<std::string> constraints_text;
    std::optional<std::string> scenario;

    bool empty() const { return !background && !constraints_text && !scenario; }
};

/// Machine-readable bounds backing a constraints_text sentence.
struct ConstraintSpec {
    std::optional<double> lower;
    std::optional<double> upper;
};

/// One forecasting task: numeric history plus a prediction window with
/// ground truth, an optional region of interest (indices into the window),
/// optional hard bounds, and an optional score-normalization override.
struct TaskInstance {
    std::string id;
    Context context;
    std::vector<std::pair<Timestamp, double>> history;
    std::vector<Timestamp> pred_timestamps;
    std::vector<double> future;
    std::optional<std::vector<int>> roi;
    std::optional<ConstraintSpec> constraint;
    std::optional<double> alpha_override;

    std::size_t horizon() const { return pred_timestamps.size(); }

    /// True when roi is present and leaves at least one step outside it.
    bool partial_roi() const {
        return roi.has_value() && !roi->empty() && roi->size() < pred_timestamps.size();
    }
};

struct TaskSet {
    std::vector<TaskInstance> tasks;

    const TaskInstance* find(const std::string& id) const {
        for (const auto& t : tasks)
            if (t.id == id) return &t;
        return nullptr;
    }
};

// ====== validation ======

/// Returns human-readable invariant violations; empty means the task is valid.
inline std::vector<std::string> validate_task(const TaskInstance& t) {
    std::vector<std::string> out;
    if (t.id.empty()) out.push_back("id empty");
    for (std::size_t i = 1; i < t.history.size(); ++i)
        if (!(t.history[i - 1].first < t.history[i].first)) {
            out.push_back("history ordering: timestamps not strictly increasing");
            break;
        }
    for (std::size_t i = 1; i < t.pred_timestamps.size(); ++i)
        if (!(t.pred_timestamps[i - 1] < t.pred_timestamps[i])) {
            out.push_back("prediction ordering: timestamps not strictly increasing");
            break;
        }
    if (!t.history.empty() && !t.pred_timestamps.empty() &&
        !(t.history.back().first < t.pred_timestamps.front()))
        out.push_back("prediction window must start after the last history timestamp");
    if (t.pred_timestamps.empty()) out.push_back("prediction window empty");
    if (t.future.size() != t.pred_timestamps.size())
        out.push_back("future length differs from prediction window length");
    for (const auto& [ts, v] : t.history)
        if (!std::isfinite(v)) {
            out.push_back("history contains non-finite value");
            break;
        }
    for (double v : t.future)
        if (!std::isfinite(v)) {
            out.push_back("future contains non-finite value");
            break;
        }
    if (t.roi) {
        if (t.roi->empty()) out.push_back("roi present but empty");
        std::set<int> seen;
        for (int i : *t.roi) {
            if (i < 0 || static_cast<std::size_t>(i) >= t.pred_timestamps.size()) {
                out.push_back("roi index out of range");
                break;
            }
            if (!seen.insert(i).second) {
                out.push_back("roi index repeated");
                break;
            }
        }
    }
    if (t.constraint && t.constraint->lower && t.constraint->upper &&
        *t.constraint->lower > *t.constraint->upper)
        out.push_back("constraint bounds: lower exceeds upper");
    if (t.alpha_override && !(*t.alpha_override > 0))
        out.push_back("alpha override must be positive");
    return out;
}

// ====== JSONL serialization ======

namespace detail {

inline std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

inline std::optional<double> opt_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace detail

inline nlohmann::json task_to_json(const TaskInstance& t) {
    nlohmann::json j;
    j["id"] = t.id;
    j["background"] = t.context.background ? nlohmann::json(*t.context.background) : nullptr;
    j["constraints"] =
        t.context.constraints_text ? nlohmann::json(*t.context.constraints_text) : nullptr;
    j["scenario"] = t.context.scenario ? nlohmann::json(*t.context.scenario) : nullptr;
    auto hist = nlohmann::json::array();
    for (const auto& [ts, v] : t.history) hist.push_back({ts.str(), v});
    j["history"] = std::move(hist);
    auto pts = nlohmann::json::array();
    for (const auto& ts : t.pred_timestamps) pts.push_back(ts.str());
    j["pred_timestamps"] = std::move(pts);
    j["future"] = t.future;
    j["roi"] = t.roi ? nlohmann::json(*t.roi) : nullptr;
    if (t.constraint) {
        nlohmann::json b;
        b["min"] = t.constraint->lower ? nlohmann::json(*t.constraint->lower) : nullptr;
        b["max"] = t.constraint->upper ? nlohmann::json(*t.constraint->upper) : nullptr;
        j["bounds"] = std::move(b);
    } else {
        j["bounds"] = nullptr;
    }
    j["alpha"] = t.alpha_override ? nlohmann::json(*t.alpha_override) : nullptr;
    return j;
}

inline TaskInstance task_from_json(const nlohmann::json& j) {
    TaskInstance t;
    t.id = j.at("id").get<std::string>();
    t.context.background = detail::opt_string(j, "background");
    t.context.constraints_text = detail::opt_string(j, "constraints");
    t.context.scenario = detail::opt_string(j, "scenario");
    for (const auto& pair : j.at("history")) {
        if (!pair.is_array() || pair.size() != 2) throw Error("history entry is not a pair");
        t.history.emplace_back(Timestamp::parse_or_throw(pair[0].get<std::string>()),
                               pair[1].get<double>());
    }
    for (const auto& s : j.at("pred_timestamps"))
        t.pred_timestamps.push_back(Timestamp::parse_or_throw(s.get<std::string>()));
    t.future = j.at("future").get<std::vector<double>>();
    if (j.contains("roi") && !j.at("roi").is_null())
        t.roi = j.at("roi").get<std::vector<int>>();
    if (j.contains("bounds") && !j.at("bounds").is_null()) {
        ConstraintSpec c;
        c.lower = detail::opt_number(j.at("bounds"), "min");
        c.upper = detail::opt_number(j.at("bounds"), "max");
        if (c.lower || c.upper) t.constraint = c;
    }
    t.alpha_override = detail::opt_number(j, "alpha");
    return t;
}

/// Loads a task JSONL file, validating every instance and id uniqueness.
inline TaskSet load_tasks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open task file: " + path);
    TaskSet set;
    std::set<std::string> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        TaskInstance t;
        try {
            t = task_from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedLine(lineno, e.what());
        } catch (const Error& e) {
            throw MalformedLine(lineno, e.what());
        }
        auto violations = validate_task(t);
        if (!violations.empty()) throw InvariantViolation(t.id, violations.front());
        if (!ids.insert(t.id).second) throw DuplicateId(t.id);
        set.tasks.push_back(std::move(t));
    }
    return set;
}

inline void write_tasks(const TaskSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write task file: " + path);
    for (const auto& t : set.tasks) out << task_to_json(t).dump() << "\n";
}

// ====== synthetic tasks ======

enum class Archetype { SpikeMultiplier, ZeroOutage, Bounded, AdditiveTrendRemoval };

inline const char* archetype_name(Archetype a) {
    switch (a) {
        case Archetype::SpikeMultiplier: return "spike-multiplier";
        case Archetype::ZeroOutage: return "zero-outage";
        case Archetype::Bounded: return "bounded";
        case Archetype::AdditiveTrendRemoval: return "additive-trend-removal";
    }
    return "?";
}

inline std::optional<Archetype> archetype_from_name(const std::string& s) {
    if (s == "spike-multiplier") return Archetype::SpikeMultiplier;
    if (s == "zero-outage") return Archetype::ZeroOutage;
    if (s == "bounded") return Archetype::Bounded;
    if (s == "additive-trend-removal") return Archetype::AdditiveTrendRemoval;
    return std::nullopt;
}

namespace detail {

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

/// Uniform double in [lo, hi) from explicit 53-bit draws, so the stream is
/// identical across standard libraries.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    // inclusive bounds, rejection-free enough for test-scale ranges
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(rng() % span);
}

}  // namespace detail

/// Number of hours of history the generator emits before the window.
inline constexpr int kSynthHistoryHours = 96;
inline constexpr double kSpikeMultiplier = 4.0;
inline constexpr double kTrendPerHour = 0.05;

/// Deterministically generates one task of the given archetype. All four
/// archetypes share the same base sinusoid-plus-noise series for a given
/// (seed, horizon); the archetype then reshapes the window (or the history)
/// and writes a context that describes exactly that reshaping. Values are
/// rounded to 2 decimals and kept below 1000 so prompt serialization at the
/// default precision round-trips exactly.
inline TaskInstance synth_task(Archetype archetype, std::int64_t seed, int horizon) {
    if (horizon < 2) throw Error("synth_task horizon must be >= 2");
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 0x9E3779B97F4A7C15ull + 0x2545F491ull);

    const double level = detail::uniform(rng, 50.0, 100.0);
    const double amp = detail::uniform(rng, 10.0, 30.0);
    const double phase = detail::uniform(rng, 0.0, 6.283185307179586);

    const Timestamp start = Timestamp::parse_or_throw("2024-01-15 00:00:00")
                                .plus_hours(detail::uniform_int(rng, 0, 23));

    auto base_at = [&](int hour_index, double noise) {
        const double x = 6.283185307179586 * (hour_index % 24) / 24.0 + phase;
        return detail::round2(level + amp * std::sin(x) + noise);
    };

    TaskInstance t;
    t.id = std::string(archetype_name(archetype)) + "-" + std::to_string(seed) + "-" +
           std::to_string(horizon);

    std::vector<double> base_future;
    for (int i = 0; i < kSynthHistoryHours; ++i)
        t.history.emplace_back(start.plus_hours(i), base_at(i, detail::uniform(rng, -2.0, 2.0)));
    for (int i = 0; i < horizon; ++i) {
        t.pred_timestamps.push_back(start.plus_hours(kSynthHistoryHours + i));
        base_future.push_back(
            base_at(kSynthHistoryHours + i, detail::uniform(rng, -2.0, 2.0)));
    }
    t.future = base_future;

    // archetype window: a contiguous stretch inside the prediction horizon
    const int wlen = std::max(1, horizon / 4);
    const int wstart =
        static_cast<int>(detail::uniform_int(rng, 0, static_cast<std::int64_t>(horizon - wlen)));

    const std::string series_kind = "electricity consumption of a commercial building, in kWh";
    t.context.background = "This series is the hourly " + series_kind + ".";

    switch (archetype) {
        case Archetype::SpikeMultiplier: {
            std::vector<int> roi;
            for (int i = wstart; i < wstart + wlen; ++i) {
                t.future[i] = kSpikeMultiplier * base_future[i];
                roi.push_back(i);
            }
            t.roi = roi;
            t.context.scenario =
                "Suppose that there is a heat wave starting from " +
                t.pred_timestamps[wstart].str() + " lasting for " + std::to_string(wlen) +
                " hour(s), resulting in 4 times the usual electricity being consumed during "
                "that period.";
            break;
        }
        case Archetype::ZeroOutage: {
            std::vector<int> roi;
            for (int i = wstart; i < wstart + wlen; ++i) {
                t.future[i] = 0.0;
                roi.push_back(i);
            }
            t.roi = roi;
            t.context.scenario =
                "Consider that the meter will be offline for maintenance between " +
                t.pred_timestamps[wstart].str() + " and " +
                t.pred_timestamps[wstart + wlen - 1].str() +
                ", which results in zero readings during that period.";
            break;
        }
        case Archetype::Bounded: {
            // clamp the window at a bound tight enough to bind at the peaks
            const double upper = detail::round2(level + 0.5 * amp);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.2f", upper);
            for (int i = 0; i < horizon; ++i) t.future[i] = std::min(t.future[i], upper);
            t.constraint = ConstraintSpec{std::nullopt, upper};
            t.context.constraints_text =
                "Suppose that in the forecast, the values are bounded above by " +
                std::string(buf) + ".";
            break;
        }
        case Archetype::AdditiveTrendRemoval: {
            // the history carries a linear sensor error; the future does not
            for (std::size_t i = 0; i < t.history.size(); ++i)
                t.history[i].second =
                    detail::round2(t.history[i].second + kTrendPerHour * static_cast<double>(i + 1));
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.2f", kTrendPerHour);
            t.context.scenario =
                "A sensor error introduced an additive trend in the series that increases by " +
                std::string(buf) +
                " at every hour. The sensor was repaired just before the forecast window, so "
                "this additive trend will disappear from the series going forward.";
            break;
        }
    }
    return t;
}

}  // namespace ctxcast

#pragma once

/// @file routing.hpp
/// Difficulty-based model routing simulator: per-task hardness scores from
/// the router prompt, performance-versus-k curves for a dispatch order, and
/// the area captured between random and ideal baselines.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ctxcast/client.hpp"
#include "ctxcast/errors.hpp"
#include "ctxcast/prompts.hpp"
#include "ctxcast/task.hpp"

namespace ctxcast {

struct RoutingInput {
    std::vector<std::string> task_ids;
    std::vector<double> main_scores;   // score per task under the main model
    std::vector<double> large_scores;  // score per task under the large model

    std::size_t size() const { return task_ids.size(); }

    void validate() const {
        if (task_ids.empty()) throw EmptyInput();
        if (main_scores.size() != task_ids.size() || large_scores.size() != task_ids.size())
            throw Error("routing input lists have mismatched lengths");
        for (double v : main_scores)
            if (!std::isfinite(v)) throw NonFiniteInput("non-finite main score");
        for (double v : large_scores)
            if (!std::isfinite(v)) throw NonFiniteInput("non-finite large score");
    }
};

/// Average score when the first k tasks of some order go to the large
/// model, for k = 0..N.
struct RoutingCurve {
    std::vector<double> values;
};

struct DifficultyScore {
    std::string task_id;
    double p_hard = 0.0;
};

/// P(hard) for every task: the router prompt wraps the task's direct
/// prompt and the hard/easy choice probability is read off the endpoint.
inline std::vector<DifficultyScore> score_difficulty(const TaskSet& tasks,
                                                     const ChatClient& client) {
    if (tasks.tasks.empty()) throw EmptyInput();
    const int n = static_cast<int>(tasks.tasks.size());
    std::vector<DifficultyScore> out(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            const auto& task = tasks.tasks[static_cast<std::size_t>(i)];
            try {
                PromptExtras extras;
                extras.direct_prompt_text = render(PromptKind::DP, task).text;
                const auto prompt = render(PromptKind::ROUTER, task, extras);
                auto probs = client.choice_probability(prompt.text, {"easy", "hard"});
                out[static_cast<std::size_t>(i)] = {task.id, probs.at("hard")};
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error)
                    first_error = std::make_exception_ptr(
                        Error("task " + task.id + ": " + e.what()));
                failed.store(true);
                return;
            }
        }
    };

    const int parallel = client.config().parallel < 1 ? 1 : client.config().parallel;
    const int workers = std::min(parallel, n);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

/// values[k] = mean of (large score if task is in the first k of order,
/// else main score).
inline RoutingCurve curve_for_order(const RoutingInput& input, const std::vector<int>& order) {
    input.validate();
    const std::size_t N = input.size();
    if (order.size() != N) throw InvalidPermutation("order length != N");
    std::vector<bool> seen(N, false);
    for (int idx : order) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= N || seen[static_cast<std::size_t>(idx)])
            throw InvalidPermutation("order is not a permutation of 0..N-1");
        seen[static_cast<std::size_t>(idx)] = true;
    }

    RoutingCurve curve;
    curve.values.resize(N + 1);
    double sum = std::accumulate(input.main_scores.begin(), input.main_scores.end(), 0.0);
    curve.values[0] = sum / static_cast<double>(N);
    for (std::size_t k = 1; k <= N; ++k) {
        const auto i = static_cast<std::size_t>(order[k - 1]);
        sum += input.large_scores[i] - input.main_scores[i];
        curve.values[k] = sum / static_cast<double>(N);
    }
    return curve;
}

/// Dispatch order that most improves the average at every k: descending
/// score delta (main minus large), ties by task id.
inline std::vector<int> ideal_order(const RoutingInput& input) {
    input.validate();
    std::vector<int> order(input.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = input.main_scores[static_cast<std::size_t>(a)] -
                          input.large_scores[static_cast<std::size_t>(a)];
        const double db = input.main_scores[static_cast<std::size_t>(b)] -
                          input.large_scores[static_cast<std::size_t>(b)];
        if (da != db) return da > db;
        return input.task_ids[static_cast<std::size_t>(a)] <
               input.task_ids[static_cast<std::size_t>(b)];
    });
    return order;
}

/// Dispatch order by router judgment: descending P(hard), ties by task id.
inline std::vector<int> router_order(const std::vector<DifficultyScore>& scores) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& sa = scores[static_cast<std::size_t>(a)];
        const auto& sb = scores[static_cast<std::size_t>(b)];
        if (sa.p_hard != sb.p_hard) return sa.p_hard > sb.p_hard;
        return sa.task_id < sb.task_id;
    });
    return order;
}

struct RandomCurves {
    RoutingCurve mean_curve;
    std::vector<double> min_band;
    std::vector<double> max_band;
};

/// Mean and min/max envelope over `trials` uniformly random dispatch
/// orders. The shuffle is hand-rolled Fisher-Yates on a seeded mt19937_64
/// so results do not depend on the standard library's shuffle.
inline RandomCurves random_curves(const RoutingInput& input, int trials = 100,
                                  std::uint64_t seed = 0) {
    input.validate();
    if (trials < 1) throw Error("random_curves: trials must be >= 1");
    const std::size_t N = input.size();

    std::mt19937_64 rng(seed);
    RandomCurves out;
    out.mean_curve.values.assign(N + 1, 0.0);
    out.min_band.assign(N + 1, std::numeric_limits<double>::infinity());
    out.max_band.assign(N + 1, -std::numeric_limits<double>::infinity());

    std::vector<int> perm(N);
    for (int t = 0; t < trials; ++t) {
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = N - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(
                detail::uniform_int(rng, 0, static_cast<std::int64_t>(i)));
            std::swap(perm[i], perm[j]);
        }
        const auto curve = curve_for_order(input, perm);
        for (std::size_t k = 0; k <= N; ++k) {
            out.mean_curve.values[k] += curve.values[k];
            out.min_band[k] = std::min(out.min_band[k], curve.values[k]);
            out.max_band[k] = std::max(out.max_band[k], curve.values[k]);
        }
    }
    for (auto& v : out.mean_curve.values) v /= static_cast<double>(trials);
    return out;
}

/// Trapezoidal area under the curve over k in [0, N].
inline double curve_area(const RoutingCurve& curve) {
    if (curve.values.size() < 2) throw Error("curve needs at least 2 points");
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < curve.values.size(); ++k)
        area += 0.5 * (curve.values[k] + curve.values[k + 1]);
    return area;
}

/// Fraction of the random-to-ideal area gap that the router closes. Can be
/// negative when the router underperforms random assignment.
inline double area_captured(const RoutingCurve& router, const RoutingCurve& random_mean,
                            const RoutingCurve& ideal) {
    if (router.values.size() != random_mean.values.size() ||
        router.values.size() != ideal.values.size())
        throw Error("area_captured: curve lengths differ");
    const double a_random = curve_area(random_mean);
    const double a_ideal = curve_area(ideal);
    const double a_router = curve_area(router);
    const double gap = a_random - a_ideal;
    if (gap < 1e-12) throw DegenerateGap();
    return (a_random - a_router) / gap;
}

// ====== files ======

inline void write_difficulty_scores(const std::vector<DifficultyScore>& scores,
                                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    for (const auto& s : scores) {
        nlohmann::json j;
        j["task_id"] = s.task_id;
        j["p_hard"] = s.p_hard;
        out << j.dump() << "\n";
    }
}

inline std::vector<DifficultyScore> load_difficulty_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    std::vector<DifficultyScore> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            DifficultyScore s;
            s.task_id = j.at("task_id").get<std::string>();
            s.p_hard = j.at("p_hard").get<double>();
            if (!(s.p_hard >= 0.0 && s.p_hard <= 1.0))
                throw Error("p_hard outside [0,1]");
            out.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedLine(lineno, e.what());
        }
    }
    return out;
}

/// Curve CSV: one row per k plus a trailing area_captured comment line.
inline void write_curve_csv(std::ostream& out, const RoutingCurve& router,
                            const RandomCurves& random, const RoutingCurve& ideal,
                            double captured) {
    out << "k,router,random_mean,random_min,random_max,ideal\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    for (std::size_t k = 0; k < router.values.size(); ++k)
        out << k << ',' << fmt(router.values[k]) << ',' << fmt(random.mean_curve.values[k])
            << ',' << fmt(random.min_band[k]) << ',' << fmt(random.max_band[k]) << ','
            << fmt(ideal.values[k]) << "\n";
    out << "# area_captured = " << fmt(captured) << "\n";
}

}  // namespace ctxcast

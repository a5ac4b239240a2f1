#pragma once

/// @file strategies.hpp
/// End-to-end prompting strategies for one task: render the prompt,
/// collect validated samples, stack them into a forecast distribution.
/// Correction strategies additionally consume a base forecast.

#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ctxcast/client.hpp"
#include "ctxcast/errors.hpp"
#include "ctxcast/forecasters.hpp"
#include "ctxcast/metrics.hpp"
#include "ctxcast/parse.hpp"
#include "ctxcast/prompts.hpp"
#include "ctxcast/task.hpp"

namespace ctxcast {

enum class Strategy { DP, DP_NO_CONTEXT, REDP, CORDP_MEDIAN, CORDP_SAMPLEWISE, ICDP };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::DP: return "dp";
        case Strategy::DP_NO_CONTEXT: return "dp-no-context";
        case Strategy::REDP: return "redp";
        case Strategy::CORDP_MEDIAN: return "cordp-median";
        case Strategy::CORDP_SAMPLEWISE: return "cordp-samplewise";
        case Strategy::ICDP: return "icdp";
    }
    return "?";
}

inline std::optional<Strategy> strategy_from_name(const std::string& name) {
    for (Strategy s : {Strategy::DP, Strategy::DP_NO_CONTEXT, Strategy::REDP,
                       Strategy::CORDP_MEDIAN, Strategy::CORDP_SAMPLEWISE, Strategy::ICDP})
        if (name == strategy_name(s)) return s;
    return std::nullopt;
}

struct StrategyRun {
    Strategy strategy = Strategy::DP;
    ForecastDistribution forecast;
    std::optional<std::vector<std::string>> traces;  // one per sample (reasoning strategy)
    long attempts_used = 0;
    std::optional<std::string> base_model;  // correction strategies
};

namespace detail {

/// Validator: a well-formed <forecast> block covering exactly the task's
/// prediction timestamps.
inline auto forecast_validator(const TaskInstance& task) {
    return [&task](const std::string& text) {
        const auto block = extract_tagged(text, "forecast");
        return parse_forecast_block(block.body, task.pred_timestamps);
    };
}

inline ForecastDistribution stack_samples(std::vector<std::vector<double>> rows,
                                          const TaskInstance& task) {
    ForecastDistribution d;
    d.samples = std::move(rows);
    d.timestamps = task.pred_timestamps;
    return d;
}

}  // namespace detail

/// Direct prompting: n_samples independent forecasts, context on or off.
inline StrategyRun run_dp(const TaskInstance& task, const ChatClient& client, int n_samples,
                          bool with_context = true) {
    if (n_samples < 1) throw Error("run_dp: n_samples must be >= 1");
    const auto kind = with_context ? PromptKind::DP : PromptKind::DP_NO_CONTEXT;
    const auto prompt = render(kind, task);
    StrategyRun run;
    run.strategy = with_context ? Strategy::DP : Strategy::DP_NO_CONTEXT;
    auto rows = client.sample_validated(prompt.text, n_samples, detail::forecast_validator(task),
                                        &run.attempts_used);
    run.forecast = detail::stack_samples(std::move(rows), task);
    return run;
}

/// Reasoning-first prompting: every sample must carry a <reason> block and
/// a valid forecast; traces are kept aligned to samples.
inline StrategyRun run_redp(const TaskInstance& task, const ChatClient& client, int n_samples) {
    if (n_samples < 1) throw Error("run_redp: n_samples must be >= 1");
    const auto prompt = render(PromptKind::REDP, task);
    auto validator = [&task](const std::string& text) {
        const auto reason = extract_tagged(text, "reason");
        const auto block = extract_tagged(text, "forecast");
        return std::make_pair(reason.body,
                              parse_forecast_block(block.body, task.pred_timestamps));
    };
    StrategyRun run;
    run.strategy = Strategy::REDP;
    auto pairs = client.sample_validated(prompt.text, n_samples, validator, &run.attempts_used);
    std::vector<std::string> traces;
    std::vector<std::vector<double>> rows;
    traces.reserve(pairs.size());
    rows.reserve(pairs.size());
    for (auto& [trace, values] : pairs) {
        traces.push_back(std::move(trace));
        rows.push_back(std::move(values));
    }
    run.forecast = detail::stack_samples(std::move(rows), task);
    run.traces = std::move(traces);
    return run;
}

namespace detail {

inline void check_base_alignment(const TaskInstance& task, const BaseForecast& base) {
    if (base.distribution.samples.empty())
        throw EmptySamples("base forecast for task " + task.id + " has no samples");
    for (const auto& row : base.distribution.samples)
        if (row.size() != task.future.size())
            throw TaskSetMismatch("base forecast horizon " + std::to_string(row.size()) +
                                  " does not match task " + task.id + " horizon " +
                                  std::to_string(task.future.size()));
}

inline auto corrected_validator(const TaskInstance& task) {
    return [&task](const std::string& text) {
        const auto block = extract_tagged(text, "corrected_forecast");
        return parse_forecast_block(block.body, task.pred_timestamps);
    };
}

}  // namespace detail

/// Correction of the base median: M independent corrected paths.
inline StrategyRun run_cordp_median(const TaskInstance& task, const BaseForecast& base,
                                    int M, const ChatClient& client,
                                    int precision = kDefaultPromptPrecision) {
    if (M < 1) throw Error("run_cordp_median: M must be >= 1");
    detail::check_base_alignment(task, base);
    PromptExtras extras;
    extras.base_forecast_text =
        format_series(task.pred_timestamps, forecast_median(base), precision);
    const auto prompt = render(PromptKind::CORDP, task, extras, precision);
    StrategyRun run;
    run.strategy = Strategy::CORDP_MEDIAN;
    run.base_model = base.model_name;
    auto rows = client.sample_validated(prompt.text, M, detail::corrected_validator(task),
                                        &run.attempts_used);
    run.forecast = detail::stack_samples(std::move(rows), task);
    return run;
}

/// Correction of each base sample: one call per sample, count preserved,
/// output sample i derived from base sample i.
inline StrategyRun run_cordp_samplewise(const TaskInstance& task, const BaseForecast& base,
                                        const ChatClient& client,
                                        int precision = kDefaultPromptPrecision) {
    detail::check_base_alignment(task, base);
    const int n = static_cast<int>(base.distribution.samples.size());
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    std::atomic<long> attempts{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            PromptExtras extras;
            extras.base_forecast_text =
                format_series(task.pred_timestamps,
                              base.distribution.samples[static_cast<std::size_t>(i)], precision);
            try {
                const auto prompt = render(PromptKind::CORDP, task, extras, precision);
                long used = 0;
                auto one = client.sample_validated(prompt.text, 1,
                                                   detail::corrected_validator(task), &used);
                attempts.fetch_add(used);
                rows[static_cast<std::size_t>(i)] = std::move(one.front());
            } catch (const RetriesExhausted& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error)
                    first_error = std::make_exception_ptr(RetriesExhausted(i, e.last_error));
                failed.store(true);
                return;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
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

    StrategyRun run;
    run.strategy = Strategy::CORDP_SAMPLEWISE;
    run.base_model = base.model_name;
    run.attempts_used = attempts.load();
    run.forecast = detail::stack_samples(std::move(rows), task);
    return run;
}

/// In-context prompting: one solved example task ahead of the real one.
inline StrategyRun run_icdp(const TaskInstance& task, const TaskInstance& example,
                            const ChatClient& client, int n_samples) {
    if (n_samples < 1) throw Error("run_icdp: n_samples must be >= 1");
    if (example.id == task.id)
        throw Error("run_icdp: example task must differ from the forecast task (" + task.id +
                    ")");
    if (example.future.empty()) throw ExampleMissingFuture();
    PromptExtras extras;
    extras.example_task = &example;
    const auto prompt = render(PromptKind::ICDP, task, extras);
    StrategyRun run;
    run.strategy = Strategy::ICDP;
    auto rows = client.sample_validated(prompt.text, n_samples, detail::forecast_validator(task),
                                        &run.attempts_used);
    run.forecast = detail::stack_samples(std::move(rows), task);
    return run;
}

}  // namespace ctxcast

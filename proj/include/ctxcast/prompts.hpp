#pragma once

/// @file prompts.hpp
/// Prompt templates and slot filling. The template constants are the single
/// source of truth at runtime; the files under templates/ mirror them
/// byte-for-byte and a test keeps the two in sync.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxcast/digest.hpp"
#include "ctxcast/errors.hpp"
#include "ctxcast/task.hpp"
#include "ctxcast/timestamp.hpp"

namespace ctxcast {

enum class PromptKind { DP, DP_NO_CONTEXT, REDP, CORDP, ICDP, ROUTER, GOLD_TRACE, JUDGE };

inline const char* prompt_kind_name(PromptKind k) {
    switch (k) {
        case PromptKind::DP: return "dp";
        case PromptKind::DP_NO_CONTEXT: return "dp_no_context";
        case PromptKind::REDP: return "redp";
        case PromptKind::CORDP: return "cordp";
        case PromptKind::ICDP: return "icdp";
        case PromptKind::ROUTER: return "router";
        case PromptKind::GOLD_TRACE: return "gold_trace";
        case PromptKind::JUDGE: return "judge";
    }
    return "?";
}

inline constexpr PromptKind kAllPromptKinds[] = {
    PromptKind::DP,     PromptKind::DP_NO_CONTEXT, PromptKind::REDP,       PromptKind::CORDP,
    PromptKind::ICDP,   PromptKind::ROUTER,        PromptKind::GOLD_TRACE, PromptKind::JUDGE};

namespace tpl {

inline constexpr const char* kDp =
    R"__T(I have a time series forecasting task for you.

Here is some context about the task. Make sure to factor in any background knowledge,
satisfy any constraints, and respect any scenarios.
<context>
((context))
</context>

Here is a historical time series in (timestamp, value) format:
<history>
((history))
</history>

Now please predict the value at the following timestamps: ((pred_time)).

Return the forecast in (timestamp, value) format in between <forecast> and </forecast> tags.
Do not include any other information (e.g., comments) in the forecast.

Example:
<history>
(t1, v1)
(t2, v2)
(t3, v3)
</history>
<forecast>
(t4, v4)
(t5, v5)
</forecast>)__T";

inline constexpr const char* kRedp =
    R"__T(I have a time series forecasting task for you.

Here is some context about the task. Make sure to factor in any background knowledge,
satisfy any constraints, and respect any scenarios.
<context>
{context}
</context>

Here is a historical time series in (timestamp, value) format:
<history>
{history}
</history>

You are tasked with predicting the value at the following timestamps: {pred_time}.

First, within <reason> and </reason> tags, walk-through step-by-step how you would incorporate each piece of the context to improve your forecast. If you think any of the context is irrelevant, please indicate.

Next, return your forecast in (timestamp, value) format in between <forecast> and </forecast> tags.
Do not include any other information (e.g., comments) in the forecast.)__T";

inline constexpr const char* kCordp =
    R"__T(I have a time series forecasting task for you.

Here is some context about the task. Make sure to factor in any background knowledge,
satisfy any constraints, and respect any scenarios.
<context>
{context}
</context>

Here is a historical time series in (timestamp, value) format:
<history>
{history}
</history>

And these are the forecasts of my statistical forecasting model in (timestamp, value) format:
<base_forecast>
{base_forecasts}
</base_forecast>

My statistical forecasting model does not support taking in context as part of its input. I would like you to correct its forecasts to incorporate the context wherever necessary, and return the corrected context-aware forecast.
Return the corrected forecast in (timestamp, value) format in between <corrected_forecast> and </corrected_forecast> tags.
Do not include any other information (e.g., comments) in the forecast.)__T";

inline constexpr const char* kIcdp =
    R"__T(I have a context-aided time series forecasting task for you, where you will be given the history of a time series and additional context information, and prediction timesteps for which a forecast is required. You are expected to factor in any background knowledge,
satisfy any constraints, and respect any scenarios given in the context, and output the forecast.
in (timestamp, value) format in between <forecast> and </forecast> tags. You are to not include any other information (e.g., comments) in the forecast.

Here is the prompt for an example task:

Here is the context:
<context>
Background: {example_task_instance.background}
Constraints: {example_task_instance.constraints}
Scenario: {example_task_instance.scenario}

</context>

Here is a historical time series in (timestamp, value) format:
<history>{example_task_history}</history>

Now please predict the value at the following timestamps: {example_pred_time}.


The expected output would be:
<forecast>{example_task_future}</forecast>

Note how the context was incorporated in the forecast. You are expected to do the same.
Here is the problem for which you need to return a forecast:

Here is some context about the task.
<context>
{context}
</context>

Here is a historical time series in (timestamp, value) format:
<history>
{history}
</history>

Now please predict the value at the following timestamps: {pred_time}.

Return the forecast in (timestamp, value) format in between <forecast> and </forecast> tags.
Do not include any other information (e.g., comments) in the forecast.)__T";

inline constexpr const char* kRouter =
    "{direct_prompt}\n"
    "You are given a forecasting task with full contextual information. \n"
    "Please rate the task as easy or hard.\n"
    "Difficulty: ";

inline constexpr const char* kGoldTrace =
    R"__T(You are a forecasting expert. Given the following information:

CONTEXT:
{context}

Please provide a concise reasoning trace (one sentence) that explains how someone could logically produce a forecast based on the context.

Format your response as:
<reason>
[Your detailed reasoning here]
</reason>)__T";

inline constexpr const char* kJudge =
    R"__T(Compare these two reasoning traces for a forecasting task:

Model Reasoning:
{model_reasoning}

Ground Truth Reasoning:
{ground_truth_reasoning}

Question: Is the model reasoning aligned with the key points mentioned in ground truth reasoning approach?

Answer with exactly one word: YES or NO

<answer>YES/NO</answer>)__T";

}  // namespace tpl

inline const char* template_text(PromptKind k) {
    switch (k) {
        case PromptKind::DP:
        case PromptKind::DP_NO_CONTEXT: return tpl::kDp;
        case PromptKind::REDP: return tpl::kRedp;
        case PromptKind::CORDP: return tpl::kCordp;
        case PromptKind::ICDP: return tpl::kIcdp;
        case PromptKind::ROUTER: return tpl::kRouter;
        case PromptKind::GOLD_TRACE: return tpl::kGoldTrace;
        case PromptKind::JUDGE: return tpl::kJudge;
    }
    return "";
}

/// Template file name under templates/ for each kind.
inline std::string template_file_name(PromptKind k) {
    return std::string(prompt_kind_name(k)) + ".txt";
}

// ====== value and series formatting ======

inline constexpr int kDefaultPromptPrecision = 6;

/// Renders a finite value with up to `precision` significant digits, using
/// plain decimal notation for magnitudes in [1e-4, 1e9) (always keeping one
/// fractional digit) and %g-style exponent notation outside that range.
inline std::string format_value(double v, int precision) {
    if (!std::isfinite(v)) throw NonFiniteValue("cannot format non-finite value");
    precision = std::max(1, precision);
    if (v == 0.0) v = 0.0;  // normalize -0
    const double a = std::abs(v);
    char buf[64];
    if (a != 0.0 && (a < 1e-4 || a >= 1e9)) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.*e", precision - 1, v);
    std::string s = buf;
    const bool neg = s[0] == '-';
    if (neg) s.erase(0, 1);
    const auto epos = s.find('e');
    const int exp10 = std::atoi(s.c_str() + epos + 1);
    std::string digits = s.substr(0, epos);
    digits.erase(std::remove(digits.begin(), digits.end(), '.'), digits.end());

    std::string out;
    if (exp10 >= 0) {
        if (exp10 + 1 >= static_cast<int>(digits.size()))
            out = digits + std::string(exp10 + 1 - digits.size(), '0') + ".0";
        else
            out = digits.substr(0, exp10 + 1) + "." + digits.substr(exp10 + 1);
    } else {
        out = "0." + std::string(-exp10 - 1, '0') + digits;
    }
    const auto dot = out.find('.');
    auto last = out.find_last_not_of('0');
    if (last == dot) ++last;  // keep one fractional digit
    out.erase(last + 1);
    return neg ? "-" + out : out;
}

/// One "(YYYY-MM-DD HH:MM:SS, v)" pair per line, in input order.
inline std::string format_series(const std::vector<std::pair<Timestamp, double>>& points,
                                 int precision) {
    std::string out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) out += "\n";
        out += "(" + points[i].first.str() + ", " + format_value(points[i].second, precision) + ")";
    }
    return out;
}

inline std::string format_series(const std::vector<Timestamp>& ts, const std::vector<double>& vals,
                                 int precision) {
    std::vector<std::pair<Timestamp, double>> pts;
    pts.reserve(ts.size());
    for (std::size_t i = 0; i < ts.size() && i < vals.size(); ++i)
        pts.emplace_back(ts[i], vals[i]);
    return format_series(pts, precision);
}

/// Comma-separated timestamp list used for the "following timestamps:" slot.
inline std::string format_timestamp_list(const std::vector<Timestamp>& ts) {
    std::string out;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (i) out += ", ";
        out += ts[i].str();
    }
    return out;
}

/// Context block body. Absent fields show the literal word "None".
inline std::string context_text(const Context& c) {
    auto field = [](const std::optional<std::string>& v) { return v ? *v : std::string("None"); };
    return "Background: " + field(c.background) + "\nConstraints: " + field(c.constraints_text) +
           "\nScenario: " + field(c.scenario);
}

// ====== rendering ======

struct RenderedPrompt {
    PromptKind kind;
    std::string text;
    std::map<std::string, std::string> slots_digest;
};

/// Slot payloads beyond the task itself. Kinds accept exactly the fields
/// they need: CORDP the base forecast text, ICDP the example task, JUDGE the
/// two traces, ROUTER the instantiated direct prompt.
struct PromptExtras {
    std::optional<std::string> base_forecast_text;
    const TaskInstance* example_task = nullptr;
    std::optional<std::string> model_trace;
    std::optional<std::string> gold_trace;
    std::optional<std::string> direct_prompt_text;
};

namespace detail {

inline void fill_slot(std::string& text, const std::string& placeholder, const std::string& value,
                      RenderedPrompt& out, const std::string& slot_name) {
    const auto pos = text.find(placeholder);
    if (pos == std::string::npos)
        throw Error("template for " + std::string(prompt_kind_name(out.kind)) +
                    " lacks placeholder " + placeholder);
    text.replace(pos, placeholder.size(), value);
    out.slots_digest[slot_name] = digest_hex(value);
}

inline void check_extras(PromptKind kind, const PromptExtras& extras) {
    const auto name = std::string(prompt_kind_name(kind));
    const bool needs_base = kind == PromptKind::CORDP;
    const bool needs_example = kind == PromptKind::ICDP;
    const bool needs_traces = kind == PromptKind::JUDGE;
    const bool needs_direct = kind == PromptKind::ROUTER;
    if (needs_base && !extras.base_forecast_text) throw MissingSlot(name, "base_forecast_text");
    if (!needs_base && extras.base_forecast_text) throw ExtraSlot(name, "base_forecast_text");
    if (needs_example && !extras.example_task) throw MissingSlot(name, "example_task");
    if (!needs_example && extras.example_task) throw ExtraSlot(name, "example_task");
    if (needs_traces && !extras.model_trace) throw MissingSlot(name, "model_trace");
    if (needs_traces && !extras.gold_trace) throw MissingSlot(name, "gold_trace");
    if (!needs_traces && (extras.model_trace || extras.gold_trace))
        throw ExtraSlot(name, extras.model_trace ? "model_trace" : "gold_trace");
    if (needs_direct && !extras.direct_prompt_text) throw MissingSlot(name, "direct_prompt_text");
    if (!needs_direct && extras.direct_prompt_text) throw ExtraSlot(name, "direct_prompt_text");
}

}  // namespace detail

/// Instantiates the template for `kind` with the task's data and extras.
/// Deterministic and pure; output is byte-stable for fixed inputs.
inline RenderedPrompt render(PromptKind kind, const TaskInstance& task,
                             const PromptExtras& extras = {},
                             int precision = kDefaultPromptPrecision) {
    detail::check_extras(kind, extras);
    RenderedPrompt out;
    out.kind = kind;
    out.text = template_text(kind);

    using detail::fill_slot;
    switch (kind) {
        case PromptKind::DP:
        case PromptKind::DP_NO_CONTEXT: {
            const std::string ctx =
                kind == PromptKind::DP ? context_text(task.context) : std::string();
            fill_slot(out.text, "((context))", ctx, out, "context");
            fill_slot(out.text, "((history))", format_series(task.history, precision), out,
                      "history");
            fill_slot(out.text, "((pred_time))", format_timestamp_list(task.pred_timestamps), out,
                      "pred_time");
            break;
        }
        case PromptKind::REDP:
        case PromptKind::CORDP: {
            fill_slot(out.text, "{context}", context_text(task.context), out, "context");
            fill_slot(out.text, "{history}", format_series(task.history, precision), out,
                      "history");
            fill_slot(out.text, "{pred_time}", format_timestamp_list(task.pred_timestamps), out,
                      "pred_time");
            if (kind == PromptKind::CORDP)
                fill_slot(out.text, "{base_forecasts}", *extras.base_forecast_text, out,
                          "base_forecasts");
            break;
        }
        case PromptKind::ICDP: {
            const TaskInstance& ex = *extras.example_task;
            if (ex.future.empty()) throw ExampleMissingFuture();
            auto field = [](const std::optional<std::string>& v) {
                return v ? *v : std::string("None");
            };
            fill_slot(out.text, "{example_task_instance.background}", field(ex.context.background),
                      out, "example_background");
            fill_slot(out.text, "{example_task_instance.constraints}",
                      field(ex.context.constraints_text), out, "example_constraints");
            fill_slot(out.text, "{example_task_instance.scenario}", field(ex.context.scenario),
                      out, "example_scenario");
            fill_slot(out.text, "{example_task_history}", format_series(ex.history, precision),
                      out, "example_history");
            fill_slot(out.text, "{example_pred_time}", format_timestamp_list(ex.pred_timestamps),
                      out, "example_pred_time");
            fill_slot(out.text, "{example_task_future}",
                      format_series(ex.pred_timestamps, ex.future, precision), out,
                      "example_future");
            fill_slot(out.text, "{context}", context_text(task.context), out, "context");
            fill_slot(out.text, "{history}", format_series(task.history, precision), out,
                      "history");
            fill_slot(out.text, "{pred_time}", format_timestamp_list(task.pred_timestamps), out,
                      "pred_time");
            break;
        }
        case PromptKind::ROUTER:
            fill_slot(out.text, "{direct_prompt}", *extras.direct_prompt_text, out,
                      "direct_prompt");
            break;
        case PromptKind::GOLD_TRACE:
            fill_slot(out.text, "{context}", context_text(task.context), out, "context");
            break;
        case PromptKind::JUDGE:
            fill_slot(out.text, "{model_reasoning}", *extras.model_trace, out, "model_reasoning");
            fill_slot(out.text, "{ground_truth_reasoning}", *extras.gold_trace, out,
                      "ground_truth_reasoning");
            break;
    }
    return out;
}

}  // namespace ctxcast

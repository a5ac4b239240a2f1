#pragma once

/// @file metrics.hpp
/// Scoring: empirical CRPS, the constraint-violation functional, the
/// region-of-interest-weighted CRPS with its scale normalization, and
/// mean/standard-error aggregation for reports.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ctxcast/errors.hpp"
#include "ctxcast/task.hpp"
#include "ctxcast/timestamp.hpp"

namespace ctxcast {

/// Sample-path forecast: n_samples rows, horizon columns.
struct ForecastDistribution {
    std::vector<std::vector<double>> samples;
    std::vector<Timestamp> timestamps;

    std::size_t n_samples() const { return samples.size(); }
    std::size_t horizon() const { return timestamps.size(); }

    std::vector<double> column(std::size_t i) const {
        std::vector<double> col;
        col.reserve(samples.size());
        for (const auto& row : samples) col.push_back(row.at(i));
        return col;
    }
};

enum class AlphaRule { Override, RangeNormalized };

struct MetricConfig {
    double beta = 10.0;
    AlphaRule alpha_rule = AlphaRule::RangeNormalized;
    double epsilon = 1e-8;
};

/// Decomposed score. total = alpha_used * (roi_term + non_roi_term +
/// beta * constraint_term), which holds to 1e-12 relative by construction.
struct ScoreBreakdown {
    double total = 0;
    double roi_term = 0;
    double non_roi_term = 0;
    double constraint_term = 0;
    double alpha_used = 1;
};

/// CRPS of the empirical distribution of `samples` against `target`:
/// mean |s - target| - (1 / (2 m^2)) * sum_ij |s_i - s_j|.
/// This is the plain empirical form (the m-sample set IS the predictive
/// distribution), not the debiased variant.
inline double crps_empirical(const std::vector<double>& samples, double target) {
    if (samples.empty()) throw EmptySamples();
    if (!std::isfinite(target)) throw NonFiniteInput("crps target not finite");
    const std::size_t m = samples.size();
    double abs_err = 0;
    for (double s : samples) {
        if (!std::isfinite(s)) throw NonFiniteInput("crps sample not finite");
        abs_err += std::abs(s - target);
    }
    abs_err /= static_cast<double>(m);

    // spread term over the sorted samples: sum_ij |s_i - s_j| in O(m log m)
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    double pair_sum = 0;  // sum over ordered pairs i<j of (s_j - s_i), doubled below
    double prefix = 0;
    for (std::size_t j = 0; j < m; ++j) {
        pair_sum += sorted[j] * static_cast<double>(j) - prefix;
        prefix += sorted[j];
    }
    const double spread = 2.0 * pair_sum / (2.0 * static_cast<double>(m) * static_cast<double>(m));
    return std::max(0.0, abs_err - spread);
}

/// Worst bound violation along one sample path; 0 when the path satisfies
/// the bounds (absent bounds never bind).
inline double constraint_violation(const std::vector<double>& path, const ConstraintSpec& spec) {
    if (path.empty()) throw EmptySamples();
    double worst = 0;
    for (double v : path) {
        if (!std::isfinite(v)) throw NonFiniteInput("constraint path value not finite");
        if (spec.upper) worst = std::max(worst, v - *spec.upper);
        if (spec.lower) worst = std::max(worst, *spec.lower - v);
    }
    return worst;
}

namespace detail {

inline double alpha_for(const TaskInstance& task, const MetricConfig& cfg) {
    if (task.alpha_override) return *task.alpha_override;
    if (cfg.alpha_rule == AlphaRule::Override) return 1.0;
    double lo = task.future.front(), hi = task.future.front();
    for (double v : task.future) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return 1.0 / std::max(cfg.epsilon, hi - lo);
}

}  // namespace detail

/// Region-of-interest CRPS of a forecast distribution against a task's
/// ground truth. The window splits into the region of interest I and its
/// complement, each carrying half the weight; a missing or all-covering
/// region collapses to a plain per-step mean. Bound violations enter as the
/// CRPS of per-sample worst violations against 0, scaled by beta.
inline ScoreBreakdown rcrps(const ForecastDistribution& forecast, const TaskInstance& task,
                            const MetricConfig& cfg = {}) {
    if (forecast.samples.empty()) throw EmptySamples();
    if (forecast.timestamps.size() != task.pred_timestamps.size())
        throw TimestampMismatch("forecast horizon " + std::to_string(forecast.timestamps.size()) +
                                " vs task horizon " + std::to_string(task.pred_timestamps.size()));
    for (std::size_t i = 0; i < forecast.timestamps.size(); ++i)
        if (forecast.timestamps[i] != task.pred_timestamps[i])
            throw TimestampMismatch("forecast timestamp " + forecast.timestamps[i].str() +
                                    " differs from task timestamp " +
                                    task.pred_timestamps[i].str());

    const std::size_t horizon = task.pred_timestamps.size();
    std::vector<bool> in_roi(horizon, false);
    std::size_t roi_count = 0;
    if (task.roi) {
        for (int i : *task.roi) in_roi.at(static_cast<std::size_t>(i)) = true;
        roi_count = task.roi->size();
    }
    const bool whole_window = roi_count == 0 || roi_count == horizon;

    ScoreBreakdown out;
    if (whole_window) {
        double sum = 0;
        for (std::size_t i = 0; i < horizon; ++i)
            sum += crps_empirical(forecast.column(i), task.future[i]);
        out.roi_term = sum / static_cast<double>(horizon);
        out.non_roi_term = 0;
    } else {
        double roi_sum = 0, rest_sum = 0;
        for (std::size_t i = 0; i < horizon; ++i) {
            const double c = crps_empirical(forecast.column(i), task.future[i]);
            (in_roi[i] ? roi_sum : rest_sum) += c;
        }
        out.roi_term = roi_sum / (2.0 * static_cast<double>(roi_count));
        out.non_roi_term = rest_sum / (2.0 * static_cast<double>(horizon - roi_count));
    }

    if (task.constraint) {
        std::vector<double> violations;
        violations.reserve(forecast.samples.size());
        for (const auto& row : forecast.samples)
            violations.push_back(constraint_violation(row, *task.constraint));
        out.constraint_term = crps_empirical(violations, 0.0);
    }

    out.alpha_used = detail::alpha_for(task, cfg);
    out.total = out.alpha_used * (out.roi_term + out.non_roi_term + cfg.beta * out.constraint_term);
    return out;
}

/// Mean and standard error (sample sd over sqrt(n); 0 when n = 1).
inline std::pair<double, double> aggregate(const std::vector<double>& scores) {
    if (scores.empty()) throw EmptyInput();
    double mean = 0;
    for (double s : scores) {
        if (!std::isfinite(s)) throw NonFiniteInput("aggregate input not finite");
        mean += s;
    }
    mean /= static_cast<double>(scores.size());
    if (scores.size() == 1) return {mean, 0.0};
    double ss = 0;
    for (double s : scores) ss += (s - mean) * (s - mean);
    const double sd = std::sqrt(ss / static_cast<double>(scores.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(scores.size()))};
}

enum class ReportGroup { All, Roi, NonRoi, FullRoi, Constraints };

inline const char* report_group_name(ReportGroup g) {
    switch (g) {
        case ReportGroup::All: return "all";
        case ReportGroup::Roi: return "roi";
        case ReportGroup::NonRoi: return "non-roi";
        case ReportGroup::FullRoi: return "full-roi";
        case ReportGroup::Constraints: return "constraints";
    }
    return "?";
}

/// Aggregates one score component over the tasks admissible to the group:
/// "roi"/"non-roi" admit tasks with a partial region of interest and report
/// the per-step CRPS mean on the corresponding side; "full-roi" admits tasks
/// whose window is entirely of interest; "constraints" admits bounded tasks
/// and reports the raw violation CRPS; "all" admits everything.
inline std::pair<double, double> grouped_report(
    const std::vector<std::pair<const TaskInstance*, ScoreBreakdown>>& records, ReportGroup group) {
    std::vector<double> vals;
    for (const auto& [task, score] : records) {
        switch (group) {
            case ReportGroup::All:
                vals.push_back(score.total);
                break;
            case ReportGroup::Roi:
                if (task->partial_roi()) vals.push_back(2.0 * score.roi_term);
                break;
            case ReportGroup::NonRoi:
                if (task->partial_roi()) vals.push_back(2.0 * score.non_roi_term);
                break;
            case ReportGroup::FullRoi:
                if (!task->partial_roi()) vals.push_back(score.total);
                break;
            case ReportGroup::Constraints:
                if (task->constraint) vals.push_back(score.constraint_term);
                break;
        }
    }
    if (vals.empty())
        throw EmptyGroup(std::string("no tasks admissible to group '") +
                         report_group_name(group) + "'");
    return aggregate(vals);
}

}  // namespace ctxcast

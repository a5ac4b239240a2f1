#pragma once

/// @file forecasters.hpp
/// Statistical base forecasters producing sample-path distributions that
/// the correction strategies revise: seasonal naive with residual
/// bootstrap, and least-squares autoregression. Plus JSONL import/export
/// so externally produced base forecasts can be plugged in.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

// resolv.h (via networking headers) defines a macro named _res, which Eigen
// uses as a parameter name
#pragma push_macro("_res")
#undef _res
#include <Eigen/Dense>
#pragma pop_macro("_res")

#include <json.hpp>

#include "ctxcast/errors.hpp"
#include "ctxcast/metrics.hpp"
#include "ctxcast/task.hpp"

namespace ctxcast {

struct BaseForecast {
    ForecastDistribution distribution;
    std::string model_name;
    std::map<std::string, std::string> fitted_params;
};

/// Repeats the last full period, widened by bootstrapping one-period-lag
/// residuals. Deterministic in seed.
inline BaseForecast seasonal_naive(const std::vector<double>& history, int period, int horizon,
                                   int n_samples, std::uint64_t seed) {
    if (period < 1) throw Error("seasonal_naive: period must be >= 1");
    if (horizon < 1) throw Error("seasonal_naive: horizon must be >= 1");
    if (n_samples < 1) throw Error("seasonal_naive: n_samples must be >= 1");
    const auto H = history.size();
    if (H < 2 * static_cast<std::size_t>(period))
        throw HistoryTooShort("seasonal_naive: need at least " + std::to_string(2 * period) +
                              " points, got " + std::to_string(H));

    std::vector<double> point(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t)
        point[static_cast<std::size_t>(t)] =
            history[H - static_cast<std::size_t>(period) +
                    static_cast<std::size_t>(t % period)];
    std::vector<double> residuals;
    residuals.reserve(H - static_cast<std::size_t>(period));
    for (std::size_t i = static_cast<std::size_t>(period); i < H; ++i)
        residuals.push_back(history[i] - history[i - static_cast<std::size_t>(period)]);

    std::mt19937_64 rng(seed);
    BaseForecast out;
    out.model_name = "seasonal_naive";
    out.fitted_params["period"] = std::to_string(period);
    out.distribution.samples.assign(static_cast<std::size_t>(n_samples), point);
    for (auto& row : out.distribution.samples)
        for (auto& v : row)
            v += residuals[static_cast<std::size_t>(
                detail::uniform_int(rng, 0, static_cast<std::int64_t>(residuals.size()) - 1))];
    return out;
}

/// AR(order) with intercept, fit by least squares. Sample paths roll
/// forward feeding their own draws back into the lags; the residual
/// distribution is the empirical fit residuals. A rank-deficient design
/// falls back to seasonal_naive with period 1, recorded in fitted_params.
inline BaseForecast autoregressive(const std::vector<double>& history, int order, int horizon,
                                   int n_samples, std::uint64_t seed) {
    if (order < 1) throw Error("autoregressive: order must be >= 1");
    if (horizon < 1) throw Error("autoregressive: horizon must be >= 1");
    if (n_samples < 1) throw Error("autoregressive: n_samples must be >= 1");
    const auto H = history.size();
    if (H < static_cast<std::size_t>(3 * order + 2))
        throw HistoryTooShort("autoregressive: need at least " + std::to_string(3 * order + 2) +
                              " points, got " + std::to_string(H));

    const auto p = static_cast<std::size_t>(order);
    const auto rows = H - p;
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p + 1));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + p;  // target index
        A(static_cast<Eigen::Index>(r), 0) = 1.0;
        for (std::size_t j = 1; j <= p; ++j)
            A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = history[t - j];
        y(static_cast<Eigen::Index>(r)) = history[t];
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    const std::string model_name = "ar" + std::to_string(order);
    if (cod.rank() < static_cast<Eigen::Index>(p + 1)) {
        BaseForecast out = seasonal_naive(history, 1, horizon, n_samples, seed);
        out.model_name = model_name;
        out.fitted_params["order"] = std::to_string(order);
        out.fitted_params["fallback"] = "singular_design:seasonal_naive(period=1)";
        return out;
    }
    const Eigen::VectorXd beta = cod.solve(y);
    const Eigen::VectorXd resid = y - A * beta;

    BaseForecast out;
    out.model_name = model_name;
    out.fitted_params["order"] = std::to_string(order);
    {
        std::ostringstream ss;
        ss.precision(17);
        ss << beta(0);
        out.fitted_params["intercept"] = ss.str();
        for (std::size_t j = 1; j <= p; ++j) {
            std::ostringstream cs;
            cs.precision(17);
            cs << beta(static_cast<Eigen::Index>(j));
            out.fitted_params["coef_lag" + std::to_string(j)] = cs.str();
        }
    }

    auto roll = [&](std::mt19937_64* rng) {
        std::vector<double> lags(history.end() - static_cast<std::ptrdiff_t>(p), history.end());
        std::vector<double> path(static_cast<std::size_t>(horizon));
        for (int t = 0; t < horizon; ++t) {
            double v = beta(0);
            for (std::size_t j = 1; j <= p; ++j) v += beta(static_cast<Eigen::Index>(j)) * lags[p - j];
            if (rng)
                v += resid(detail::uniform_int(*rng, 0,
                                               static_cast<std::int64_t>(resid.size()) - 1));
            lags.erase(lags.begin());
            lags.push_back(v);
            path[static_cast<std::size_t>(t)] = v;
        }
        return path;
    };

    std::mt19937_64 rng(seed);
    out.distribution.samples.reserve(static_cast<std::size_t>(n_samples));
    for (int s = 0; s < n_samples; ++s) out.distribution.samples.push_back(roll(&rng));
    return out;
}

/// Per-timestep median over samples; even counts average the central pair.
inline std::vector<double> forecast_median(const BaseForecast& f) {
    const auto& samples = f.distribution.samples;
    if (samples.empty()) throw EmptySamples("forecast_median: no samples");
    const std::size_t h = samples.front().size();
    std::vector<double> med(h);
    std::vector<double> col(samples.size());
    for (std::size_t t = 0; t < h; ++t) {
        for (std::size_t i = 0; i < samples.size(); ++i) col[i] = samples[i][t];
        std::sort(col.begin(), col.end());
        const std::size_t m = col.size();
        med[t] = (m % 2 == 1) ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
    }
    return med;
}

// ====== JSONL import/export ======

inline void write_base_forecasts(
    const std::vector<std::pair<std::string, BaseForecast>>& forecasts,
    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    for (const auto& [task_id, f] : forecasts) {
        nlohmann::json j;
        j["task_id"] = task_id;
        j["model"] = f.model_name;
        j["samples"] = f.distribution.samples;
        auto stamps = nlohmann::json::array();
        for (const auto& ts : f.distribution.timestamps) stamps.push_back(ts.str());
        j["timestamps"] = std::move(stamps);
        out << j.dump() << "\n";
    }
}

inline std::map<std::string, BaseForecast> load_base_forecasts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    std::map<std::string, BaseForecast> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            BaseForecast f;
            f.model_name = j.value("model", "external");
            f.distribution.samples = j.at("samples").get<std::vector<std::vector<double>>>();
            if (j.contains("timestamps"))
                for (const auto& s : j.at("timestamps"))
                    f.distribution.timestamps.push_back(
                        Timestamp::parse_or_throw(s.get<std::string>()));
            const auto id = j.at("task_id").get<std::string>();
            if (out.count(id)) throw DuplicateId("duplicate base forecast for task " + id);
            if (f.distribution.samples.empty())
                throw EmptySamples("base forecast for task " + id + " has no samples");
            out.emplace(id, std::move(f));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedLine(lineno, e.what());
        }
    }
    return out;
}

}  // namespace ctxcast

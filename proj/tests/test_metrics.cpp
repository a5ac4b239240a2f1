#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ctxcast/metrics.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace ctxcast;
using Catch::Approx;

namespace {

ForecastDistribution single_path(const TaskInstance& task, const std::vector<double>& path) {
    ForecastDistribution f;
    f.timestamps = task.pred_timestamps;
    f.samples = {path};
    return f;
}

}  // namespace

TEST_CASE("crps_empirical hand values", "[metrics]") {
    CHECK(crps_empirical({5.0, 5.0, 5.0}, 5.0) == 0.0);
    CHECK(crps_empirical({0.0, 1.0}, 0.0) == Approx(0.25).margin(1e-15));
    CHECK(crps_empirical({0.0, 2.0}, 0.0) == Approx(0.5).margin(1e-15));
    CHECK(crps_empirical({1.0, 2.0}, 5.0) == Approx(3.25).margin(1e-15));
    // one sample degenerates to absolute error
    CHECK(crps_empirical({3.0}, 7.5) == Approx(4.5).margin(1e-15));
}

TEST_CASE("crps_empirical rejects bad input", "[metrics]") {
    CHECK_THROWS_AS(crps_empirical({}, 1.0), EmptySamples);
    CHECK_THROWS_AS(crps_empirical({std::nan("")}, 1.0), NonFiniteInput);
    CHECK_THROWS_AS(crps_empirical({1.0}, std::nan("")), NonFiniteInput);
    CHECK_THROWS_AS(crps_empirical({std::numeric_limits<double>::infinity()}, 1.0),
                    NonFiniteInput);
}

TEST_CASE("crps_empirical matches exact quadrature", "[metrics]") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> value(-50.0, 50.0);
    std::uniform_int_distribution<int> size(1, 50);
    for (int it = 0; it < 100; ++it) {
        std::vector<double> samples(static_cast<std::size_t>(size(rng)));
        for (auto& s : samples) s = value(rng);
        const double target = value(rng);
        const double got = crps_empirical(samples, target);
        const double want = oracle::crps_quadrature(samples, target);
        CHECK(got == Approx(want).margin(1e-6));
        CHECK(got >= 0.0);
    }
}

TEST_CASE("crps_empirical is positive unless the distribution is the target", "[metrics]") {
    CHECK(crps_empirical({2.0, 2.0}, 2.0) == 0.0);
    CHECK(crps_empirical({2.0, 2.0}, 2.1) > 0.0);
    CHECK(crps_empirical({0.0, 1.0}, 0.5) > 0.0);
}

TEST_CASE("crps_empirical scale and shift equivariance", "[metrics]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> value(-10.0, 10.0);
    for (double a : {0.1, 3.0, 100.0}) {
        for (double b : {-7.0, 0.0, 12.0}) {
            std::vector<double> samples(17);
            for (auto& s : samples) s = value(rng);
            const double t = value(rng);
            std::vector<double> scaled;
            for (double s : samples) scaled.push_back(a * s + b);
            const double lhs = crps_empirical(scaled, a * t + b);
            const double rhs = a * crps_empirical(samples, t);
            CHECK(lhs == Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("constraint_violation measures the worst excursion", "[metrics]") {
    ConstraintSpec upper{std::nullopt, 6.29};
    CHECK(constraint_violation({1.0, 6.29}, upper) == 0.0);
    CHECK(constraint_violation({1.0, 7.29}, upper) == Approx(1.0).margin(1e-12));
    ConstraintSpec lower{0.0, std::nullopt};
    CHECK(constraint_violation({-2.0, 5.0}, lower) == Approx(2.0).margin(1e-12));
    ConstraintSpec both{0.0, 10.0};
    CHECK(constraint_violation({-3.0, 12.0}, both) == Approx(3.0).margin(1e-12));
    ConstraintSpec none{std::nullopt, std::nullopt};
    CHECK(constraint_violation({1e9, -1e9}, none) == 0.0);
    CHECK_THROWS_AS(constraint_violation({}, upper), EmptySamples);
    CHECK_THROWS_AS(constraint_violation({std::nan("")}, upper), NonFiniteInput);
}

TEST_CASE("rcrps hand example totals 0.20", "[metrics]") {
    // horizon 4, roi {0,1}; single-sample forecast so per-step CRPS is |err|:
    // roi errors [0.2, 0.4], non-roi errors [0.0, 0.2], alpha 1, no bounds.
    auto task = testutil::plain_task();
    task.roi = std::vector<int>{0, 1};
    task.alpha_override = 1.0;
    auto f = single_path(task, {task.future[0] + 0.2, task.future[1] + 0.4, task.future[2],
                                task.future[3] + 0.2});
    auto s = rcrps(f, task);
    CHECK(s.roi_term == Approx(0.15).margin(1e-12));
    CHECK(s.non_roi_term == Approx(0.05).margin(1e-12));
    CHECK(s.constraint_term == 0.0);
    CHECK(s.alpha_used == 1.0);
    CHECK(s.total == Approx(0.20).margin(1e-12));
}

TEST_CASE("rcrps bounded example scores the 6.29 violation", "[metrics]") {
    auto task = testutil::plain_task();
    task.constraint = ConstraintSpec{std::nullopt, 6.29};
    task.alpha_override = 1.0;
    auto f = single_path(task, {7.29, 5.0, 5.0, 5.0});
    auto s = rcrps(f, task);
    // single path: violation CRPS collapses to |max violation - 0| = 1.0
    CHECK(s.constraint_term == Approx(1.0).margin(1e-12));
    const double plain = (crps_empirical({7.29}, task.future[0]) +
                          crps_empirical({5.0}, task.future[1]) +
                          crps_empirical({5.0}, task.future[2]) +
                          crps_empirical({5.0}, task.future[3])) /
                         4.0;
    CHECK(s.total == Approx(plain + 10.0 * 1.0).margin(1e-9));
}

TEST_CASE("rcrps reduces to mean per-step crps without roi", "[metrics]") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> value(-5.0, 5.0);
    MetricConfig cfg;
    cfg.beta = 0.0;
    for (int it = 0; it < 100; ++it) {
        auto task = testutil::plain_task();
        task.alpha_override = 1.0;
        ForecastDistribution f;
        f.timestamps = task.pred_timestamps;
        f.samples.resize(5, std::vector<double>(4));
        for (auto& row : f.samples)
            for (auto& v : row) v = value(rng);
        auto s = rcrps(f, task, cfg);
        double mean = 0;
        for (std::size_t i = 0; i < 4; ++i) mean += crps_empirical(f.column(i), task.future[i]);
        mean /= 4.0;
        CHECK(s.total == Approx(mean).epsilon(1e-12));
        CHECK(s.non_roi_term == 0.0);
    }
}

TEST_CASE("rcrps full roi equals absent roi", "[metrics]") {
    auto task = testutil::small_task();
    ForecastDistribution f;
    f.timestamps = task.pred_timestamps;
    f.samples = {{11.0, 40.0, 10.0, 14.0}, {9.0, 50.0, 12.0, 12.0}};
    task.roi = std::vector<int>{0, 1, 2, 3};
    auto full = rcrps(f, task);
    task.roi.reset();
    auto absent = rcrps(f, task);
    CHECK(full.total == absent.total);
    CHECK(full.roi_term == absent.roi_term);
    CHECK(full.non_roi_term == 0.0);
    CHECK(absent.non_roi_term == 0.0);
}

TEST_CASE("rcrps scale and shift invariance under range normalization", "[metrics]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> value(-3.0, 8.0);
    for (double c : {0.1, 3.0, 100.0}) {
        for (double b : {-7.0, 0.0, 12.0}) {
            auto task = testutil::small_task();
            task.constraint = ConstraintSpec{std::nullopt, 20.0};
            ForecastDistribution f;
            f.timestamps = task.pred_timestamps;
            f.samples.resize(7, std::vector<double>(4));
            for (auto& row : f.samples)
                for (auto& v : row) v = 12.0 + value(rng);
            const double base = rcrps(f, task).total;

            auto scaled_task = task;
            for (auto& v : scaled_task.future) v = c * v + b;
            scaled_task.constraint = ConstraintSpec{std::nullopt, c * 20.0 + b};
            auto scaled_f = f;
            for (auto& row : scaled_f.samples)
                for (auto& v : row) v = c * v + b;
            const double scaled = rcrps(scaled_f, scaled_task).total;
            CHECK(scaled == Approx(base).epsilon(1e-9));
        }
    }
}

TEST_CASE("rcrps breakdown reassembles the total", "[metrics]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> value(-5.0, 60.0);
    MetricConfig cfg;
    cfg.beta = 3.5;
    for (int it = 0; it < 20; ++it) {
        auto task = testutil::small_task();
        task.constraint = ConstraintSpec{0.0, 55.0};
        ForecastDistribution f;
        f.timestamps = task.pred_timestamps;
        f.samples.resize(9, std::vector<double>(4));
        for (auto& row : f.samples)
            for (auto& v : row) v = value(rng);
        auto s = rcrps(f, task, cfg);
        const double rebuilt = s.alpha_used * (s.roi_term + s.non_roi_term + cfg.beta * s.constraint_term);
        CHECK(s.total == Approx(rebuilt).epsilon(1e-12));
    }
}

TEST_CASE("rcrps alpha selection", "[metrics]") {
    auto task = testutil::plain_task();  // future [10,12,11,13], range 3
    auto f = single_path(task, task.future);
    CHECK(rcrps(f, task).alpha_used == Approx(1.0 / 3.0).epsilon(1e-12));

    task.alpha_override = 0.25;
    CHECK(rcrps(f, task).alpha_used == 0.25);

    task.alpha_override.reset();
    MetricConfig cfg;
    cfg.alpha_rule = AlphaRule::Override;
    CHECK(rcrps(f, task, cfg).alpha_used == 1.0);

    // constant future: epsilon floors the range
    auto flat = testutil::plain_task();
    flat.future = {2.0, 2.0, 2.0, 2.0};
    auto ff = single_path(flat, flat.future);
    CHECK(rcrps(ff, flat).alpha_used == Approx(1e8).epsilon(1e-12));
}

TEST_CASE("rcrps validates input", "[metrics]") {
    auto task = testutil::small_task();
    ForecastDistribution f;
    f.timestamps = task.pred_timestamps;
    CHECK_THROWS_AS(rcrps(f, task), EmptySamples);

    f.samples = {{1.0, 2.0, 3.0}};
    f.timestamps.pop_back();
    CHECK_THROWS_AS(rcrps(f, task), TimestampMismatch);

    f = single_path(task, {1.0, 2.0, 3.0, 4.0});
    f.timestamps[2] = f.timestamps[2].plus_hours(1);
    CHECK_THROWS_AS(rcrps(f, task), TimestampMismatch);
}

TEST_CASE("aggregate mean and standard error", "[metrics]") {
    auto [m, se] = aggregate({0.1, 0.2, 0.3});
    CHECK(m == Approx(0.2).margin(1e-12));
    CHECK(se == Approx(0.1 / std::sqrt(3.0)).epsilon(1e-9));
    auto [m1, se1] = aggregate({0.4});
    CHECK(m1 == 0.4);
    CHECK(se1 == 0.0);
    CHECK_THROWS_AS(aggregate({}), EmptyInput);
    CHECK_THROWS_AS(aggregate({std::nan("")}), NonFiniteInput);
}

TEST_CASE("grouped_report selects the right component per group", "[metrics]") {
    auto partial = testutil::small_task("partial");  // roi {1} of 4
    auto full = testutil::plain_task("full");
    auto constrained = testutil::plain_task("constrained");
    constrained.constraint = ConstraintSpec{std::nullopt, 11.5};

    auto fp = single_path(partial, {partial.future[0] + 1.0, partial.future[1] + 2.0,
                                    partial.future[2] + 1.0, partial.future[3] + 1.0});
    auto s_partial = rcrps(fp, partial);
    auto s_full = rcrps(single_path(full, full.future), full);
    auto s_con = rcrps(single_path(constrained, {13.5, 10.0, 10.0, 10.0}), constrained);

    std::vector<std::pair<const TaskInstance*, ScoreBreakdown>> recs = {
        {&partial, s_partial}, {&full, s_full}, {&constrained, s_con}};

    auto [all_mean, all_se] = grouped_report(recs, ReportGroup::All);
    CHECK(all_mean ==
          Approx((s_partial.total + s_full.total + s_con.total) / 3.0).epsilon(1e-12));

    auto [roi_mean, roi_se] = grouped_report(recs, ReportGroup::Roi);
    CHECK(roi_mean == Approx(2.0 * s_partial.roi_term).epsilon(1e-12));
    CHECK(roi_se == 0.0);

    auto [nroi_mean, nroi_se] = grouped_report(recs, ReportGroup::NonRoi);
    CHECK(nroi_mean == Approx(2.0 * s_partial.non_roi_term).epsilon(1e-12));

    auto [froi_mean, froi_se] = grouped_report(recs, ReportGroup::FullRoi);
    CHECK(froi_mean == Approx((s_full.total + s_con.total) / 2.0).epsilon(1e-12));

    auto [con_mean, con_se] = grouped_report(recs, ReportGroup::Constraints);
    CHECK(con_mean == Approx(s_con.constraint_term).epsilon(1e-12));
    CHECK(con_mean == Approx(2.0).epsilon(1e-9));  // single path exceeding 11.5 by 2

    std::vector<std::pair<const TaskInstance*, ScoreBreakdown>> no_con = {{&partial, s_partial}};
    CHECK_THROWS_AS(grouped_report(no_con, ReportGroup::Constraints), EmptyGroup);
    CHECK_THROWS_AS(grouped_report({}, ReportGroup::All), EmptyGroup);
}

TEST_CASE("report group names", "[metrics]") {
    CHECK(std::string(report_group_name(ReportGroup::All)) == "all");
    CHECK(std::string(report_group_name(ReportGroup::Roi)) == "roi");
    CHECK(std::string(report_group_name(ReportGroup::NonRoi)) == "non-roi");
    CHECK(std::string(report_group_name(ReportGroup::FullRoi)) == "full-roi");
    CHECK(std::string(report_group_name(ReportGroup::Constraints)) == "constraints");
}

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "ctxcast/task.hpp"
#include "helpers.hpp"

using namespace ctxcast;
using testutil::ts;

TEST_CASE("timestamp parse/format round trip", "[task]") {
    const char* good[] = {"2024-01-01 00:00:00", "1999-12-31 23:59:59", "2024-02-29 12:30:45",
                          "2024-03-01 07:05:09"};
    for (const char* s : good) {
        auto t = Timestamp::parse(s);
        REQUIRE(t.has_value());
        CHECK(t->str() == s);
    }
}

TEST_CASE("timestamp rejects malformed text", "[task]") {
    const char* bad[] = {
        "2024-3-01 12:30:45",   // narrow month
        "2024-13-01 00:00:00",  // month out of range
        "2023-02-29 00:00:00",  // not a leap year
        "2024-01-01T00:00:00",  // wrong separator
        "2024-01-01 24:00:00",  // hour out of range
        "2024-01-01 00:00:0",   // too short
        "2024-01-01 00:00:000", // too long
        "abcd-01-01 00:00:00",
        "",
    };
    for (const char* s : bad) {
        INFO(s);
        CHECK_FALSE(Timestamp::parse(s).has_value());
    }
    CHECK_THROWS_AS(Timestamp::parse_or_throw("nope"), Error);
}

TEST_CASE("timestamp ordering and hour arithmetic", "[task]") {
    auto a = ts("2024-01-31 23:00:00");
    auto b = a.plus_hours(2);
    CHECK(b.str() == "2024-02-01 01:00:00");
    CHECK(a < b);
    CHECK(a.plus_hours(0) == a);
    CHECK(b.plus_hours(-2) == a);
    CHECK(a.plus_seconds(3600) == a.plus_hours(1));
}

TEST_CASE("validate_task accepts the fixture and flags each invariant", "[task]") {
    CHECK(validate_task(testutil::small_task()).empty());
    CHECK(validate_task(testutil::plain_task()).empty());

    auto expect_msg = [](const TaskInstance& t, const std::string& needle) {
        auto v = validate_task(t);
        REQUIRE_FALSE(v.empty());
        bool found = false;
        for (const auto& m : v) found = found || m.find(needle) != std::string::npos;
        INFO("wanted '" << needle << "', got '" << v.front() << "'");
        CHECK(found);
    };

    auto t = testutil::small_task();
    t.id.clear();
    expect_msg(t, "id empty");

    t = testutil::small_task();
    std::swap(t.history[2], t.history[3]);
    expect_msg(t, "history ordering");

    t = testutil::small_task();
    std::swap(t.pred_timestamps[0], t.pred_timestamps[1]);
    expect_msg(t, "prediction ordering");

    t = testutil::small_task();
    t.pred_timestamps[0] = t.history.back().first;
    expect_msg(t, "start after the last history timestamp");

    t = testutil::small_task();
    t.pred_timestamps.clear();
    expect_msg(t, "prediction window empty");

    t = testutil::small_task();
    t.future.pop_back();
    expect_msg(t, "future length differs");

    t = testutil::small_task();
    t.history[1].second = std::nan("");
    expect_msg(t, "history contains non-finite");

    t = testutil::small_task();
    t.future[0] = std::numeric_limits<double>::infinity();
    expect_msg(t, "future contains non-finite");

    t = testutil::small_task();
    t.roi = std::vector<int>{};
    expect_msg(t, "roi present but empty");

    t = testutil::small_task();
    t.roi = std::vector<int>{4};
    expect_msg(t, "roi index out of range");

    t = testutil::small_task();
    t.roi = std::vector<int>{-1};
    expect_msg(t, "roi index out of range");

    t = testutil::small_task();
    t.roi = std::vector<int>{1, 1};
    expect_msg(t, "roi index repeated");

    t = testutil::small_task();
    t.constraint = ConstraintSpec{5.0, 2.0};
    expect_msg(t, "lower exceeds upper");

    t = testutil::small_task();
    t.alpha_override = 0.0;
    expect_msg(t, "alpha override must be positive");
}

TEST_CASE("partial_roi distinguishes proper subsets", "[task]") {
    auto t = testutil::small_task();
    CHECK(t.partial_roi());
    t.roi = std::vector<int>{0, 1, 2, 3};
    CHECK_FALSE(t.partial_roi());
    t.roi.reset();
    CHECK_FALSE(t.partial_roi());
}

TEST_CASE("task json round trip preserves every field", "[task]") {
    auto t = testutil::small_task();
    t.constraint = ConstraintSpec{0.0, 50.0};
    t.alpha_override = 0.5;
    t.context.constraints_text = "Values stay within the meter range.";
    auto j = task_to_json(t);
    auto back = task_from_json(j);
    CHECK(task_to_json(back) == j);
    CHECK(back.id == t.id);
    CHECK(back.future == t.future);
    CHECK(back.roi == t.roi);
    REQUIRE(back.constraint.has_value());
    CHECK(back.constraint->lower == t.constraint->lower);
    CHECK(back.constraint->upper == t.constraint->upper);
    CHECK(back.pred_timestamps == t.pred_timestamps);
    CHECK(back.history == t.history);
}

TEST_CASE("task json treats null and absent optionals alike", "[task]") {
    auto j = task_to_json(testutil::plain_task());
    CHECK(j.at("roi").is_null());
    CHECK(j.at("bounds").is_null());
    CHECK(j.at("scenario").is_null());
    auto back = task_from_json(j);
    CHECK_FALSE(back.roi.has_value());
    CHECK_FALSE(back.constraint.has_value());
    CHECK_FALSE(back.alpha_override.has_value());
}

TEST_CASE("load_tasks round trips a file and enforces invariants", "[task]") {
    auto dir = testutil::tmp_dir();
    auto path = (dir / "tasks.jsonl").string();

    TaskSet set;
    set.tasks.push_back(testutil::small_task("a"));
    set.tasks.push_back(testutil::plain_task("b"));
    write_tasks(set, path);
    auto loaded = load_tasks(path);
    REQUIRE(loaded.tasks.size() == 2);
    CHECK(task_to_json(loaded.tasks[0]) == task_to_json(set.tasks[0]));
    CHECK(task_to_json(loaded.tasks[1]) == task_to_json(set.tasks[1]));
    CHECK(loaded.find("b") != nullptr);
    CHECK(loaded.find("zzz") == nullptr);

    SECTION("blank lines are skipped") {
        testutil::spit(dir / "blank.jsonl", "\n  \t\n" + task_to_json(testutil::small_task()).dump() + "\n\n");
        CHECK(load_tasks((dir / "blank.jsonl").string()).tasks.size() == 1);
    }
    SECTION("duplicate id") {
        set.tasks[1] = testutil::small_task("a");
        write_tasks(set, path);
        CHECK_THROWS_AS(load_tasks(path), DuplicateId);
    }
    SECTION("malformed json reports the line number") {
        testutil::spit(dir / "bad.jsonl",
                       task_to_json(testutil::small_task()).dump() + "\n{not json\n");
        try {
            load_tasks((dir / "bad.jsonl").string());
            FAIL("expected MalformedLine");
        } catch (const MalformedLine& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SECTION("invariant violation names the task") {
        auto t = testutil::small_task("broken");
        t.future.pop_back();
        testutil::spit(dir / "inv.jsonl", task_to_json(t).dump() + "\n");
        try {
            load_tasks((dir / "inv.jsonl").string());
            FAIL("expected InvariantViolation");
        } catch (const InvariantViolation& e) {
            CHECK(std::string(e.what()).find("broken") != std::string::npos);
        }
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_tasks((dir / "does-not-exist.jsonl").string()), Error);
    }
}

TEST_CASE("synth_task is deterministic and well formed", "[task]") {
    const Archetype all[] = {Archetype::SpikeMultiplier, Archetype::ZeroOutage,
                             Archetype::Bounded, Archetype::AdditiveTrendRemoval};
    for (auto a : all) {
        for (std::int64_t seed : {1, 7, 123}) {
            auto t = synth_task(a, seed, 24);
            auto u = synth_task(a, seed, 24);
            INFO(t.id);
            CHECK(task_to_json(t) == task_to_json(u));
            CHECK(validate_task(t).empty());
            CHECK(t.history.size() == static_cast<std::size_t>(kSynthHistoryHours));
            CHECK(t.pred_timestamps.size() == 24);
            CHECK(t.future.size() == 24);
            CHECK(t.id == std::string(archetype_name(a)) + "-" + std::to_string(seed) + "-24");
            for (const auto& [when, v] : t.history) {
                CHECK(std::abs(v * 100.0 - std::round(v * 100.0)) < 1e-6);
                CHECK(std::abs(v) < 1000.0);
            }
        }
        CHECK(synth_task(a, 5, 24).id != synth_task(a, 6, 24).id);
        CHECK_THROWS_AS(synth_task(a, 1, 1), Error);
    }
}

TEST_CASE("synth archetypes reshape a shared base series", "[task]") {
    for (std::int64_t seed : {2, 11, 42}) {
        const int horizon = 24;
        auto spike = synth_task(Archetype::SpikeMultiplier, seed, horizon);
        auto outage = synth_task(Archetype::ZeroOutage, seed, horizon);
        auto bounded = synth_task(Archetype::Bounded, seed, horizon);
        auto trend = synth_task(Archetype::AdditiveTrendRemoval, seed, horizon);

        // trend-removal leaves the future untouched, so it carries the base series
        REQUIRE(spike.roi.has_value());
        REQUIRE(outage.roi.has_value());
        CHECK(spike.roi == outage.roi);
        CHECK(spike.roi->size() == static_cast<std::size_t>(std::max(1, horizon / 4)));
        for (std::size_t i = 1; i < spike.roi->size(); ++i)
            CHECK((*spike.roi)[i] == (*spike.roi)[i - 1] + 1);

        std::vector<bool> in_roi(horizon, false);
        for (int i : *spike.roi) in_roi[static_cast<std::size_t>(i)] = true;
        for (int i = 0; i < horizon; ++i) {
            if (in_roi[static_cast<std::size_t>(i)]) {
                CHECK(spike.future[i] == kSpikeMultiplier * trend.future[i]);
                CHECK(outage.future[i] == 0.0);
            } else {
                CHECK(spike.future[i] == trend.future[i]);
                CHECK(outage.future[i] == trend.future[i]);
            }
        }

        REQUIRE(bounded.constraint.has_value());
        REQUIRE(bounded.constraint->upper.has_value());
        CHECK_FALSE(bounded.constraint->lower.has_value());
        CHECK_FALSE(bounded.roi.has_value());
        const double upper = *bounded.constraint->upper;
        for (int i = 0; i < horizon; ++i) {
            CHECK(bounded.future[i] <= upper);
            CHECK(bounded.future[i] == std::min(trend.future[i], upper));
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", upper);
        REQUIRE(bounded.context.constraints_text.has_value());
        CHECK(bounded.context.constraints_text->find(buf) != std::string::npos);

        // the sensor-error trend is added to history only
        for (std::size_t i = 0; i < trend.history.size(); ++i) {
            const double expect = std::round((spike.history[i].second +
                                              kTrendPerHour * static_cast<double>(i + 1)) *
                                             100.0) /
                                  100.0;
            CHECK(trend.history[i].second == expect);
        }

        for (const auto* t : {&spike, &outage, &trend})
            REQUIRE(t->context.scenario.has_value());
        CHECK(spike.context.scenario->find("4 times") != std::string::npos);
        CHECK(outage.context.scenario->find("zero readings") != std::string::npos);
        CHECK(trend.context.scenario->find("additive trend") != std::string::npos);
    }
}

TEST_CASE("archetype names round trip", "[task]") {
    const Archetype all[] = {Archetype::SpikeMultiplier, Archetype::ZeroOutage,
                             Archetype::Bounded, Archetype::AdditiveTrendRemoval};
    for (auto a : all) {
        auto back = archetype_from_name(archetype_name(a));
        REQUIRE(back.has_value());
        CHECK(*back == a);
    }
    CHECK_FALSE(archetype_from_name("unknown").has_value());
}

// Command-line harness: generate synthetic tasks, run prompting strategies
// against a chat-completions endpoint, score the results, build reports,
// and drive the routing simulator.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ctxcast/client.hpp"
#include "ctxcast/errors.hpp"
#include "ctxcast/forecasters.hpp"
#include "ctxcast/metrics.hpp"
#include "ctxcast/mock.hpp"
#include "ctxcast/parse.hpp"
#include "ctxcast/prompts.hpp"
#include "ctxcast/reasoning.hpp"
#include "ctxcast/records.hpp"
#include "ctxcast/routing.hpp"
#include "ctxcast/strategies.hpp"
#include "ctxcast/task.hpp"

namespace fs = std::filesystem;
using namespace ctxcast;

namespace {

constexpr int kExitUsage = 2;

struct ClientFlags {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "LLM_API_KEY";
    double temperature = 1.0;
    int max_retries = 15;
    int parallel = 4;
    long timeout_ms = 30000;
};

void add_client_flags(CLI::App* cmd, ClientFlags& f) {
    cmd->add_option("--endpoint", f.endpoint,
                    "Endpoint base URL, or mock:echo / mock:judge-yes for built-in offline "
                    "endpoints")
        ->required();
    cmd->add_option("--model", f.model, "Model name sent to the endpoint")->required();
    cmd->add_option("--temperature", f.temperature, "Sampling temperature")
        ->capture_default_str();
    cmd->add_option("--max-retries", f.max_retries,
                    "Format-validation retries per sample (beyond the first attempt)")
        ->capture_default_str();
    cmd->add_option("--parallel", f.parallel, "Concurrent requests")->capture_default_str();
    cmd->add_option("--timeout-ms", f.timeout_ms, "HTTP timeout in milliseconds")
        ->capture_default_str();
    cmd->add_option("--api-key-env", f.api_key_env,
                    "Environment variable holding the bearer token")
        ->capture_default_str();
}

EndpointConfig make_config(const ClientFlags& f) {
    EndpointConfig cfg;
    cfg.base_url = f.endpoint;
    cfg.model = f.model;
    cfg.api_key_env = f.api_key_env;
    cfg.temperature = f.temperature;
    cfg.max_retries = f.max_retries;
    cfg.parallel = f.parallel;
    cfg.timeout = std::chrono::milliseconds(f.timeout_ms);
    return cfg;
}

/// Rulebook for mock:judge-yes — canned gold traces and an always-YES
/// verdict, so the judge pipeline runs offline.
std::vector<MockRule> judge_yes_rulebook() {
    MockRule verdict;
    verdict.matcher = "Ground Truth Reasoning:";
    verdict.responses = {"<answer>YES</answer>"};
    MockRule gold;
    gold.matcher = "concise reasoning trace";
    gold.responses = {"<reason>Follow the context.</reason>"};
    return {verdict, gold};
}

ChatClient make_client(const ClientFlags& f, const TaskSet* tasks_for_echo) {
    EndpointConfig cfg = make_config(f);
    if (f.endpoint == "mock:echo") {
        if (!tasks_for_echo) throw Error("mock:echo endpoint needs a task file");
        return ChatClient(std::make_shared<MockBackend>(echo_oracle(*tasks_for_echo)), cfg);
    }
    if (f.endpoint == "mock:judge-yes")
        return ChatClient(std::make_shared<MockBackend>(judge_yes_rulebook()), cfg);
    return ChatClient(cfg);
}

nlohmann::json endpoint_snapshot(const ClientFlags& f) {
    nlohmann::json j;
    j["base_url"] = f.endpoint;
    j["model"] = f.model;
    j["temperature"] = f.temperature;
    j["max_retries"] = f.max_retries;
    j["parallel"] = f.parallel;
    j["api_key_env"] = f.api_key_env;
    return j;
}

int usage_error(const std::string& msg) {
    std::cerr << "error: " << msg << "\nRun with --help for usage.\n";
    return kExitUsage;
}

ScoreRecord make_score_record(const TaskInstance& task, const ScoreBreakdown& b,
                              const std::string& model, const std::string& strategy) {
    ScoreRecord r;
    r.task_id = task.id;
    r.total = b.total;
    r.roi_term = b.roi_term;
    r.non_roi_term = b.non_roi_term;
    r.constraint_term = b.constraint_term;
    r.alpha = b.alpha_used;
    r.model = model;
    r.strategy = strategy;
    r.partial_roi = task.partial_roi();
    r.has_constraint = task.constraint.has_value();
    return r;
}

// ====== run ======

struct RunFlags {
    std::string strategy;
    std::string tasks_path;
    ClientFlags client;
    int samples = 25;
    std::uint64_t seed = 0;
    bool no_context = false;
    std::string base_forecasts_path;
    std::string base_kind;
    int base_period = 24;
    int base_order = 3;
    std::string icdp_examples_path;
    double beta = 10.0;
    std::string out_dir;
    bool keep_going = false;
};

int cmd_run(const RunFlags& f) {
    const auto strategy = strategy_from_name(f.strategy);
    if (f.no_context && f.strategy != "dp")
        return usage_error("--no-context only applies to --strategy dp");
    const bool is_cordp =
        *strategy == Strategy::CORDP_MEDIAN || *strategy == Strategy::CORDP_SAMPLEWISE;
    if (is_cordp && f.base_forecasts_path.empty() && f.base_kind.empty())
        return usage_error("correction strategies need --base-forecasts or --base");
    if (!f.base_forecasts_path.empty() && !f.base_kind.empty())
        return usage_error("--base-forecasts and --base are mutually exclusive");
    if (*strategy == Strategy::ICDP && f.icdp_examples_path.empty())
        return usage_error("icdp needs --icdp-examples");

    RunManifest manifest;
    manifest.command = "run";
    manifest.endpoint = endpoint_snapshot(f.client);
    manifest.endpoint["samples"] = f.samples;
    manifest.seed = f.seed;
    manifest.started = utc_now();
    manifest.task_file_digest = file_digest(f.tasks_path);

    const TaskSet tasks = load_tasks(f.tasks_path);
    if (tasks.tasks.empty()) throw EmptyInput();
    const ChatClient client = make_client(f.client, &tasks);

    std::map<std::string, BaseForecast> external_bases;
    if (!f.base_forecasts_path.empty()) external_bases = load_base_forecasts(f.base_forecasts_path);

    std::map<std::string, std::string> example_of;
    if (*strategy == Strategy::ICDP) {
        std::ifstream in(f.icdp_examples_path);
        if (!in) throw Error("cannot open: " + f.icdp_examples_path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                example_of[j.at("task_id").get<std::string>()] =
                    j.at("example_id").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw MalformedLine(lineno, e.what());
            }
        }
    }

    auto base_for = [&](const TaskInstance& task) -> BaseForecast {
        if (!f.base_forecasts_path.empty()) {
            const auto it = external_bases.find(task.id);
            if (it == external_bases.end())
                throw TaskSetMismatch("no base forecast for task " + task.id);
            return it->second;
        }
        std::vector<double> history;
        history.reserve(task.history.size());
        for (const auto& [ts, v] : task.history) history.push_back(v);
        const std::uint64_t seed = f.seed ^ fnv1a64(task.id);
        const int horizon = static_cast<int>(task.horizon());
        if (f.base_kind == "seasonal-naive")
            return seasonal_naive(history, f.base_period, horizon, f.samples, seed);
        return autoregressive(history, f.base_order, horizon, f.samples, seed);
    };

    const std::string recorded_strategy =
        (*strategy == Strategy::DP && f.no_context) ? strategy_name(Strategy::DP_NO_CONTEXT)
                                                    : strategy_name(*strategy);
    MetricConfig metric_cfg;
    metric_cfg.beta = f.beta;

    struct Outcome {
        bool done = false;
        bool ok = false;
        std::string error;
        ResultRecord result;
        ScoreRecord score;
    };
    const int n = static_cast<int>(tasks.tasks.size());
    std::vector<Outcome> outcomes(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    std::atomic<bool> cancel{false};
    std::mutex mu;
    std::condition_variable cv;

    auto process = [&](const TaskInstance& task) {
        StrategyRun run;
        switch (*strategy) {
            case Strategy::DP:
            case Strategy::DP_NO_CONTEXT:
                run = run_dp(task, client, f.samples, !f.no_context);
                break;
            case Strategy::REDP:
                run = run_redp(task, client, f.samples);
                break;
            case Strategy::CORDP_MEDIAN:
                run = run_cordp_median(task, base_for(task), f.samples, client);
                break;
            case Strategy::CORDP_SAMPLEWISE:
                run = run_cordp_samplewise(task, base_for(task), client);
                break;
            case Strategy::ICDP: {
                const auto it = example_of.find(task.id);
                if (it == example_of.end())
                    throw TaskSetMismatch("no in-context example mapped for task " + task.id);
                const TaskInstance* ex = tasks.find(it->second);
                if (!ex) throw TaskSetMismatch("example task not in task set: " + it->second);
                run = run_icdp(task, *ex, client, f.samples);
                break;
            }
        }
        Outcome o;
        o.ok = true;
        o.result.task_id = task.id;
        o.result.strategy = recorded_strategy;
        o.result.model = f.client.model;
        o.result.samples = run.forecast.samples;
        o.result.traces = run.traces;
        o.result.attempts_used = run.attempts_used;
        o.score = make_score_record(task, rcrps(run.forecast, task, metric_cfg), f.client.model,
                                    recorded_strategy);
        return o;
    };

    auto worker = [&]() {
        while (!cancel.load(std::memory_order_relaxed)) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            Outcome o;
            try {
                o = process(tasks.tasks[static_cast<std::size_t>(i)]);
            } catch (const std::exception& e) {
                o.ok = false;
                o.error = e.what();
                if (!f.keep_going) cancel.store(true);
            }
            o.done = true;
            {
                std::lock_guard<std::mutex> lock(mu);
                outcomes[static_cast<std::size_t>(i)] = std::move(o);
            }
            cv.notify_all();
        }
    };

    fs::create_directories(f.out_dir);
    const auto results_path = (fs::path(f.out_dir) / "results.jsonl").string();
    const auto scores_path = (fs::path(f.out_dir) / "scores.jsonl").string();
    std::ofstream results_out(results_path);
    std::ofstream scores_out(scores_path);
    if (!results_out || !scores_out) throw Error("cannot open output files in " + f.out_dir);

    const int workers = std::max(1, std::min(f.client.parallel, n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);

    // single ordered writer: records land in task order regardless of
    // which worker finishes first
    int failures = 0;
    for (int i = 0; i < n; ++i) {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return outcomes[static_cast<std::size_t>(i)].done; });
        const Outcome& o = outcomes[static_cast<std::size_t>(i)];
        if (o.ok) {
            results_out << result_to_json(o.result).dump() << "\n";
            scores_out << score_to_json(o.score).dump() << "\n";
        } else {
            ++failures;
            std::cerr << "task " << tasks.tasks[static_cast<std::size_t>(i)].id
                      << " failed: " << o.error << "\n";
            if (!f.keep_going) {
                lock.unlock();
                for (auto& t : pool) t.join();
                return 1;
            }
        }
    }
    for (auto& t : pool) t.join();
    results_out.close();
    scores_out.close();

    manifest.strategy = recorded_strategy;
    manifest.finished = utc_now();
    write_manifest(manifest, (fs::path(f.out_dir) / "manifest.json").string());
    std::cout << "wrote " << (n - failures) << " results to " << results_path << "\n";
    if (failures > 0) std::cout << failures << " task(s) failed\n";
    return 0;
}

// ====== score ======

struct ScoreFlags {
    std::string results_path;
    std::string tasks_path;
    double beta = 10.0;
    std::string out_path;
};

int cmd_score(const ScoreFlags& f) {
    const auto results = load_results(f.results_path);
    const TaskSet tasks = load_tasks(f.tasks_path);
    MetricConfig cfg;
    cfg.beta = f.beta;

    std::vector<ScoreRecord> scores;
    scores.reserve(results.size());
    for (const auto& r : results) {
        const TaskInstance* task = tasks.find(r.task_id);
        if (!task) throw TaskSetMismatch("result references unknown task " + r.task_id);
        ForecastDistribution d;
        d.samples = r.samples;
        d.timestamps = task->pred_timestamps;
        for (const auto& row : d.samples)
            if (row.size() != task->pred_timestamps.size())
                throw TimestampMismatch("sample width " + std::to_string(row.size()) +
                                        " vs horizon " +
                                        std::to_string(task->pred_timestamps.size()) +
                                        " for task " + r.task_id);
        scores.push_back(make_score_record(*task, rcrps(d, *task, cfg), r.model, r.strategy));
    }
    write_scores(scores, f.out_path);

    RunManifest manifest;
    manifest.command = "score";
    manifest.endpoint = nullptr;
    manifest.task_file_digest = file_digest(f.tasks_path);
    manifest.started = manifest.finished = utc_now();
    write_manifest(manifest, f.out_path + ".manifest.json");
    std::cout << "wrote " << scores.size() << " scores to " << f.out_path << "\n";
    return 0;
}

// ====== report ======

struct ReportFlags {
    std::vector<std::string> score_paths;
    std::string group = "all";
    std::string out_path;
};

int cmd_report(const ReportFlags& f) {
    std::vector<ScoreRecord> records;
    for (const auto& p : f.score_paths) {
        auto part = load_scores(p);
        records.insert(records.end(), part.begin(), part.end());
    }

    // group value extraction mirrors the library's grouped_report rules
    auto value_for = [&](const ScoreRecord& r) -> std::optional<double> {
        if (f.group == "all") return r.total;
        if (f.group == "roi") return r.partial_roi ? std::optional(2.0 * r.roi_term) : std::nullopt;
        if (f.group == "non-roi")
            return r.partial_roi ? std::optional(2.0 * r.non_roi_term) : std::nullopt;
        if (f.group == "full-roi") return !r.partial_roi ? std::optional(r.total) : std::nullopt;
        return r.has_constraint ? std::optional(r.constraint_term) : std::nullopt;  // constraints
    };

    std::map<std::pair<std::string, std::string>, std::vector<double>> by_model_strategy;
    for (const auto& r : records)
        if (const auto v = value_for(r)) by_model_strategy[{r.model, r.strategy}].push_back(*v);

    if (by_model_strategy.empty())
        throw EmptyGroup("no tasks admissible to group '" + f.group + "'");

    std::ofstream out(f.out_path);
    if (!out) throw Error("cannot open for writing: " + f.out_path);
    out << "model,strategy,group,n,mean,stderr\n";
    std::printf("%-24s %-18s %-12s %6s  %s\n", "model", "strategy", "group", "n",
                "score (mean \xC2\xB1 stderr)");
    char csv_mean[64], csv_err[64];
    for (const auto& [key, vals] : by_model_strategy) {
        const auto [mean, err] = aggregate(vals);
        std::snprintf(csv_mean, sizeof(csv_mean), "%.10g", mean);
        std::snprintf(csv_err, sizeof(csv_err), "%.10g", err);
        out << key.first << ',' << key.second << ',' << f.group << ',' << vals.size() << ','
            << csv_mean << ',' << csv_err << "\n";
        std::printf("%-24s %-18s %-12s %6zu  %.3f \xC2\xB1 %.3f\n", key.first.c_str(),
                    key.second.c_str(), f.group.c_str(), vals.size(), mean, err);
    }
    out.close();

    RunManifest manifest;
    manifest.command = "report";
    manifest.endpoint = nullptr;
    manifest.task_file_digest = file_digest(f.score_paths.front());
    manifest.started = manifest.finished = utc_now();
    write_manifest(manifest, f.out_path + ".manifest.json");
    return 0;
}

// ====== route ======

struct RouteFlags {
    std::string main_path;
    std::string large_path;
    std::string scores_path;
    int trials = 100;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int cmd_route(const RouteFlags& f) {
    const auto main_scores = load_scores(f.main_path);
    const auto large_scores = load_scores(f.large_path);
    const auto difficulty = load_difficulty_scores(f.scores_path);

    std::map<std::string, double> main_by_id, large_by_id, hard_by_id;
    for (const auto& r : main_scores) main_by_id[r.task_id] = r.total;
    for (const auto& r : large_scores) large_by_id[r.task_id] = r.total;
    for (const auto& s : difficulty) hard_by_id[s.task_id] = s.p_hard;

    auto ids_of = [](const auto& m) {
        std::set<std::string> ids;
        for (const auto& [id, v] : m) ids.insert(id);
        return ids;
    };
    const auto main_ids = ids_of(main_by_id);
    if (main_ids != ids_of(large_by_id) || main_ids != ids_of(hard_by_id))
        throw TaskSetMismatch("main, large, and difficulty files cover different task sets");

    RoutingInput input;
    std::vector<DifficultyScore> ordered_difficulty;
    for (const auto& id : main_ids) {
        input.task_ids.push_back(id);
        input.main_scores.push_back(main_by_id[id]);
        input.large_scores.push_back(large_by_id[id]);
        ordered_difficulty.push_back({id, hard_by_id[id]});
    }

    const auto router_curve = curve_for_order(input, router_order(ordered_difficulty));
    const auto ideal_curve = curve_for_order(input, ideal_order(input));
    const auto random = random_curves(input, f.trials, f.seed);
    const double captured = area_captured(router_curve, random.mean_curve, ideal_curve);

    fs::create_directories(f.out_dir);
    const auto csv_path = (fs::path(f.out_dir) / "curve.csv").string();
    std::ofstream out(csv_path);
    if (!out) throw Error("cannot open for writing: " + csv_path);
    write_curve_csv(out, router_curve, random, ideal_curve, captured);
    out.close();

    RunManifest manifest;
    manifest.command = "route";
    manifest.endpoint = nullptr;
    manifest.task_file_digest = file_digest(f.scores_path);
    manifest.seed = f.seed;
    manifest.started = manifest.finished = utc_now();
    write_manifest(manifest, (fs::path(f.out_dir) / "manifest.json").string());

    std::printf("area_captured = %.6f over %zu tasks\n", captured, input.size());
    return 0;
}

// ====== judge ======

struct JudgeFlags {
    std::string traces_path;
    std::string tasks_path;
    ClientFlags client;
    std::string gold_cache_path;
    std::string roi_with_path;
    std::string roi_without_path;
    double min_trace_rate = 0.75;
    std::string table_path;
    std::string out_path;
};

int cmd_judge(const JudgeFlags& f) {
    const auto results = load_results(f.traces_path);
    const TaskSet tasks = load_tasks(f.tasks_path);
    const ChatClient client = make_client(f.client, &tasks);

    std::map<std::string, double> roi_with, roi_without;
    if (!f.roi_with_path.empty())
        for (const auto& r : load_scores(f.roi_with_path)) roi_with[r.task_id] = 2.0 * r.roi_term;
    if (!f.roi_without_path.empty())
        for (const auto& r : load_scores(f.roi_without_path))
            roi_without[r.task_id] = 2.0 * r.roi_term;

    auto cache = f.gold_cache_path.empty() ? std::map<GoldKey, GoldEntry>{}
                                           : load_gold_cache(f.gold_cache_path);
    bool cache_dirty = false;

    std::vector<ReasoningRecord> records;
    int skipped_no_roi = 0;
    for (const auto& r : results) {
        const TaskInstance* task = tasks.find(r.task_id);
        if (!task) throw TaskSetMismatch("trace references unknown task " + r.task_id);
        if (!task->roi) {
            // the reasoning analysis is defined over tasks with a region
            // of interest
            ++skipped_no_roi;
            continue;
        }
        ReasoningRecord rec;
        rec.model = r.model;
        rec.task_id = r.task_id;
        if (roi_with.count(r.task_id)) rec.rcrps_roi_with_context = roi_with[r.task_id];
        if (roi_without.count(r.task_id)) rec.rcrps_roi_without_context = roi_without[r.task_id];
        rec.improved =
            improvement_flag(rec.rcrps_roi_with_context, rec.rcrps_roi_without_context);

        // only the first sample's trace is evaluated
        if (r.traces && !r.traces->empty() && !r.traces->front().empty()) {
            rec.trace = r.traces->front();
            const GoldKey key{r.task_id, f.client.model};
            auto it = cache.find(key);
            if (it == cache.end()) {
                GoldEntry e{r.task_id, f.client.model, generate_gold(*task, client), false};
                it = cache.emplace(key, std::move(e)).first;
                cache_dirty = true;
            }
            rec.judge_correct = judge_alignment(*rec.trace, it->second.gold, client);
        }
        records.push_back(std::move(rec));
    }

    if (!f.gold_cache_path.empty() && cache_dirty) write_gold_cache(cache, f.gold_cache_path);
    write_reasoning_records(records, f.out_path);

    if (!f.table_path.empty()) {
        const auto outcomes = joint_distribution(records, f.min_trace_rate);
        std::ofstream table_out(f.table_path);
        if (!table_out) throw Error("cannot open for writing: " + f.table_path);
        write_joint_csv(table_out, outcomes);
    }

    RunManifest manifest;
    manifest.command = "judge";
    manifest.endpoint = endpoint_snapshot(f.client);
    manifest.task_file_digest = file_digest(f.tasks_path);
    manifest.started = manifest.finished = utc_now();
    write_manifest(manifest, f.out_path + ".manifest.json");

    std::cout << "judged " << records.size() << " record(s)";
    if (skipped_no_roi > 0) std::cout << ", skipped " << skipped_no_roi << " without a region of interest";
    std::cout << "\n";
    return 0;
}

// ====== synth ======

struct SynthFlags {
    std::string archetype;
    int count = 10;
    std::uint64_t seed = 0;
    int horizon = 24;
    std::string out_path;
};

int cmd_synth(const SynthFlags& f) {
    TaskSet set;
    static constexpr Archetype kAll[] = {Archetype::SpikeMultiplier, Archetype::ZeroOutage,
                                         Archetype::Bounded, Archetype::AdditiveTrendRemoval};
    for (int i = 0; i < f.count; ++i) {
        Archetype a;
        if (f.archetype == "mixed") {
            a = kAll[i % 4];
        } else {
            a = *archetype_from_name(f.archetype);
        }
        set.tasks.push_back(
            synth_task(a, static_cast<std::int64_t>(f.seed) + i, f.horizon));
    }
    write_tasks(set, f.out_path);

    RunManifest manifest;
    manifest.command = "synth";
    manifest.endpoint = nullptr;
    manifest.seed = f.seed;
    manifest.task_file_digest = file_digest(f.out_path);
    manifest.started = manifest.finished = utc_now();
    write_manifest(manifest, f.out_path + ".manifest.json");
    std::cout << "wrote " << set.tasks.size() << " tasks to " << f.out_path << "\n";
    return 0;
}

// ====== difficulty ======

struct DifficultyFlags {
    std::string tasks_path;
    ClientFlags client;
    std::string out_path;
};

int cmd_difficulty(const DifficultyFlags& f) {
    const TaskSet tasks = load_tasks(f.tasks_path);
    const ChatClient client = make_client(f.client, &tasks);
    const auto scores = score_difficulty(tasks, client);
    write_difficulty_scores(scores, f.out_path);

    RunManifest manifest;
    manifest.command = "difficulty";
    manifest.endpoint = endpoint_snapshot(f.client);
    manifest.task_file_digest = file_digest(f.tasks_path);
    manifest.started = manifest.finished = utc_now();
    write_manifest(manifest, f.out_path + ".manifest.json");
    std::cout << "scored " << scores.size() << " task(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-aided forecasting harness for chat-completions endpoints"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run a prompting strategy over a task set");
    run->add_option("--strategy", run_flags.strategy, "Prompting strategy")
        ->required()
        ->check(CLI::IsMember({"dp", "redp", "cordp-median", "cordp-samplewise", "icdp"}));
    run->add_option("--tasks", run_flags.tasks_path, "Task JSONL file")->required();
    add_client_flags(run, run_flags.client);
    run->add_option("--samples", run_flags.samples, "Samples per task")->capture_default_str();
    run->add_option("--seed", run_flags.seed, "Seed for in-run base forecasters")
        ->capture_default_str();
    run->add_flag("--no-context", run_flags.no_context,
                  "Strip context from direct prompts (dp only)");
    run->add_option("--base-forecasts", run_flags.base_forecasts_path,
                    "Base forecast JSONL for correction strategies");
    run->add_option("--base", run_flags.base_kind, "In-run base forecaster")
        ->check(CLI::IsMember({"seasonal-naive", "ar"}));
    run->add_option("--base-period", run_flags.base_period, "Seasonal naive period")
        ->capture_default_str();
    run->add_option("--base-order", run_flags.base_order, "Autoregression order")
        ->capture_default_str();
    run->add_option("--icdp-examples", run_flags.icdp_examples_path,
                    "JSONL mapping {task_id, example_id}");
    run->add_option("--beta", run_flags.beta, "Constraint-violation weight")
        ->capture_default_str();
    run->add_option("--out", run_flags.out_dir, "Output directory")->required();
    run->add_flag("--keep-going", run_flags.keep_going, "Continue past task-level failures");

    ScoreFlags score_flags;
    auto* score = app.add_subcommand("score", "Score a results file against its tasks");
    score->add_option("--results", score_flags.results_path, "Results JSONL")->required();
    score->add_option("--tasks", score_flags.tasks_path, "Task JSONL file")->required();
    score->add_option("--beta", score_flags.beta, "Constraint-violation weight")
        ->capture_default_str();
    score->add_option("--out", score_flags.out_path, "Output score JSONL")->required();

    ReportFlags report_flags;
    auto* report = app.add_subcommand("report", "Aggregate score files into a table");
    report->add_option("--scores", report_flags.score_paths, "Score JSONL file(s)")
        ->required()
        ->expected(-1);
    report->add_option("--group", report_flags.group, "Task group to aggregate")
        ->check(CLI::IsMember({"all", "roi", "non-roi", "full-roi", "constraints"}))
        ->capture_default_str();
    report->add_option("--out", report_flags.out_path, "Output CSV")->required();

    RouteFlags route_flags;
    auto* route = app.add_subcommand("route", "Simulate difficulty-based model routing");
    route->add_option("--main", route_flags.main_path, "Score JSONL of the main model")
        ->required();
    route->add_option("--large", route_flags.large_path, "Score JSONL of the large model")
        ->required();
    route->add_option("--scores", route_flags.scores_path, "Difficulty JSONL {task_id, p_hard}")
        ->required();
    route->add_option("--trials", route_flags.trials, "Random assignment trials")
        ->capture_default_str();
    route->add_option("--seed", route_flags.seed, "Shuffle seed")->capture_default_str();
    route->add_option("--out", route_flags.out_dir, "Output directory")->required();

    JudgeFlags judge_flags;
    auto* judge = app.add_subcommand("judge", "Judge reasoning traces against gold traces");
    judge->add_option("--traces", judge_flags.traces_path, "Results JSONL with traces")
        ->required();
    judge->add_option("--tasks", judge_flags.tasks_path, "Task JSONL file")->required();
    add_client_flags(judge, judge_flags.client);
    judge->add_option("--gold-cache", judge_flags.gold_cache_path,
                      "Gold trace cache JSONL (read and extended)");
    judge->add_option("--roi-with", judge_flags.roi_with_path,
                      "Score JSONL of the traced run (with context)");
    judge->add_option("--roi-without", judge_flags.roi_without_path,
                      "Score JSONL of the matching no-context run");
    judge->add_option("--min-trace-rate", judge_flags.min_trace_rate,
                      "Trace-rate threshold below which a model is excluded")
        ->capture_default_str();
    judge->add_option("--table", judge_flags.table_path, "Joint distribution CSV output");
    judge->add_option("--out", judge_flags.out_path, "Reasoning record JSONL output")
        ->required();

    SynthFlags synth_flags;
    auto* synth = app.add_subcommand("synth", "Generate synthetic context-sensitive tasks");
    synth->add_option("--archetype", synth_flags.archetype, "Task archetype")
        ->required()
        ->check(CLI::IsMember({"spike-multiplier", "zero-outage", "bounded",
                               "additive-trend-removal", "mixed"}));
    synth->add_option("--count", synth_flags.count, "Number of tasks")->capture_default_str();
    synth->add_option("--seed", synth_flags.seed, "Base seed")->capture_default_str();
    synth->add_option("--horizon", synth_flags.horizon, "Forecast horizon (hours)")
        ->capture_default_str();
    synth->add_option("--out", synth_flags.out_path, "Output task JSONL")->required();

    DifficultyFlags difficulty_flags;
    auto* difficulty =
        app.add_subcommand("difficulty", "Score task difficulty via the router prompt");
    difficulty->add_option("--tasks", difficulty_flags.tasks_path, "Task JSONL file")->required();
    add_client_flags(difficulty, difficulty_flags.client);
    difficulty->add_option("--out", difficulty_flags.out_path, "Output JSONL {task_id, p_hard}")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (score->parsed()) return cmd_score(score_flags);
        if (report->parsed()) return cmd_report(report_flags);
        if (route->parsed()) return cmd_route(route_flags);
        if (judge->parsed()) return cmd_judge(judge_flags);
        if (synth->parsed()) return cmd_synth(synth_flags);
        if (difficulty->parsed()) return cmd_difficulty(difficulty_flags);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

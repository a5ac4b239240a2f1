#pragma once

/// @file mock.hpp
/// Scriptable chat backend for tests and offline runs: rulebooks of
/// prompt-matching rules, an echo oracle that answers any forecast prompt
/// with the task's true future, and an optional HTTP server speaking the
/// chat-completions wire format.

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ctxcast/client.hpp"
#include "ctxcast/errors.hpp"
#include "ctxcast/prompts.hpp"
#include "ctxcast/task.hpp"

namespace ctxcast {

/// One scripted behavior. The first rule whose matcher hits the prompt wins.
struct MockRule {
    std::string matcher;  // substring, or ECMAScript regex when is_regex
    bool is_regex = false;
    std::vector<std::string> responses;  // cycled when cycle, else consumed once
    bool cycle = true;
    std::map<std::string, double> logprob_table;  // first-position top logprobs
    int fail_first = 0;            // number of leading calls that fail
    bool fail_transport = false;   // failures are transport errors instead of bad text
    std::string fail_text = "(malformed)";
    std::function<std::string(const std::string& prompt, int index)> dynamic;
};

inline bool rule_matches(const MockRule& rule, const std::string& prompt) {
    if (rule.is_regex) return std::regex_search(prompt, std::regex(rule.matcher));
    return rule.matcher.empty() || prompt.find(rule.matcher) != std::string::npos;
}

namespace detail {

inline ChatOutcome respond_with_rule(const MockRule& rule, const std::string& prompt,
                                     int call_index) {
    ChatOutcome out;
    if (call_index < rule.fail_first) {
        if (rule.fail_transport)
            throw TransportError("scripted transport failure " +
                                 std::to_string(call_index + 1) + "/" +
                                 std::to_string(rule.fail_first));
        out.text = rule.fail_text;
    } else {
        const int idx = call_index - rule.fail_first;
        if (rule.dynamic) {
            out.text = rule.dynamic(prompt, idx);
        } else if (rule.responses.empty()) {
            throw MockExhausted("rule has no responses");
        } else if (!rule.cycle && idx >= static_cast<int>(rule.responses.size())) {
            throw MockExhausted("rule responses consumed after " +
                                std::to_string(rule.responses.size()) + " calls");
        } else {
            out.text = rule.responses[static_cast<std::size_t>(idx) % rule.responses.size()];
        }
    }
    if (!rule.logprob_table.empty()) {
        std::vector<TokenLogprob> lps;
        for (const auto& [token, logprob] : rule.logprob_table) lps.push_back({token, logprob});
        out.token_logprobs = std::move(lps);
    }
    return out;
}

}  // namespace detail

/// Resolve one call against a rulebook with a caller-managed per-rule call
/// index. Deterministic: same arguments, same outcome.
inline ChatOutcome respond(const std::vector<MockRule>& rulebook, const std::string& prompt,
                           int call_index) {
    for (const auto& rule : rulebook)
        if (rule_matches(rule, prompt)) return detail::respond_with_rule(rule, prompt, call_index);
    throw NoRuleMatched("no rule matched prompt (" + std::to_string(prompt.size()) + " bytes)");
}

/// In-process backend over a rulebook; tracks one call counter per rule.
class MockBackend final : public ChatBackend {
public:
    explicit MockBackend(std::vector<MockRule> rulebook)
        : rulebook_(std::move(rulebook)), counters_(rulebook_.size()) {
        for (auto& c : counters_) c = std::make_unique<std::atomic<int>>(0);
    }

    ChatOutcome complete(const ChatRequest& request) override {
        for (std::size_t i = 0; i < rulebook_.size(); ++i) {
            if (!rule_matches(rulebook_[i], request.prompt)) continue;
            const int k = counters_[i]->fetch_add(1);
            return detail::respond_with_rule(rulebook_[i], request.prompt, k);
        }
        throw NoRuleMatched("no rule matched prompt (" +
                            std::to_string(request.prompt.size()) + " bytes)");
    }

    int calls_to_rule(std::size_t i) const { return counters_.at(i)->load(); }
    long total_calls() const {
        long n = 0;
        for (const auto& c : counters_) n += c->load();
        return n;
    }

private:
    std::vector<MockRule> rulebook_;
    std::vector<std::unique_ptr<std::atomic<int>>> counters_;
};

/// Rulebook that answers any forecast-shaped prompt for the given tasks with
/// the task's exact future values. The prompt is attributed to the task
/// whose serialized history appears last in it, so prompts that embed a
/// solved example ahead of the real task resolve to the real task.
inline std::vector<MockRule> echo_oracle(const TaskSet& tasks,
                                         int precision = kDefaultPromptPrecision) {
    struct Entry {
        std::string history;
        std::string reply;
        std::string corrected_reply;
    };
    auto entries = std::make_shared<std::vector<Entry>>();
    std::map<std::string, std::string> seen;
    for (const auto& task : tasks.tasks) {
        Entry e;
        e.history = format_series(task.history, precision);
        if (auto it = seen.find(e.history); it != seen.end())
            throw AmbiguousHistory("tasks " + it->second + " and " + task.id +
                                   " serialize to the same history");
        seen.emplace(e.history, task.id);
        const std::string body = format_series(task.pred_timestamps, task.future, precision);
        e.reply = "<forecast>\n" + body + "\n</forecast>";
        e.corrected_reply = "<corrected_forecast>\n" + body + "\n</corrected_forecast>";
        entries->push_back(std::move(e));
    }

    MockRule rule;
    rule.matcher = "";
    rule.dynamic = [entries](const std::string& prompt, int) -> std::string {
        const Entry* best = nullptr;
        std::size_t best_pos = 0;
        for (const auto& e : *entries) {
            std::size_t pos = 0, last = std::string::npos;
            while ((pos = prompt.find(e.history, pos)) != std::string::npos) {
                last = pos;
                ++pos;
            }
            if (last != std::string::npos && (!best || last >= best_pos)) {
                best = &e;
                best_pos = last;
            }
        }
        if (!best) throw NoRuleMatched("echo oracle: no known history in prompt");
        const bool corrected = prompt.find("<corrected_forecast>") != std::string::npos;
        const bool reasoned = prompt.find("<reason>") != std::string::npos;
        std::string out = corrected ? best->corrected_reply : best->reply;
        if (reasoned && !corrected) out = "<reason>oracle</reason>\n" + out;
        return out;
    };
    return {rule};
}

/// Serves a rulebook over HTTP on 127.0.0.1 with the chat-completions wire
/// format, for exercising the real transport end to end.
class MockServer {
public:
    explicit MockServer(std::vector<MockRule> rulebook)
        : backend_(std::make_shared<MockBackend>(std::move(rulebook))) {
        server_.Post("/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         handle(req, res);
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    ~MockServer() { stop(); }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    int port() const { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    const MockBackend& backend() const { return *backend_; }

private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
            res.status = 400;
            res.set_content(std::string("bad request: ") + e.what(), "text/plain");
            return;
        }
        ChatRequest cr;
        cr.model = body.value("model", "");
        cr.want_logprobs = body.value("logprobs", false);
        try {
            const auto& messages = body.at("messages");
            cr.prompt = messages.at(messages.size() - 1).at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            res.status = 400;
            res.set_content(std::string("bad request: ") + e.what(), "text/plain");
            return;
        }

        ChatOutcome out;
        try {
            out = backend_->complete(cr);
        } catch (const Error& e) {
            res.status = 500;
            res.set_content(e.what(), "text/plain");
            return;
        }

        nlohmann::json logprobs = nullptr;
        if (cr.want_logprobs && out.token_logprobs && !out.token_logprobs->empty()) {
            nlohmann::json top = nlohmann::json::array();
            const TokenLogprob* argmax = &out.token_logprobs->front();
            for (const auto& lp : *out.token_logprobs) {
                top.push_back({{"token", lp.token}, {"logprob", lp.logprob}});
                if (lp.logprob > argmax->logprob) argmax = &lp;
            }
            logprobs = {{"content",
                         nlohmann::json::array({{{"token", argmax->token},
                                                 {"logprob", argmax->logprob},
                                                 {"top_logprobs", top}}})}};
        }
        const nlohmann::json reply = {
            {"id", "mock"},
            {"object", "chat.completion"},
            {"choices",
             nlohmann::json::array(
                 {{{"index", 0},
                   {"message", {{"role", "assistant"}, {"content", out.text}}},
                   {"logprobs", logprobs},
                   {"finish_reason", "stop"}}})},
            {"usage",
             {{"prompt_tokens", static_cast<long>(cr.prompt.size() / 4)},
              {"completion_tokens", static_cast<long>(out.text.size() / 4)}}}};
        res.set_content(reply.dump(), "application/json");
    }

    std::shared_ptr<MockBackend> backend_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace ctxcast

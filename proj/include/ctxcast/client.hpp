#pragma once

/// @file client.hpp
/// Chat-completions client: single-message completions against any
/// compatible endpoint, sampling with parse-validated retries, and a
/// choice-probability primitive (logprob renormalization with a
/// sampling-vote fallback) for difficulty routing.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ctxcast/errors.hpp"

namespace ctxcast {

struct EndpointConfig {
    std::string base_url;
    std::string model;
    std::string api_key_env = "LLM_API_KEY";
    double temperature = 1.0;
    int max_retries = 15;  // format-validation retries per sample, after the first attempt
    int parallel = 4;
    std::chrono::milliseconds timeout{30000};
    int transport_retries = 3;  // network retries, independent of max_retries
    std::chrono::milliseconds backoff_base{250};
    int vote_samples = 10;  // fallback sample count for choice_probability
    int top_logprobs = 20;
};

struct TokenLogprob {
    std::string token;
    double logprob;
};

struct ChatUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ChatOutcome {
    std::string text;
    std::optional<std::vector<TokenLogprob>> token_logprobs;
    std::optional<ChatUsage> usage;
};

struct ChatRequest {
    std::string model;
    std::string prompt;
    double temperature = 1.0;
    bool want_logprobs = false;
    int top_logprobs = 20;
};

/// Transport abstraction: one request, one completion. Implementations must
/// be safe to call from multiple threads.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatOutcome complete(const ChatRequest& request) = 0;
};

// ====== HTTP transport ======

/// Talks the chat-completions wire format over HTTP. A fresh connection per
/// request keeps the backend trivially thread-safe.
class HttpBackend final : public ChatBackend {
public:
    HttpBackend(std::string base_url, std::string api_key_env,
                std::chrono::milliseconds timeout)
        : api_key_env_(std::move(api_key_env)), timeout_(timeout) {
        auto rest = base_url;
        const auto scheme_end = rest.find("://");
        std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const auto path_start = rest.find('/', host_start);
        if (path_start == std::string::npos) {
            host_ = rest;
        } else {
            host_ = rest.substr(0, path_start);
            path_prefix_ = rest.substr(path_start);
            while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
        }
    }

    ChatOutcome complete(const ChatRequest& request) override {
        nlohmann::json body;
        body["model"] = request.model;
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
        body["temperature"] = request.temperature;
        if (request.want_logprobs) {
            body["logprobs"] = true;
            body["top_logprobs"] = request.top_logprobs;
        }

        httplib::Client cli(host_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        cli.set_connection_timeout(secs.count() ? secs.count() : 1, 0);
        cli.set_read_timeout(secs.count() ? secs.count() : 1, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(api_key_env_.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);

        auto res = cli.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                            "application/json");
        if (!res) {
            const auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write)
                throw TimeoutError("request timed out: " + httplib::to_string(err));
            throw TransportError("connection failed: " + httplib::to_string(err));
        }
        if (res->status == 401 || res->status == 403)
            throw AuthMissing("endpoint rejected credentials (HTTP " +
                              std::to_string(res->status) + "); set " + api_key_env_);
        if (res->status < 200 || res->status >= 300)
            throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("bad response body: ") + e.what());
        }
        return parse_wire(j);
    }

    static ChatOutcome parse_wire(const nlohmann::json& j) {
        ChatOutcome out;
        try {
            const auto& choice = j.at("choices").at(0);
            out.text = choice.at("message").at("content").get<std::string>();
            if (choice.contains("logprobs") && !choice.at("logprobs").is_null()) {
                const auto& content = choice.at("logprobs").at("content");
                if (content.is_array() && !content.empty()) {
                    std::vector<TokenLogprob> lps;
                    const auto& first = content.at(0);
                    if (first.contains("top_logprobs"))
                        for (const auto& e : first.at("top_logprobs"))
                            lps.push_back({e.at("token").get<std::string>(),
                                           e.at("logprob").get<double>()});
                    else
                        lps.push_back({first.at("token").get<std::string>(),
                                       first.at("logprob").get<double>()});
                    out.token_logprobs = std::move(lps);
                }
            }
            if (j.contains("usage") && j.at("usage").is_object()) {
                ChatUsage u;
                u.prompt_tokens = j.at("usage").value("prompt_tokens", 0L);
                u.completion_tokens = j.at("usage").value("completion_tokens", 0L);
                out.usage = u;
            }
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("unexpected response shape: ") + e.what());
        }
        return out;
    }

private:
    std::string host_;
    std::string path_prefix_;
    std::string api_key_env_;
    std::chrono::milliseconds timeout_;
};

// ====== client ======

namespace detail {

inline std::string normalize_choice_text(const std::string& s) {
    std::size_t b = 0, e = s.size();
    auto is_edge = [](unsigned char c) { return std::isspace(c) || std::ispunct(c); };
    while (b < e && is_edge(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_edge(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out = s.substr(b, e - b);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string first_word(const std::string& s) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    std::size_t e = b;
    while (e < s.size() && !std::isspace(static_cast<unsigned char>(s[e]))) ++e;
    return s.substr(b, e - b);
}

inline bool prefix_of(const std::string& a, const std::string& b) {
    return !a.empty() && b.rfind(a, 0) == 0;
}

/// Index of the single option the token speaks for, or -1 (no match or
/// ambiguous across options).
inline int match_option(const std::string& raw_token, const std::vector<std::string>& options) {
    const std::string tok = normalize_choice_text(raw_token);
    if (tok.empty()) return -1;
    int hit = -1;
    for (std::size_t i = 0; i < options.size(); ++i) {
        const std::string opt = normalize_choice_text(options[i]);
        if (prefix_of(tok, opt) || prefix_of(opt, tok)) {
            if (hit >= 0) return -1;
            hit = static_cast<int>(i);
        }
    }
    return hit;
}

}  // namespace detail

/// High-level client: owns the endpoint configuration and a shared backend.
class ChatClient {
public:
    ChatClient(std::shared_ptr<ChatBackend> backend, EndpointConfig config)
        : backend_(std::move(backend)), config_(std::move(config)) {}

    /// Convenience constructor for HTTP endpoints.
    explicit ChatClient(EndpointConfig config)
        : backend_(std::make_shared<HttpBackend>(config.base_url, config.api_key_env,
                                                 config.timeout)),
          config_(std::move(config)) {}

    const EndpointConfig& config() const { return config_; }

    /// One completion. Transport failures (including timeouts) are retried
    /// with exponential backoff up to config.transport_retries extra
    /// attempts; auth failures are not.
    ChatOutcome chat(const std::string& prompt, bool want_logprobs = false) const {
        ChatRequest req{config_.model, prompt, config_.temperature, want_logprobs,
                        config_.top_logprobs};
        return chat_request(req);
    }

    /// Collects n validator-passing completions. The validator receives the
    /// completion text and either returns the parsed value or throws; each
    /// sample has a budget of 1 + max_retries attempts. Samples are fetched
    /// concurrently up to config.parallel, and results keep sample order.
    /// total_attempts (optional) receives the number of completions issued.
    template <class Validator>
    auto sample_validated(const std::string& prompt, int n, Validator validator,
                          long* total_attempts = nullptr) const
        -> std::vector<decltype(validator(std::string{}))> {
        using Parsed = decltype(validator(std::string{}));
        if (n < 1) throw Error("sample_validated requires n >= 1");

        std::vector<std::optional<Parsed>> slots(static_cast<std::size_t>(n));
        std::atomic<int> next{0};
        std::atomic<long> attempts{0};
        std::atomic<bool> failed{false};
        std::exception_ptr first_error;
        std::mutex error_mu;

        auto worker = [&]() {
            while (!failed.load(std::memory_order_relaxed)) {
                const int idx = next.fetch_add(1);
                if (idx >= n) return;
                std::string last_error = "no attempt made";
                bool done = false;
                for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
                    if (failed.load(std::memory_order_relaxed)) return;
                    std::string text;
                    try {
                        text = chat(prompt, false).text;
                        attempts.fetch_add(1);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mu);
                        if (!first_error) first_error = std::current_exception();
                        failed.store(true);
                        return;
                    }
                    try {
                        slots[static_cast<std::size_t>(idx)] = validator(text);
                        done = true;
                        break;
                    } catch (const Error& e) {
                        last_error = e.what();
                    }
                }
                if (!done) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error)
                        first_error =
                            std::make_exception_ptr(RetriesExhausted(idx, last_error));
                    failed.store(true);
                    return;
                }
            }
        };

        const int workers = std::min(config_.parallel < 1 ? 1 : config_.parallel, n);
        if (workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(workers));
            for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        if (total_attempts) *total_attempts = attempts.load();
        if (first_error) std::rethrow_exception(first_error);

        std::vector<Parsed> out;
        out.reserve(static_cast<std::size_t>(n));
        for (auto& s : slots) out.push_back(std::move(*s));
        return out;
    }

    /// Probability distribution over the given options for the next answer.
    /// Prefers first-token logprobs renormalized over the options; falls
    /// back to config.vote_samples temperature-1 samples. Probabilities sum
    /// to 1 within 1e-9.
    std::map<std::string, double> choice_probability(
        const std::string& prompt, const std::vector<std::string>& options) const {
        {
            std::vector<std::string> distinct = options;
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            if (distinct.size() < 2)
                throw Error("choice_probability requires at least 2 distinct options");
        }

        const auto outcome = chat(prompt, true);
        std::vector<double> mass(options.size(), 0.0);
        double total = 0.0;
        if (outcome.token_logprobs && !outcome.token_logprobs->empty()) {
            for (const auto& [token, logprob] : *outcome.token_logprobs) {
                const int hit = detail::match_option(token, options);
                if (hit >= 0) {
                    mass[static_cast<std::size_t>(hit)] += std::exp(logprob);
                    total += std::exp(logprob);
                }
            }
        }
        if (total <= 0.0) {
            // vote fallback: independent temperature-1 samples
            std::vector<long> votes(options.size(), 0);
            long counted = 0;
            ChatRequest req{config_.model, prompt, 1.0, false, config_.top_logprobs};
            for (int i = 0; i < config_.vote_samples; ++i) {
                const auto vote = chat_request(req);
                const int hit = detail::match_option(detail::first_word(vote.text), options);
                if (hit >= 0) {
                    ++votes[static_cast<std::size_t>(hit)];
                    ++counted;
                }
            }
            if (counted == 0)
                throw NoSignal("no logprob mass and no sampled vote matched any option");
            for (std::size_t i = 0; i < options.size(); ++i)
                mass[i] = static_cast<double>(votes[i]);
            total = static_cast<double>(counted);
        }

        std::map<std::string, double> out;
        for (std::size_t i = 0; i < options.size(); ++i) out[options[i]] = mass[i] / total;
        return out;
    }

private:
    ChatOutcome chat_request(const ChatRequest& req) const {
        for (int attempt = 0;; ++attempt) {
            try {
                return backend_->complete(req);
            } catch (const AuthMissing&) {
                throw;
            } catch (const TransportError&) {
                if (attempt >= config_.transport_retries) throw;
            } catch (const TimeoutError&) {
                if (attempt >= config_.transport_retries) throw;
            }
            if (config_.backoff_base.count() > 0)
                std::this_thread::sleep_for(config_.backoff_base * (1 << attempt));
        }
    }

    std::shared_ptr<ChatBackend> backend_;
    EndpointConfig config_;
};

}  // namespace ctxcast

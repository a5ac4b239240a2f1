#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <memory>

#include "ctxcast/client.hpp"
#include "ctxcast/mock.hpp"
#include "helpers.hpp"

using namespace ctxcast;
using Catch::Approx;

namespace {

EndpointConfig mock_config() {
    EndpointConfig cfg;
    cfg.base_url = "mock:";
    cfg.model = "mock-model";
    cfg.parallel = 1;
    cfg.backoff_base = std::chrono::milliseconds(0);
    return cfg;
}

ChatClient client_over(std::vector<MockRule> rules, EndpointConfig cfg = mock_config()) {
    return ChatClient(std::make_shared<MockBackend>(std::move(rules)), std::move(cfg));
}

std::string require_good(const std::string& text) {
    if (text != "good") throw Error("not good: " + text);
    return text;
}

}  // namespace

TEST_CASE("sample_validated collects n results in sample order", "[client]") {
    MockRule rule;
    rule.responses = {"r0", "r1", "r2", "r3", "r4"};
    rule.cycle = false;
    auto client = client_over({rule});
    long attempts = 0;
    auto out = client.sample_validated(
        "p", 5, [](const std::string& t) { return t; }, &attempts);
    CHECK(out == std::vector<std::string>{"r0", "r1", "r2", "r3", "r4"});
    CHECK(attempts == 5);
    CHECK_THROWS_AS(client.sample_validated("p", 0, [](const std::string& t) { return t; }),
                    Error);
}

TEST_CASE("sample_validated retry budget is 1 + max_retries", "[client]") {
    SECTION("15 bad completions then a good one succeed with 16 attempts") {
        MockRule rule;
        rule.fail_first = 15;
        rule.responses = {"good"};
        auto client = client_over({rule});
        long attempts = 0;
        auto out = client.sample_validated("p", 1, require_good, &attempts);
        REQUIRE(out.size() == 1);
        CHECK(out[0] == "good");
        CHECK(attempts == 16);
    }
    SECTION("16 bad completions exhaust the budget") {
        MockRule rule;
        rule.fail_first = 16;
        rule.responses = {"good"};
        auto client = client_over({rule});
        try {
            client.sample_validated("p", 1, require_good);
            FAIL("expected RetriesExhausted");
        } catch (const RetriesExhausted& e) {
            CHECK(e.sample_index == 0);
            CHECK(e.last_error.find("not good") != std::string::npos);
            CHECK(std::string(e.what()).find("sample 0") != std::string::npos);
        }
    }
    SECTION("a smaller budget is honored") {
        MockRule rule;
        rule.fail_first = 3;
        rule.responses = {"good"};
        auto cfg = mock_config();
        cfg.max_retries = 2;
        CHECK_THROWS_AS(client_over({rule}, cfg).sample_validated("p", 1, require_good),
                        RetriesExhausted);
        auto cfg2 = mock_config();
        cfg2.max_retries = 3;
        long attempts = 0;
        auto out = client_over({rule}, cfg2).sample_validated("p", 1, require_good, &attempts);
        CHECK(out[0] == "good");
        CHECK(attempts == 4);
    }
}

TEST_CASE("sample_validated runs workers in parallel and keeps slots", "[client]") {
    MockRule rule;
    rule.responses = {"good"};
    auto cfg = mock_config();
    cfg.parallel = 4;
    auto client = client_over({rule}, cfg);
    long attempts = 0;
    auto out = client.sample_validated("p", 16, require_good, &attempts);
    CHECK(out.size() == 16);
    CHECK(attempts == 16);
    for (const auto& s : out) CHECK(s == "good");
}

TEST_CASE("transport failures retry with their own budget", "[client]") {
    SECTION("failures within transport_retries are absorbed") {
        MockRule rule;
        rule.fail_first = 3;
        rule.fail_transport = true;
        rule.responses = {"good"};
        auto cfg = mock_config();
        cfg.transport_retries = 3;
        auto client = client_over({rule}, cfg);
        long attempts = 0;
        auto out = client.sample_validated("p", 1, require_good, &attempts);
        CHECK(out[0] == "good");
        // transport failures are not validation attempts
        CHECK(attempts == 1);
    }
    SECTION("failures beyond transport_retries propagate") {
        MockRule rule;
        rule.fail_first = 4;
        rule.fail_transport = true;
        rule.responses = {"good"};
        auto cfg = mock_config();
        cfg.transport_retries = 3;
        CHECK_THROWS_AS(client_over({rule}, cfg).chat("p"), TransportError);
        CHECK_THROWS_AS(client_over({rule}, cfg).sample_validated(
                            "p", 1, [](const std::string& t) { return t; }),
                        TransportError);
    }
}

namespace {

class AuthFailBackend final : public ChatBackend {
public:
    ChatOutcome complete(const ChatRequest&) override {
        calls.fetch_add(1);
        throw AuthMissing("credentials rejected");
    }
    std::atomic<int> calls{0};
};

}  // namespace

TEST_CASE("auth failures are never retried", "[client]") {
    auto backend = std::make_shared<AuthFailBackend>();
    auto cfg = mock_config();
    cfg.transport_retries = 5;
    ChatClient client(backend, cfg);
    CHECK_THROWS_AS(client.chat("p"), AuthMissing);
    CHECK(backend->calls.load() == 1);
}

TEST_CASE("choice_probability renormalizes first-token logprobs", "[client]") {
    MockRule rule;
    rule.responses = {"hard"};
    rule.logprob_table = {{" hard", std::log(0.6)},
                          {" easy", std::log(0.2)},
                          {"other", std::log(0.1)}};
    auto client = client_over({rule});
    auto p = client.choice_probability("rate it", {"easy", "hard"});
    CHECK(p.at("hard") == Approx(0.75).epsilon(1e-9));
    CHECK(p.at("easy") == Approx(0.25).epsilon(1e-9));
    CHECK(p.at("hard") + p.at("easy") == Approx(1.0).margin(1e-9));
}

TEST_CASE("choice_probability matches tokens by prefix either way", "[client]") {
    MockRule rule;
    rule.responses = {"hard"};
    rule.logprob_table = {{"ha", std::log(0.5)}, {"Easy.", std::log(0.5)}};
    auto client = client_over({rule});
    auto p = client.choice_probability("rate it", {"easy", "hard"});
    CHECK(p.at("hard") == Approx(0.5).epsilon(1e-9));
    CHECK(p.at("easy") == Approx(0.5).epsilon(1e-9));
}

TEST_CASE("choice_probability falls back to sampled votes", "[client]") {
    SECTION("7 of 10 votes for hard") {
        MockRule rule;
        rule.responses = {"hard", "hard", "easy", "hard", "hard",
                          "easy", "hard", "hard", "hard", "easy"};
        auto client = client_over({rule});
        auto p = client.choice_probability("rate it", {"easy", "hard"});
        CHECK(p.at("hard") == Approx(0.7).epsilon(1e-9));
        CHECK(p.at("easy") == Approx(0.3).epsilon(1e-9));
    }
    SECTION("unmatched votes are dropped from the denominator") {
        MockRule rule;
        rule.responses = {"hard指", "banana"};
        rule.responses[0] = "hard";
        auto client = client_over({rule});
        auto p = client.choice_probability("rate it", {"easy", "hard"});
        CHECK(p.at("hard") == Approx(1.0).epsilon(1e-9));
        CHECK(p.at("easy") == 0.0);
    }
    SECTION("an ambiguous logprob token contributes nothing") {
        MockRule rule;
        rule.responses = {"high"};
        rule.logprob_table = {{"hi", std::log(0.9)}};
        auto client = client_over({rule});
        auto p = client.choice_probability("rate it", {"high", "hike"});
        CHECK(p.at("high") == Approx(1.0).epsilon(1e-9));
    }
    SECTION("no matching vote raises NoSignal") {
        MockRule rule;
        rule.responses = {"banana"};
        auto client = client_over({rule});
        CHECK_THROWS_AS(client.choice_probability("rate it", {"easy", "hard"}), NoSignal);
    }
}

TEST_CASE("choice_probability requires two distinct options", "[client]") {
    MockRule rule;
    rule.responses = {"x"};
    auto client = client_over({rule});
    CHECK_THROWS_AS(client.choice_probability("p", {"easy", "easy"}), Error);
    CHECK_THROWS_AS(client.choice_probability("p", {"easy"}), Error);
    CHECK_THROWS_AS(client.choice_probability("p", {}), Error);
}

TEST_CASE("http backend round trips against the wire server", "[client]") {
    MockRule pong;
    pong.matcher = "ping";
    pong.responses = {"pong"};
    MockRule rate;
    rate.matcher = "rate";
    rate.responses = {"hard"};
    rate.logprob_table = {{" hard", std::log(0.8)}, {" easy", std::log(0.2)}};
    MockServer server({pong, rate});

    EndpointConfig cfg;
    cfg.base_url = server.base_url();
    cfg.model = "wire-model";
    cfg.transport_retries = 0;
    cfg.parallel = 1;
    cfg.backoff_base = std::chrono::milliseconds(0);
    ChatClient client(cfg);

    SECTION("plain text completion with usage") {
        auto out = client.chat("ping");
        CHECK(out.text == "pong");
        REQUIRE(out.usage.has_value());
        CHECK_FALSE(out.token_logprobs.has_value());
    }
    SECTION("logprobs travel over the wire") {
        auto out = client.chat("rate this", true);
        CHECK(out.text == "hard");
        REQUIRE(out.token_logprobs.has_value());
        CHECK(out.token_logprobs->size() == 2);
        auto p = client.choice_probability("rate this", {"easy", "hard"});
        CHECK(p.at("hard") == Approx(0.8).epsilon(1e-9));
    }
    SECTION("a trailing slash in the base url is harmless") {
        auto cfg2 = cfg;
        cfg2.base_url = server.base_url() + "/";
        CHECK(ChatClient(cfg2).chat("ping").text == "pong");
    }
    SECTION("unmatched prompts surface the server error") {
        try {
            client.chat("nothing matches this");
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(std::string(e.what()).find("HTTP 500") != std::string::npos);
        }
    }
}

TEST_CASE("connection failures raise TransportError", "[client]") {
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:1";
    cfg.model = "m";
    cfg.transport_retries = 0;
    cfg.backoff_base = std::chrono::milliseconds(0);
    cfg.timeout = std::chrono::milliseconds(1000);
    ChatClient client(cfg);
    CHECK_THROWS_AS(client.chat("p"), Error);
}

TEST_CASE("parse_wire reads the completion shape", "[client]") {
    auto j = nlohmann::json::parse(R"({
        "choices": [{"message": {"role": "assistant", "content": "hello"}}]
    })");
    auto out = HttpBackend::parse_wire(j);
    CHECK(out.text == "hello");
    CHECK_FALSE(out.token_logprobs.has_value());
    CHECK_FALSE(out.usage.has_value());

    auto lj = nlohmann::json::parse(R"({
        "choices": [{
            "message": {"content": "hi"},
            "logprobs": {"content": [{"token": "hi", "logprob": -0.1,
                "top_logprobs": [{"token": "hi", "logprob": -0.1},
                                  {"token": "yo", "logprob": -2.5}]}]}
        }],
        "usage": {"prompt_tokens": 7, "completion_tokens": 2}
    })");
    auto lout = HttpBackend::parse_wire(lj);
    REQUIRE(lout.token_logprobs.has_value());
    CHECK(lout.token_logprobs->size() == 2);
    CHECK((*lout.token_logprobs)[1].token == "yo");
    REQUIRE(lout.usage.has_value());
    CHECK(lout.usage->prompt_tokens == 7);

    CHECK_THROWS_AS(HttpBackend::parse_wire(nlohmann::json::parse(R"({"choices": []})")),
                    TransportError);
    CHECK_THROWS_AS(HttpBackend::parse_wire(nlohmann::json::parse(R"({"nope": 1})")),
                    TransportError);
}

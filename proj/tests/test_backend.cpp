#include <atomic>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "triage/backend.hpp"
#include "triage/errors.hpp"

using namespace triage;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    auto dir = fs::temp_directory_path() / "triage-backend-tests";
    fs::create_directories(dir);
    return (dir / name).string();
}

// Minimal chat-completions stub. Each instance owns a port and records the
// request bodies it saw.
class StubServer {
  public:
    StubServer() {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         const int n = ++requests_;
                         bodies_.push_back(req.body);
                         auth_.push_back(req.get_header_value("Authorization"));
                         if (n <= fail_first_) {
                             res.status = 503;
                             res.set_content("overloaded", "text/plain");
                             return;
                         }
                         nlohmann::json choice;
                         choice["message"]["content"] = reply_text_;
                         choice["finish_reason"] = finish_reason_;
                         nlohmann::json reply;
                         reply["choices"] = nlohmann::json::array({choice});
                         reply["usage"]["completion_tokens"] = reply_tokens_;
                         res.set_content(reply.dump(), "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    ModelEndpoint endpoint() const {
        ModelEndpoint e;
        e.base_url = "http://127.0.0.1:" + std::to_string(port_);
        e.model_id = "stub-model";
        e.max_retries = 3;
        e.retry_backoff_ms = 1;
        return e;
    }

    void set_reply(const std::string& text, std::int64_t tokens,
                   const std::string& finish = "stop") {
        reply_text_ = text;
        reply_tokens_ = tokens;
        finish_reason_ = finish;
    }
    void fail_first(int n) { fail_first_ = n; }

    int requests() const { return requests_; }
    const std::vector<std::string>& bodies() const { return bodies_; }
    const std::vector<std::string>& auth_headers() const { return auth_; }

  private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> requests_{0};
    int fail_first_ = 0;
    std::string reply_text_ = "42";
    std::int64_t reply_tokens_ = 7;
    std::string finish_reason_ = "stop";
    std::vector<std::string> bodies_;
    std::vector<std::string> auth_;
};

}  // namespace

TEST_CASE("cache keys are injective under field punctuation") {
    auto a = make_cache_key("m|1", Mode::Standard, "p", "plan", 5);
    auto b = make_cache_key("m", Mode::Standard, "1|p", "plan", 5);
    CHECK(a != b);
    CHECK(make_cache_key("m", Mode::Standard, "p", "plan", 5) !=
          make_cache_key("m", Mode::ExtendedReasoning, "p", "plan", 5));
    CHECK(make_cache_key("m", Mode::Standard, "p", "plan", 5) !=
          make_cache_key("m", Mode::Standard, "p", "plan", 50));
}

TEST_CASE("normalize_answer trims, folds case, strips trailing punctuation") {
    CHECK(normalize_answer("  The Answer.  ") == "the answer");
    CHECK(normalize_answer("42.") == "42");
    CHECK(normalize_answer("x = 7!?") == "x = 7");
    CHECK(normalize_answer("   ") == "");
}

TEST_CASE("exact grader with integer equivalence") {
    Grader g;
    g.answer_key = "042";
    CHECK(grade(g, "42"));
    CHECK(grade(g, " 42.\n"));
    CHECK_FALSE(grade(g, "43"));
    g.answer_key = "Paris";
    CHECK(grade(g, "paris."));
    CHECK_FALSE(grade(g, "paris, france"));
}

TEST_CASE("multiple-choice grader reads the last standalone letter") {
    Grader g;
    g.kind = GraderKind::MultipleChoiceLetter;
    g.answer_key = "B";
    CHECK(grade(g, "Reasoning... the answer is B"));
    CHECK(grade(g, "Answer: (b)"));
    CHECK_FALSE(grade(g, "B is tempting but the answer is C"));
    CHECK_FALSE(grade(g, "no letter here 123"));
    g.answer_key = "";
    CHECK_THROWS_AS(grade(g, "B"), GraderError);
}

TEST_CASE("external grader uses the exit status") {
    Grader g;
    g.kind = GraderKind::ExternalCommand;
    g.command = "grep 42 > /dev/null 2>&1";
    CHECK(grade(g, "the answer is 42"));
    CHECK_FALSE(grade(g, "the answer is 43"));
}

TEST_CASE("record cache persists and refuses duplicate keys") {
    const std::string path = temp_path("cache-roundtrip.jsonl");
    std::remove(path.c_str());
    {
        RecordCache cache(path);
        CHECK(cache.size() == 0);
        CompletionRecord r;
        r.cache_key = "k1";
        r.response_text = "hello\nworld";
        r.output_tokens = 11;
        r.finish_reason = FinishReason::Length;
        cache.append(r);
        CHECK_THROWS_AS(cache.append(r), ConfigError);
    }
    RecordCache reopened(path);
    REQUIRE(reopened.size() == 1);
    const CompletionRecord* hit = reopened.find("k1");
    REQUIRE(hit != nullptr);
    CHECK(hit->response_text == "hello\nworld");
    CHECK(hit->output_tokens == 11);
    CHECK(hit->finish_reason == FinishReason::Length);
    CHECK(reopened.find("k2") == nullptr);
}

TEST_CASE("request_completion parses the chat response") {
    StubServer server;
    server.set_reply("the answer is 7", 21);
    auto record = request_completion(server.endpoint(), "what is 3+4?", 64, "key");
    CHECK(record.response_text == "the answer is 7");
    CHECK(record.output_tokens == 21);
    CHECK(record.finish_reason == FinishReason::Stop);

    auto body = nlohmann::json::parse(server.bodies().at(0));
    CHECK(body["model"] == "stub-model");
    CHECK(body["temperature"] == 0);
    CHECK(body["max_tokens"] == 64);
    CHECK(body["messages"][0]["content"] == "what is 3+4?");
    CHECK_FALSE(body.contains("reasoning"));
}

TEST_CASE("extended mode requests reasoning") {
    StubServer server;
    auto endpoint = server.endpoint();
    endpoint.mode = Mode::ExtendedReasoning;
    request_completion(endpoint, "p", 10, "key");
    auto body = nlohmann::json::parse(server.bodies().at(0));
    CHECK(body["reasoning"]["enabled"] == true);
}

TEST_CASE("bearer auth comes from the configured env var") {
    StubServer server;
    auto endpoint = server.endpoint();
    endpoint.api_key_env = "TRIAGE_TEST_KEY";
    setenv("TRIAGE_TEST_KEY", "sk-test-123", 1);
    request_completion(endpoint, "p", 10, "key");
    unsetenv("TRIAGE_TEST_KEY");
    CHECK(server.auth_headers().at(0) == "Bearer sk-test-123");
}

TEST_CASE("5xx responses are retried, then succeed") {
    StubServer server;
    server.fail_first(2);
    server.set_reply("ok", 1);
    auto record = request_completion(server.endpoint(), "p", 10, "key");
    CHECK(record.response_text == "ok");
    CHECK(server.requests() == 3);
}

TEST_CASE("retries exhaust into TransportError") {
    StubServer server;
    server.fail_first(100);
    CHECK_THROWS_AS(request_completion(server.endpoint(), "p", 10, "key"),
                    TransportError);
    CHECK(server.requests() == 4);  // initial attempt + 3 retries
}

TEST_CASE("a dead endpoint raises TransportError") {
    ModelEndpoint endpoint;
    endpoint.base_url = "http://127.0.0.1:9";  // discard port, nothing listens
    endpoint.model_id = "m";
    endpoint.max_retries = 0;
    endpoint.request_timeout_sec = 1;
    CHECK_THROWS_AS(request_completion(endpoint, "p", 10, "k"), TransportError);
}

TEST_CASE("solve_baseline measures once then replays from cache") {
    StubServer server;
    server.set_reply("42", 33);
    const std::string path = temp_path("cache-baseline.jsonl");
    std::remove(path.c_str());
    RecordCache cache(path);

    Problem problem;
    problem.id = "p7";
    problem.text = "what is six times seven?";
    Grader grader;
    grader.answer_key = "42";

    auto first = solve_baseline(server.endpoint(), problem, grader, cache);
    CHECK(first.solvable);
    CHECK(first.cost == 33);
    CHECK(first.provenance == Provenance::Measured);
    CHECK_FALSE(first.response_digest.empty());

    auto second = solve_baseline(server.endpoint(), problem, grader, cache);
    CHECK(second.provenance == Provenance::Replayed);
    CHECK(second.cost == first.cost);
    CHECK(second.response_digest == first.response_digest);
    CHECK(server.requests() == 1);
}

TEST_CASE("zero-token baselines clamp cost to 1") {
    StubServer server;
    server.set_reply("", 0);
    const std::string path = temp_path("cache-clamp.jsonl");
    std::remove(path.c_str());
    RecordCache cache(path);
    Problem problem;
    problem.id = "p0";
    problem.text = "t";
    Grader grader;
    grader.answer_key = "x";
    auto truth = solve_baseline(server.endpoint(), problem, grader, cache);
    CHECK(truth.cost == 1);
    CHECK_FALSE(truth.solvable);
}

TEST_CASE("request_plan caches on the prompt, not the pool") {
    StubServer server;
    server.set_reply(R"({"plan":[]})", 5);
    const std::string path = temp_path("cache-plan.jsonl");
    std::remove(path.c_str());
    RecordCache cache(path);
    auto endpoint = server.endpoint();
    CHECK(request_plan(endpoint, "prompt one", cache) == R"({"plan":[]})");
    request_plan(endpoint, "prompt one", cache);
    CHECK(server.requests() == 1);
    request_plan(endpoint, "prompt two", cache);
    CHECK(server.requests() == 2);
}

TEST_CASE("live enforced runs send the cap and zero truncated responses") {
    StubServer server;
    const std::string path = temp_path("cache-enforced.jsonl");
    std::remove(path.c_str());
    RecordCache cache(path);
    Problem problem;
    problem.id = "p1";
    problem.text = "t";
    Grader grader;
    grader.answer_key = "42";

    server.set_reply("42", 9, "stop");
    auto ok = execute_live_enforced(server.endpoint(), problem, 128, grader, cache);
    CHECK(ok.scored == 1);
    auto body = nlohmann::json::parse(server.bodies().at(0));
    CHECK(body["max_tokens"] == 128);

    server.set_reply("42 but cut o", 64, "length");
    auto cut = execute_live_enforced(server.endpoint(), problem, 64, grader, cache);
    CHECK(cut.scored == 0);

    CHECK_THROWS_AS(
        execute_live_enforced(server.endpoint(), problem, 0, grader, cache),
        ConfigError);
}

TEST_CASE("budget banner states the allocation") {
    auto banner = budget_banner(350);
    CHECK(banner.find("strict output-token budget of 350 tokens") !=
          std::string::npos);
}

TEST_CASE("budget-aware re-solve states the limit but keeps the provider cap") {
    StubServer server;
    server.set_reply("final answer: 42", 310);
    const std::string path = temp_path("cache-aware.jsonl");
    std::remove(path.c_str());
    RecordCache cache(path);
    Problem problem;
    problem.id = "p1";
    problem.text = "solve it";
    Grader grader;
    grader.kind = GraderKind::MultipleChoiceLetter;
    grader.answer_key = "B";
    grader.kind = GraderKind::ExactMatchNormalized;
    grader.answer_key = "final answer: 42";

    auto result =
        budget_aware_resolve(server.endpoint(), problem, 350, grader, cache);
    CHECK(result.correct);
    CHECK(result.output_tokens == 310);

    auto body = nlohmann::json::parse(server.bodies().at(0));
    const std::string prompt = body["messages"][0]["content"];
    CHECK(prompt.find("budget of 350 tokens") != std::string::npos);
    CHECK(prompt.find("solve it") != std::string::npos);
    CHECK(body["max_tokens"] == server.endpoint().max_output_tokens);

    CHECK_THROWS_AS(
        budget_aware_resolve(server.endpoint(), problem, 0, grader, cache),
        ConfigError);
}

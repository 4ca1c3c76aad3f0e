#include "triage/backend.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "triage/errors.hpp"
#include "triage/rng.hpp"

namespace triage {

using ojson = nlohmann::ordered_json;

std::string to_string(Mode m) {
    return m == Mode::Standard ? "standard" : "extended-reasoning";
}

Mode mode_from_string(const std::string& s) {
    if (s == "standard") return Mode::Standard;
    if (s == "extended-reasoning" || s == "extended") return Mode::ExtendedReasoning;
    throw ConfigError("unknown mode: " + s);
}

std::string to_string(FinishReason r) {
    switch (r) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Other: return "other";
    }
    return "other";
}

FinishReason finish_reason_from_string(const std::string& s) {
    if (s == "stop" || s == "end_turn") return FinishReason::Stop;
    if (s == "length" || s == "max_tokens") return FinishReason::Length;
    return FinishReason::Other;
}

namespace {

std::string escape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '|' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace

std::string make_cache_key(const std::string& model_id, Mode mode,
                           const std::string& problem_id,
                           const std::string& phase, std::int64_t cap) {
    return escape_field(model_id) + "|" + to_string(mode) + "|" +
           escape_field(problem_id) + "|" + escape_field(phase) + "|" +
           std::to_string(cap);
}

// --- cache ---

RecordCache::RecordCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;  // fresh store
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ojson j = ojson::parse(line);
        CompletionRecord r;
        r.cache_key = j.at("cache_key").get<std::string>();
        r.response_text = j.at("response_text").get<std::string>();
        r.output_tokens = j.at("output_tokens").get<std::int64_t>();
        r.finish_reason =
            finish_reason_from_string(j.at("finish_reason").get<std::string>());
        r.created_at = j.value("created_at", std::string());
        records_.emplace(r.cache_key, std::move(r));
    }
}

const CompletionRecord* RecordCache::find(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = records_.find(key);
    return it == records_.end() ? nullptr : &it->second;
}

void RecordCache::append(const CompletionRecord& record) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (records_.count(record.cache_key))
        throw ConfigError("cache key already present: " + record.cache_key);
    ojson j;
    j["cache_key"] = record.cache_key;
    j["response_text"] = record.response_text;
    j["output_tokens"] = record.output_tokens;
    j["finish_reason"] = to_string(record.finish_reason);
    j["created_at"] = record.created_at;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to cache " + path_);
    out << j.dump() << "\n";
    out.flush();
    records_.emplace(record.cache_key, record);
}

// --- graders ---

std::string normalize_answer(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(a, b - a + 1);
    while (!out.empty()) {
        char c = out.back();
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?')
            out.pop_back();
        else
            break;
    }
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

namespace {

bool parse_integer(const std::string& s, long long& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtoll(s.c_str(), &end, 10);
    return errno == 0 && end != s.c_str() && *end == '\0';
}

bool grade_exact(const std::string& response, const std::string& key) {
    const std::string r = normalize_answer(response);
    const std::string k = normalize_answer(key);
    long long ri, ki;
    if (parse_integer(r, ri) && parse_integer(k, ki)) return ri == ki;
    return r == k;
}

// last standalone letter in the response is taken as the final answer
bool grade_letter(const std::string& response, const std::string& key) {
    if (key.empty()) throw GraderError("multiple-choice grader needs a key letter");
    char want = static_cast<char>(std::toupper(static_cast<unsigned char>(key[0])));
    for (std::size_t i = response.size(); i > 0; --i) {
        std::size_t pos = i - 1;
        unsigned char c = static_cast<unsigned char>(response[pos]);
        if (!std::isalpha(c)) continue;
        bool left_ok = pos == 0 ||
                       !std::isalnum(static_cast<unsigned char>(response[pos - 1]));
        bool right_ok = pos + 1 == response.size() ||
                        !std::isalnum(static_cast<unsigned char>(response[pos + 1]));
        if (left_ok && right_ok)
            return static_cast<char>(std::toupper(c)) == want;
    }
    return false;
}

bool grade_external(const std::string& command, const std::string& response) {
    FILE* pipe = popen(command.c_str(), "w");
    if (pipe == nullptr) throw GraderError("cannot spawn grader: " + command);
    std::fwrite(response.data(), 1, response.size(), pipe);
    int status = pclose(pipe);
    if (status < 0) throw GraderError("grader wait failed: " + command);
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

}  // namespace

bool grade(const Grader& grader, const std::string& response_text) {
    switch (grader.kind) {
        case GraderKind::ExactMatchNormalized:
            return grade_exact(response_text, grader.answer_key);
        case GraderKind::MultipleChoiceLetter:
            return grade_letter(response_text, grader.answer_key);
        case GraderKind::ExternalCommand:
            return grade_external(grader.command, response_text);
    }
    throw GraderError("unknown grader kind");
}

// --- transport ---

CompletionRecord request_completion(const ModelEndpoint& endpoint,
                                    const std::string& prompt,
                                    std::int64_t max_tokens,
                                    const std::string& cache_key) {
    ojson body;
    body["model"] = endpoint.model_id;
    body["messages"] = ojson::array({ojson{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = 0;
    body["max_tokens"] = max_tokens;
    if (endpoint.mode == Mode::ExtendedReasoning)
        body["reasoning"] = ojson{{"enabled", true}};

    httplib::Client client(endpoint.base_url);
    client.set_read_timeout(endpoint.request_timeout_sec, 0);
    client.set_connection_timeout(endpoint.request_timeout_sec, 0);
    httplib::Headers headers;
    if (!endpoint.api_key_env.empty()) {
        const char* key = std::getenv(endpoint.api_key_env.c_str());
        if (key != nullptr && *key != '\0')
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(
                endpoint.retry_backoff_ms * (1 << (attempt - 1))));
        }
        auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                               "application/json");
        if (!res) {
            last_error = "connection failure to " + endpoint.base_url;
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("completion request rejected with status " +
                                 std::to_string(res->status));
        ojson reply = ojson::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") ||
            reply["choices"].empty())
            throw TransportError("malformed completion response");
        const auto& choice = reply["choices"][0];
        CompletionRecord record;
        record.cache_key = cache_key;
        record.response_text =
            choice.contains("message")
                ? choice["message"].value("content", std::string())
                : choice.value("text", std::string());
        record.finish_reason = finish_reason_from_string(
            choice.value("finish_reason", std::string("other")));
        if (reply.contains("usage")) {
            const auto& usage = reply["usage"];
            if (usage.contains("completion_tokens"))
                record.output_tokens = usage["completion_tokens"].get<std::int64_t>();
            else if (usage.contains("output_tokens"))
                record.output_tokens = usage["output_tokens"].get<std::int64_t>();
        }
        record.created_at = iso_now();
        return record;
    }
    throw TransportError("completion failed after " +
                         std::to_string(endpoint.max_retries + 1) +
                         " attempts: " + last_error);
}

namespace {

CompletionRecord cached_completion(const ModelEndpoint& endpoint,
                                   const std::string& prompt,
                                   std::int64_t max_tokens,
                                   const std::string& key, RecordCache& cache,
                                   bool* replayed = nullptr) {
    if (const CompletionRecord* hit = cache.find(key)) {
        if (replayed) *replayed = true;
        return *hit;
    }
    CompletionRecord record = request_completion(endpoint, prompt, max_tokens, key);
    cache.append(record);
    if (replayed) *replayed = false;
    return record;
}

}  // namespace

GroundTruth solve_baseline(const ModelEndpoint& endpoint, const Problem& problem,
                           const Grader& grader, RecordCache& cache) {
    const std::string key =
        make_cache_key(endpoint.model_id, endpoint.mode, problem.id, "baseline",
                       endpoint.max_output_tokens);
    bool replayed = false;
    CompletionRecord record = cached_completion(
        endpoint, problem.text, endpoint.max_output_tokens, key, cache, &replayed);

    GroundTruth truth;
    truth.problem_id = problem.id;
    truth.solvable = grade(grader, record.response_text);
    truth.cost = record.output_tokens;
    if (truth.cost < 1) {
        std::cerr << "warning: zero-token baseline response for " << problem.id
                  << "; clamping cost to 1\n";
        truth.cost = 1;
    }
    truth.provenance = replayed ? Provenance::Replayed : Provenance::Measured;
    truth.response_digest = fnv1a64_hex(record.response_text);
    return truth;
}

std::string request_plan(const ModelEndpoint& endpoint, const std::string& prompt,
                         RecordCache& cache) {
    const std::string key =
        make_cache_key(endpoint.model_id, endpoint.mode, fnv1a64_hex(prompt),
                       "plan", endpoint.max_output_tokens);
    return cached_completion(endpoint, prompt, endpoint.max_output_tokens, key,
                             cache)
        .response_text;
}

LiveEnforcedResult execute_live_enforced(const ModelEndpoint& endpoint,
                                         const Problem& problem, std::int64_t cap,
                                         const Grader& grader, RecordCache& cache) {
    if (cap < 1) throw ConfigError("enforced cap must be >= 1");
    const std::string key = make_cache_key(endpoint.model_id, endpoint.mode,
                                           problem.id, "enforced", cap);
    LiveEnforcedResult result;
    result.record = cached_completion(endpoint, problem.text, cap, key, cache);
    if (result.record.finish_reason == FinishReason::Length)
        result.scored = 0;  // truncated attempts never score
    else
        result.scored = grade(grader, result.record.response_text) ? 1 : 0;
    return result;
}

std::string budget_banner(std::int64_t a) {
    return "You have a strict output-token budget of " + std::to_string(a) +
           " tokens for solving this problem, including any reasoning, drafts, "
           "or scratch work you produce. Plan your solution to fit within this "
           "limit. Be concise, skip unnecessary explanation, and commit to your "
           "final answer before exhausting the budget.";
}

BudgetAwareResult budget_aware_resolve(const ModelEndpoint& endpoint,
                                       const Problem& problem, std::int64_t a,
                                       const Grader& grader, RecordCache& cache) {
    if (a < 1) throw ConfigError("budget-aware re-solve needs a > 0");
    const std::string key = make_cache_key(endpoint.model_id, endpoint.mode,
                                           problem.id, "budget-aware", a);
    const std::string prompt = budget_banner(a) + "\n\n" + problem.text;
    // provider cap stays at the baseline setting; the stated limit is
    // self-imposed
    CompletionRecord record = cached_completion(
        endpoint, prompt, endpoint.max_output_tokens, key, cache);
    BudgetAwareResult result;
    result.correct = grade(grader, record.response_text);
    result.output_tokens = record.output_tokens;
    return result;
}

}  // namespace triage

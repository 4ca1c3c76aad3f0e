#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "triage/pool.hpp"

namespace triage {

enum class Mode { Standard, ExtendedReasoning };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct ModelEndpoint {
    std::string base_url;   // e.g. http://localhost:8000
    std::string model_id;
    Mode mode = Mode::Standard;
    std::string api_key_env;  // name of the env var holding the key
    std::int64_t max_output_tokens = 8192;
    int request_timeout_sec = 120;
    int max_retries = 3;
    int retry_backoff_ms = 250;
};

enum class FinishReason { Stop, Length, Other };

std::string to_string(FinishReason r);
FinishReason finish_reason_from_string(const std::string& s);

struct CompletionRecord {
    std::string cache_key;
    std::string response_text;
    std::int64_t output_tokens = 0;
    FinishReason finish_reason = FinishReason::Stop;
    std::string created_at;
};

// Injective over its fields: the key is the escaped field join, so two
// distinct tuples can never collide.
std::string make_cache_key(const std::string& model_id, Mode mode,
                           const std::string& problem_id,
                           const std::string& phase, std::int64_t cap);

// Append-only JSON-lines store, one CompletionRecord per line. A record is
// never overwritten; appending an existing key is rejected. One writer,
// any number of readers.
class RecordCache {
  public:
    explicit RecordCache(std::string path);

    const CompletionRecord* find(const std::string& key) const;
    void append(const CompletionRecord& record);
    std::size_t size() const { return records_.size(); }
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::unordered_map<std::string, CompletionRecord> records_;
    mutable std::mutex mutex_;
};

enum class GraderKind { ExactMatchNormalized, MultipleChoiceLetter, ExternalCommand };

struct Grader {
    GraderKind kind = GraderKind::ExactMatchNormalized;
    std::string answer_key;  // expected answer (exact-match / letter)
    std::string command;     // external grader: stdin = response, exit 0 = correct
};

// Pure function of (response_text, grader config).
bool grade(const Grader& grader, const std::string& response_text);

// trim, case-fold, strip trailing punctuation, integer equivalence
std::string normalize_answer(const std::string& s);

// Issues one chat completion at temperature 0; caching and retries live in
// the phase helpers below.
CompletionRecord request_completion(const ModelEndpoint& endpoint,
                                    const std::string& prompt,
                                    std::int64_t max_tokens,
                                    const std::string& cache_key);

// Phase 0: isolated baseline run. Cache-first; on miss issues one
// completion, persists it, grades it.
GroundTruth solve_baseline(const ModelEndpoint& endpoint, const Problem& problem,
                           const Grader& grader, RecordCache& cache);

// Phase 1: planner call; raw text goes to parse_and_repair downstream.
std::string request_plan(const ModelEndpoint& endpoint, const std::string& prompt,
                         RecordCache& cache);

struct LiveEnforcedResult {
    int scored = 0;  // 0|1
    CompletionRecord record;
};

// Live regime E: provider max-output set to the plan's cap; a truncated
// response (finish_reason = length) scores zero.
LiveEnforcedResult execute_live_enforced(const ModelEndpoint& endpoint,
                                         const Problem& problem, std::int64_t cap,
                                         const Grader& grader, RecordCache& cache);

struct BudgetAwareResult {
    bool correct = false;
    std::int64_t output_tokens = 0;
};

// Budget-aware re-solve: the banner states the model's own allocation but
// the provider cap is unchanged, so the limit is self-imposed.
BudgetAwareResult budget_aware_resolve(const ModelEndpoint& endpoint,
                                       const Problem& problem, std::int64_t a,
                                       const Grader& grader, RecordCache& cache);

std::string budget_banner(std::int64_t a);

}  // namespace triage

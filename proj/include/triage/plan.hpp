#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "triage/pool.hpp"

namespace triage {

// Three framings of the planner prompt. The rules block, problem block
// format, schema, and ordering instruction are identical; only the
// opening paragraph differs.
enum class PromptVariant { NeutralA, AgentB, ExamC };

std::string to_string(PromptVariant v);
PromptVariant variant_from_string(const std::string& s);

struct PlanEntry {
    std::string problem_id;
    std::int64_t tokens = 0;  // >= 1 after normalization
};

struct Plan {
    std::vector<PlanEntry> entries;  // execution order
    std::string source_digest;

    std::int64_t total_allocated() const;
    bool selects(const std::string& problem_id) const;
};

// Renders the full planner prompt for a pool. Byte-stable for fixed inputs.
// domain fills the {domain} placeholder of variants B and C (e.g.
// "competition mathematics problems"); empty falls back to "problems".
std::string render_planner_prompt(const TaskPool& pool, PromptVariant variant,
                                  const std::string& domain = "");

enum class ParseStatus { Ok, Repaired, Unparseable };

std::string to_string(ParseStatus s);

struct ParseResult {
    ParseStatus status = ParseStatus::Unparseable;
    Plan plan;  // valid when status != Unparseable
    int unknown_dropped = 0;
    int duplicate_dropped = 0;
    int nonpositive_dropped = 0;
};

// Deterministic repair pipeline: extract the first JSON object holding a
// "plan" array, drop unknown fields, coerce token counts to non-negative
// integers (flooring fractions), discard ids not in the pool, drop
// zero-token entries, keep first occurrence of duplicates.
ParseResult parse_and_repair(const std::string& raw, const TaskPool& pool);

struct ValidationReport {
    std::int64_t sum_allocations = 0;
    bool within_budget = true;
    int unknown_count = 0;
    int duplicate_count = 0;
    bool empty = false;
};

// Report only; oversubscribed plans are flagged but never rejected, since
// both execution regimes truncate at the budget.
ValidationReport validate_plan(const Plan& plan, const TaskPool& pool,
                               const ParseResult* parse = nullptr);

// Canonical plan serialization: {"plan":[{"id":...,"tokens":...},...]}
std::string plan_to_json(const Plan& plan);
void save_plan(const Plan& plan, const std::string& path);

}  // namespace triage

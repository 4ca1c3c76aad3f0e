#include "triage/plan.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"
#include "triage/errors.hpp"
#include "triage/rng.hpp"

namespace triage {

using ojson = nlohmann::ordered_json;

std::string to_string(PromptVariant v) {
    switch (v) {
        case PromptVariant::NeutralA: return "A";
        case PromptVariant::AgentB: return "B";
        case PromptVariant::ExamC: return "C";
    }
    return "A";
}

PromptVariant variant_from_string(const std::string& s) {
    if (s == "A" || s == "a" || s == "A-neutral") return PromptVariant::NeutralA;
    if (s == "B" || s == "b" || s == "B-agent") return PromptVariant::AgentB;
    if (s == "C" || s == "c" || s == "C-exam") return PromptVariant::ExamC;
    throw ConfigError("unknown prompt variant: " + s);
}

std::string to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::Ok: return "ok";
        case ParseStatus::Repaired: return "repaired";
        case ParseStatus::Unparseable: return "excluded";
    }
    return "excluded";
}

std::int64_t Plan::total_allocated() const {
    std::int64_t sum = 0;
    for (const auto& e : entries) sum += e.tokens;
    return sum;
}

bool Plan::selects(const std::string& problem_id) const {
    for (const auto& e : entries)
        if (e.problem_id == problem_id) return true;
    return false;
}

// --- prompt rendering ---

namespace {

std::string replace_all(std::string s, const std::string& key,
                        const std::string& value) {
    std::size_t pos = 0;
    while ((pos = s.find(key, pos)) != std::string::npos) {
        s.replace(pos, key.size(), value);
        pos += value.size();
    }
    return s;
}

std::string format_points(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        return std::to_string(static_cast<std::int64_t>(v));
    }
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

const char* kOpeningA =
    "You are given a set of {n} problems and a total budget of {B_local} "
    "output tokens. Your task is to decide which problems to attempt, in what "
    "order, and how many tokens to allocate to each.";

const char* kOpeningB =
    "You are an autonomous planning agent operating under a fixed compute "
    "budget of {B_local} output tokens. A set of {domain} has been assigned "
    "to you. You cannot expect to complete every assignment within budget. "
    "Your job is to select which to execute and in what order so as to "
    "maximize total reward. Some assignments may be infeasible for you - "
    "committing tokens to those yields no reward.";

const char* kOpeningC =
    "You are taking a timed exam with a fixed output-token budget of "
    "{B_local} across all questions. A set of {domain} is in front of you. "
    "You do not have to attempt every question - some may be too difficult "
    "or unanswerable within the time available. Decide which questions to "
    "attempt and in what order so as to maximize your total score.";

// Shared across all variants: rules, problems, schema, ordering instruction.
const char* kPromptBody = R"(

Constraints:
  - Each problem is worth 1 point. Your goal is to maximize the total points earned within the budget.
  - Each problem is attempted in an independent model session. The tokens you allocate to a problem are spent entirely within that single session, with no context, reasoning, or scratchpad carried over between problems.
  - The sum of your per-problem token allocations must not exceed {B_local}.
  - You may choose to attempt a strict subset of the problems. Problems you do not select receive 0 tokens and 0 points.

Problems:
{problems}

Return a single JSON object with the following schema:
{
  "plan": [
    {"id": <problem_id>, "tokens": <int>},
    ...
  ]
}

The order of items in "plan" is the order in which the problems will be attempted. Items omitted from "plan" are not attempted. Output only the JSON object, with no additional commentary.)";

}  // namespace

std::string render_planner_prompt(const TaskPool& pool, PromptVariant variant,
                                  const std::string& domain) {
    std::string opening;
    switch (variant) {
        case PromptVariant::NeutralA: opening = kOpeningA; break;
        case PromptVariant::AgentB: opening = kOpeningB; break;
        case PromptVariant::ExamC: opening = kOpeningC; break;
    }
    std::string problems;
    for (std::size_t i = 0; i < pool.problems.size(); ++i) {
        const Problem& p = pool.problems[i];
        if (i) problems += "\n\n";
        problems += "[id: " + p.id + "] (points: " + format_points(p.value) + ")\n";
        problems += p.text;
    }
    std::string prompt = opening + kPromptBody;
    prompt = replace_all(prompt, "{n}", std::to_string(pool.problems.size()));
    prompt = replace_all(prompt, "{B_local}", std::to_string(pool.budget));
    prompt = replace_all(prompt, "{domain}",
                         domain.empty() ? std::string("problems") : domain);
    prompt = replace_all(prompt, "{problems}", problems);
    return prompt;
}

// --- parse and repair ---

namespace {

// Balanced-brace scan respecting JSON string syntax; returns one past the
// matching close brace, or npos.
std::size_t matching_brace(const std::string& s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string::npos;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ParseResult parse_and_repair(const std::string& raw, const TaskPool& pool) {
    ParseResult result;
    result.plan.source_digest = fnv1a64_hex(raw);

    // Step 1: extract the first JSON object with a "plan" array.
    ojson doc;
    bool found = false;
    std::size_t begin = 0, end = 0;
    for (std::size_t i = raw.find('{'); i != std::string::npos;
         i = raw.find('{', i + 1)) {
        std::size_t close = matching_brace(raw, i);
        if (close == std::string::npos) continue;
        ojson candidate = ojson::parse(raw.substr(i, close - i), nullptr, false);
        if (candidate.is_discarded() || !candidate.is_object()) continue;
        if (candidate.contains("plan") && candidate["plan"].is_array()) {
            doc = std::move(candidate);
            begin = i;
            end = close;
            found = true;
            break;
        }
    }
    if (!found) return result;  // Unparseable; caller applies the exclusion rule

    bool repaired = trim(raw) != raw.substr(begin, end - begin);
    if (doc.size() > 1) repaired = true;  // extra top-level fields dropped

    std::set<std::string> pool_ids;
    for (const auto& p : pool.problems) pool_ids.insert(p.id);

    std::set<std::string> seen;
    for (const auto& item : doc["plan"]) {
        if (!item.is_object()) {
            ++result.unknown_dropped;
            repaired = true;
            continue;
        }
        // id: accept strings; stringify bare integer ids
        std::string id;
        if (item.contains("id") && item["id"].is_string()) {
            id = item["id"].get<std::string>();
        } else if (item.contains("id") && item["id"].is_number_integer()) {
            id = std::to_string(item["id"].get<std::int64_t>());
            repaired = true;
        } else {
            ++result.unknown_dropped;
            repaired = true;
            continue;
        }
        // tokens: coerce to a non-negative integer, flooring fractions
        std::int64_t tokens = 0;
        if (item.contains("tokens")) {
            const auto& t = item["tokens"];
            if (t.is_number_integer()) {
                tokens = t.get<std::int64_t>();
            } else if (t.is_number()) {
                tokens = static_cast<std::int64_t>(std::floor(t.get<double>()));
                repaired = true;
            } else if (t.is_string()) {
                try {
                    tokens = static_cast<std::int64_t>(
                        std::floor(std::stod(t.get<std::string>())));
                } catch (...) {
                    tokens = 0;
                }
                repaired = true;
            }
        }
        if (tokens < 0) {
            tokens = 0;
            repaired = true;
        }
        if (item.size() > 2) repaired = true;  // unknown fields dropped

        if (pool_ids.count(id) == 0) {
            ++result.unknown_dropped;
            repaired = true;
            continue;
        }
        if (tokens <= 0) {
            // zero tokens means "not selected"
            ++result.nonpositive_dropped;
            repaired = true;
            continue;
        }
        if (!seen.insert(id).second) {
            ++result.duplicate_dropped;
            repaired = true;
            continue;
        }
        result.plan.entries.push_back(PlanEntry{id, tokens});
    }

    result.status = repaired ? ParseStatus::Repaired : ParseStatus::Ok;
    return result;
}

ValidationReport validate_plan(const Plan& plan, const TaskPool& pool,
                               const ParseResult* parse) {
    ValidationReport report;
    report.sum_allocations = plan.total_allocated();
    report.within_budget = report.sum_allocations <= pool.budget;
    report.empty = plan.entries.empty();
    if (parse != nullptr) {
        report.unknown_count = parse->unknown_dropped;
        report.duplicate_count = parse->duplicate_dropped;
    }
    return report;
}

std::string plan_to_json(const Plan& plan) {
    ojson j;
    j["plan"] = ojson::array();
    for (const auto& e : plan.entries) {
        ojson item;
        item["id"] = e.problem_id;
        item["tokens"] = e.tokens;
        j["plan"].push_back(std::move(item));
    }
    return j.dump();
}

void save_plan(const Plan& plan, const std::string& path) {
    write_file(path, plan_to_json(plan) + "\n");
}

}  // namespace triage

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "triage/plan.hpp"
#include "triage/pool.hpp"

namespace triage {

enum class Regime { Unconstrained, Enforced };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct TraceStep {
    std::string problem_id;
    std::int64_t allocation = 0;  // planner's a_i, advisory under regime U
    std::int64_t charged = 0;
    bool executed = false;
    double scored_value = 0.0;
};

enum class StopReason { PlanExhausted, BudgetTruncation };

std::string to_string(StopReason r);

struct ExecutionTrace {
    std::vector<TraceStep> steps;
    StopReason stop_reason = StopReason::PlanExhausted;
    std::int64_t total_charged = 0;
    double achieved_value = 0.0;  // V_M
};

// Regime U: each item runs at its true cost c_i; only the global budget
// binds. Execution stops at the first item whose cost exceeds the remaining
// budget (no skipping). Allocations are recorded but never charged.
ExecutionTrace execute_unconstrained(const Plan& plan, const TaskPool& pool);

// Regime E, desk-scale simulation from cached baseline data: the full
// allocation a_i is charged regardless of outcome; the item scores only if
// its baseline completion fits the cap (c_i <= a_i). Stops at the first item
// whose allocation exceeds the remaining budget.
ExecutionTrace execute_enforced_simulated(const Plan& plan, const TaskPool& pool);

ExecutionTrace execute(const Plan& plan, const TaskPool& pool, Regime regime);

double achieved_value(const ExecutionTrace& trace);

// Trace file: stable field order for byte-reproducibility.
std::string trace_to_json(const ExecutionTrace& trace);

}  // namespace triage

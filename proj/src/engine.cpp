#include "triage/engine.hpp"

#include "json.hpp"
#include "triage/errors.hpp"

namespace triage {

using ojson = nlohmann::ordered_json;

std::string to_string(Regime r) {
    return r == Regime::Unconstrained ? "U" : "E";
}

Regime regime_from_string(const std::string& s) {
    if (s == "U" || s == "u") return Regime::Unconstrained;
    if (s == "E" || s == "e") return Regime::Enforced;
    throw ConfigError("unknown regime: " + s);
}

std::string to_string(StopReason r) {
    return r == StopReason::PlanExhausted ? "plan-exhausted" : "budget-truncation";
}

namespace {

ExecutionTrace run(const Plan& plan, const TaskPool& pool, Regime regime) {
    ExecutionTrace trace;
    std::int64_t remaining = pool.budget;
    for (const auto& entry : plan.entries) {
        const GroundTruth& truth = pool.truth_for(entry.problem_id);
        const Problem* problem = nullptr;
        for (const auto& p : pool.problems)
            if (p.id == entry.problem_id) {
                problem = &p;
                break;
            }
        if (problem == nullptr) throw MissingTruth(entry.problem_id);

        TraceStep step;
        step.problem_id = entry.problem_id;
        step.allocation = entry.tokens;

        const std::int64_t demand =
            regime == Regime::Unconstrained ? truth.cost : entry.tokens;
        if (demand > remaining) {
            // stop, not skip: the first infeasible item ends execution
            trace.steps.push_back(std::move(step));
            trace.stop_reason = StopReason::BudgetTruncation;
            trace.total_charged = pool.budget - remaining;
            return trace;
        }
        step.executed = true;
        step.charged = demand;
        remaining -= demand;
        const bool completes =
            regime == Regime::Unconstrained || truth.cost <= entry.tokens;
        if (completes && truth.solvable) {
            step.scored_value = problem->value;
            trace.achieved_value += problem->value;
        }
        trace.steps.push_back(std::move(step));
    }
    trace.stop_reason = StopReason::PlanExhausted;
    trace.total_charged = pool.budget - remaining;
    return trace;
}

}  // namespace

ExecutionTrace execute_unconstrained(const Plan& plan, const TaskPool& pool) {
    return run(plan, pool, Regime::Unconstrained);
}

ExecutionTrace execute_enforced_simulated(const Plan& plan, const TaskPool& pool) {
    return run(plan, pool, Regime::Enforced);
}

ExecutionTrace execute(const Plan& plan, const TaskPool& pool, Regime regime) {
    return run(plan, pool, regime);
}

double achieved_value(const ExecutionTrace& trace) {
    double v = 0.0;
    for (const auto& s : trace.steps) v += s.scored_value;
    return v;
}

std::string trace_to_json(const ExecutionTrace& trace) {
    ojson j;
    j["steps"] = ojson::array();
    for (const auto& s : trace.steps) {
        ojson step;
        step["problem_id"] = s.problem_id;
        step["allocation"] = s.allocation;
        step["charged"] = s.charged;
        step["executed"] = s.executed;
        step["scored_value"] = s.scored_value;
        j["steps"].push_back(std::move(step));
    }
    j["stop_reason"] = to_string(trace.stop_reason);
    j["total_charged"] = trace.total_charged;
    j["achieved_value"] = trace.achieved_value;
    return j.dump(2) + "\n";
}

}  // namespace triage

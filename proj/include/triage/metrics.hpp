#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "triage/plan.hpp"

namespace triage {

// Skill-score normalization of the achieved value between the random
// reference (0) and the oracle (1). When the denominator vanishes the
// extension convention applies: 1 if v_model >= v_oracle, else 0, which
// also covers pools with no solvable item.
double eta(double v_model, double v_oracle, double v_random);

// Normalized regret (v_oracle - v_model) / v_oracle, defined only when
// v_oracle >= 1; undefined pools are excluded from regret aggregation.
std::optional<double> regret(double v_model, double v_oracle);

// Fraction of allocated tokens spent on injected unsolvable items.
// An empty plan wastes nothing, so it scores 0 by convention.
std::optional<double> waste_rate(const Plan& plan,
                                 const std::set<std::string>& unsolvable_ids);

// Fraction of injected unsolvable items correctly left out of the plan;
// undefined when nothing was injected.
std::optional<double> detection_rate(const Plan& plan,
                                     const std::set<std::string>& unsolvable_ids);

struct CompliancePair {
    std::int64_t allocation = 0;  // the model's own a_i
    bool baseline_correct = false;
    bool budget_correct = false;
    std::int64_t output_tokens = 0;
};

struct ComplianceReport {
    int n = 0;
    double compliance = 0.0;
    double acc_baseline = 0.0;
    double acc_budget_aware = 0.0;
    int kept_correct = 0;
    int lost_correct = 0;
    int newly_correct = 0;
    int still_wrong = 0;
};

ComplianceReport compliance_report(const std::vector<CompliancePair>& pairs);

// Kendall's tau-b with tie correction; symmetric in its arguments.
double kendall_tau_b(const std::vector<double>& ranking_a,
                     const std::vector<double>& ranking_b);

// Mean over defined values, optionally weighted; undefined entries
// (excluded pools) are dropped before averaging.
double aggregate_cell(const std::vector<std::optional<double>>& values,
                      const std::vector<double>* weights = nullptr);

struct CellScore {
    std::string pool_id;
    std::string dataset;
    double alpha = 0.0;
    std::string regime;
    double v_model = 0.0;
    double v_oracle = 0.0;
    double v_random = 0.0;
    std::optional<double> eta;
    std::optional<double> regret;
    std::optional<double> waste;
    std::optional<double> detection;
    std::string parse_status;  // ok | repaired | excluded
    std::uint64_t seed = 0;
};

// CSV with a fixed column set; undefined metrics render as NA.
std::string cell_scores_csv_header();
std::string cell_score_csv_row(const CellScore& score);

// Deterministic numeric formatting shared by all report writers.
std::string format_number(double x);
std::string format_optional(const std::optional<double>& x);

}  // namespace triage

#include "triage/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "triage/errors.hpp"

namespace triage {

double eta(double v_model, double v_oracle, double v_random) {
    if (v_random > v_oracle + 1e-9)
        throw DominanceViolation("v_random exceeds v_oracle");
    const double denom = v_oracle - v_random;
    if (denom > 0.0) return (v_model - v_random) / denom;
    // degenerate denominator: achievement indicator, failure clipped to 0
    return v_model >= v_oracle ? 1.0 : 0.0;
}

std::optional<double> regret(double v_model, double v_oracle) {
    if (v_oracle < 1.0) return std::nullopt;
    return (v_oracle - v_model) / v_oracle;
}

std::optional<double> waste_rate(const Plan& plan,
                                 const std::set<std::string>& unsolvable_ids) {
    std::int64_t total = 0;
    std::int64_t wasted = 0;
    for (const auto& e : plan.entries) {
        total += e.tokens;
        if (unsolvable_ids.count(e.problem_id)) wasted += e.tokens;
    }
    if (total == 0) return 0.0;
    return static_cast<double>(wasted) / static_cast<double>(total);
}

std::optional<double> detection_rate(const Plan& plan,
                                     const std::set<std::string>& unsolvable_ids) {
    if (unsolvable_ids.empty()) return std::nullopt;
    std::size_t excluded = 0;
    for (const auto& id : unsolvable_ids)
        if (!plan.selects(id)) ++excluded;
    return static_cast<double>(excluded) /
           static_cast<double>(unsolvable_ids.size());
}

ComplianceReport compliance_report(const std::vector<CompliancePair>& pairs) {
    if (pairs.empty()) throw EmptyInput("compliance_report needs >= 1 pair");
    ComplianceReport r;
    r.n = static_cast<int>(pairs.size());
    int within = 0, base = 0, aware = 0;
    for (const auto& p : pairs) {
        if (p.output_tokens <= p.allocation) ++within;
        if (p.baseline_correct) ++base;
        if (p.budget_correct) ++aware;
        if (p.baseline_correct && p.budget_correct) ++r.kept_correct;
        if (p.baseline_correct && !p.budget_correct) ++r.lost_correct;
        if (!p.baseline_correct && p.budget_correct) ++r.newly_correct;
        if (!p.baseline_correct && !p.budget_correct) ++r.still_wrong;
    }
    r.compliance = static_cast<double>(within) / r.n;
    r.acc_baseline = static_cast<double>(base) / r.n;
    r.acc_budget_aware = static_cast<double>(aware) / r.n;
    return r;
}

double kendall_tau_b(const std::vector<double>& ranking_a,
                     const std::vector<double>& ranking_b) {
    if (ranking_a.size() != ranking_b.size())
        throw LengthMismatch("rankings differ in length");
    const std::size_t n = ranking_a.size();
    if (n < 2) throw LengthMismatch("rankings need length >= 2");
    std::int64_t concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = ranking_a[i] - ranking_a[j];
            const double db = ranking_b[i] - ranking_b[j];
            if (da == 0.0 && db == 0.0) {
                ++ties_a;
                ++ties_b;
            } else if (da == 0.0) {
                ++ties_a;
            } else if (db == 0.0) {
                ++ties_b;
            } else if (da * db > 0.0) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const auto n0 = static_cast<std::int64_t>(n * (n - 1) / 2);
    const double denom = std::sqrt(static_cast<double>(n0 - ties_a) *
                                   static_cast<double>(n0 - ties_b));
    if (denom == 0.0) return 0.0;
    return static_cast<double>(concordant - discordant) / denom;
}

double aggregate_cell(const std::vector<std::optional<double>>& values,
                      const std::vector<double>* weights) {
    if (weights != nullptr && weights->size() != values.size())
        throw LengthMismatch("weights and values differ in length");
    double sum = 0.0, weight_sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i].has_value()) continue;
        const double w = weights ? (*weights)[i] : 1.0;
        if (!(w > 0.0)) throw ConfigError("weights must be positive");
        sum += w * *values[i];
        weight_sum += w;
    }
    if (weight_sum == 0.0) throw AllExcluded("no defined values to aggregate");
    return sum / weight_sum;
}

std::string format_number(double x) {
    if (x == std::floor(x) && std::abs(x) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(x));
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

std::string format_optional(const std::optional<double>& x) {
    return x.has_value() ? format_number(*x) : "NA";
}

std::string cell_scores_csv_header() {
    return "dataset,pool_id,alpha,regime,v_model,v_oracle,v_random,eta,regret,"
           "waste,detection,parse_status,seed\n";
}

std::string cell_score_csv_row(const CellScore& s) {
    std::ostringstream out;
    out << s.dataset << ',' << s.pool_id << ',' << format_number(s.alpha) << ','
        << s.regime << ',' << format_number(s.v_model) << ','
        << format_number(s.v_oracle) << ',' << format_number(s.v_random) << ','
        << format_optional(s.eta) << ',' << format_optional(s.regret) << ','
        << format_optional(s.waste) << ',' << format_optional(s.detection) << ','
        << s.parse_status << ',' << s.seed << '\n';
    return out.str();
}

}  // namespace triage

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "triage/engine.hpp"
#include "triage/errors.hpp"
#include "triage/metrics.hpp"
#include "triage/plan.hpp"
#include "triage/pool.hpp"
#include "triage/reference.hpp"
#include "triage/report.hpp"

namespace py = pybind11;
using namespace triage;

PYBIND11_MODULE(_triage, m) {
    m.doc() = "budget-constrained plan evaluation core";

    py::register_exception<Error>(m, "TriageError");

    py::enum_<Origin>(m, "Origin")
        .value("NATIVE", Origin::Native)
        .value("INJECTED_UNSOLVABLE", Origin::InjectedUnsolvable);

    py::class_<Problem>(m, "Problem")
        .def(py::init<>())
        .def(py::init([](std::string id, std::string text, double value,
                         std::string dataset) {
                 Problem p;
                 p.id = std::move(id);
                 p.text = std::move(text);
                 p.value = value;
                 p.dataset = std::move(dataset);
                 return p;
             }),
             py::arg("id"), py::arg("text"), py::arg("value") = 1.0,
             py::arg("dataset") = "")
        .def_readwrite("id", &Problem::id)
        .def_readwrite("text", &Problem::text)
        .def_readwrite("value", &Problem::value)
        .def_readwrite("origin", &Problem::origin)
        .def_readwrite("dataset", &Problem::dataset);

    py::class_<GroundTruth>(m, "GroundTruth")
        .def(py::init<>())
        .def(py::init([](std::string problem_id, bool solvable, std::int64_t cost) {
                 GroundTruth t;
                 t.problem_id = std::move(problem_id);
                 t.solvable = solvable;
                 t.cost = cost;
                 return t;
             }),
             py::arg("problem_id"), py::arg("solvable"), py::arg("cost"))
        .def_readwrite("problem_id", &GroundTruth::problem_id)
        .def_readwrite("solvable", &GroundTruth::solvable)
        .def_readwrite("cost", &GroundTruth::cost);

    py::class_<TaskPool>(m, "TaskPool")
        .def(py::init<>())
        .def_readwrite("id", &TaskPool::id)
        .def_readwrite("dataset", &TaskPool::dataset)
        .def_readwrite("problems", &TaskPool::problems)
        .def_readwrite("truth", &TaskPool::truth)
        .def_readwrite("alpha", &TaskPool::alpha)
        .def_readwrite("budget", &TaskPool::budget)
        .def("__len__", [](const TaskPool& p) { return p.size(); });

    py::class_<PlanEntry>(m, "PlanEntry")
        .def(py::init([](std::string id, std::int64_t tokens) {
                 return PlanEntry{std::move(id), tokens};
             }),
             py::arg("problem_id"), py::arg("tokens"))
        .def_readwrite("problem_id", &PlanEntry::problem_id)
        .def_readwrite("tokens", &PlanEntry::tokens);

    py::class_<Plan>(m, "Plan")
        .def(py::init<>())
        .def_readwrite("entries", &Plan::entries)
        .def("total_allocated", &Plan::total_allocated);

    py::enum_<Regime>(m, "Regime")
        .value("U", Regime::Unconstrained)
        .value("E", Regime::Enforced);

    py::class_<TraceStep>(m, "TraceStep")
        .def_readonly("problem_id", &TraceStep::problem_id)
        .def_readonly("allocation", &TraceStep::allocation)
        .def_readonly("charged", &TraceStep::charged)
        .def_readonly("executed", &TraceStep::executed)
        .def_readonly("scored_value", &TraceStep::scored_value);

    py::class_<ExecutionTrace>(m, "ExecutionTrace")
        .def_readonly("steps", &ExecutionTrace::steps)
        .def_readonly("total_charged", &ExecutionTrace::total_charged)
        .def_readonly("achieved_value", &ExecutionTrace::achieved_value)
        .def_property_readonly("stop_reason", [](const ExecutionTrace& t) {
            return to_string(t.stop_reason);
        });

    py::class_<ReferenceValues>(m, "ReferenceValues")
        .def_readonly("v_oracle", &ReferenceValues::v_oracle)
        .def_readonly("v_random_mean", &ReferenceValues::v_random_mean)
        .def_readonly("v_random_samples", &ReferenceValues::v_random_samples)
        .def_readonly("seed", &ReferenceValues::seed);

    m.def("partition", &partition, py::arg("problems"), py::arg("chunk_size"));
    m.def("compute_budget", &compute_budget, py::arg("pool"), py::arg("alpha"));
    m.def("inject_unsolvables", &inject_unsolvables, py::arg("pool"),
          py::arg("unsolvable_items"), py::arg("ratio"), py::arg("seed"));

    m.def(
        "render_planner_prompt",
        [](const TaskPool& pool, const std::string& variant,
           const std::string& domain) {
            return render_planner_prompt(pool, variant_from_string(variant), domain);
        },
        py::arg("pool"), py::arg("variant") = "A", py::arg("domain") = "");
    m.def(
        "parse_and_repair",
        [](const std::string& raw, const TaskPool& pool) {
            ParseResult r = parse_and_repair(raw, pool);
            return py::make_tuple(to_string(r.status), r.plan);
        },
        py::arg("raw"), py::arg("pool"),
        "Returns (status, plan); status is 'ok', 'repaired', or 'excluded'.");
    m.def("plan_to_json", &plan_to_json);

    m.def("execute_unconstrained", &execute_unconstrained);
    m.def("execute_enforced_simulated", &execute_enforced_simulated);

    py::enum_<RandomBaseline>(m, "RandomBaseline")
        .value("STOP_AT_INFEASIBLE", RandomBaseline::StopAtInfeasible)
        .value("SKIP_INFEASIBLE", RandomBaseline::SkipInfeasible);
    m.def("oracle_value", &oracle_value);
    m.def("oracle_value_uniform", &oracle_value_uniform);
    m.def("random_reference", &random_reference, py::arg("pool"),
          py::arg("samples") = kDefaultSamples, py::arg("seed") = kDefaultSeed,
          py::arg("mode") = RandomBaseline::StopAtInfeasible);
    m.def("exact_random_reference", &exact_random_reference, py::arg("pool"),
          py::arg("mode") = RandomBaseline::StopAtInfeasible);

    m.def("eta", &eta, py::arg("v_model"), py::arg("v_oracle"), py::arg("v_random"));
    m.def("regret", &regret, py::arg("v_model"), py::arg("v_oracle"));
    m.def(
        "waste_rate",
        [](const Plan& plan, const std::set<std::string>& ids) {
            return waste_rate(plan, ids);
        },
        py::arg("plan"), py::arg("unsolvable_ids"));
    m.def(
        "detection_rate",
        [](const Plan& plan, const std::set<std::string>& ids) {
            return detection_rate(plan, ids);
        },
        py::arg("plan"), py::arg("unsolvable_ids"));
    m.def("kendall_tau_b", &kendall_tau_b, py::arg("ranking_a"), py::arg("ranking_b"));
    m.def(
        "aggregate_cell",
        [](const std::vector<std::optional<double>>& values,
           const std::optional<std::vector<double>>& weights) {
            return aggregate_cell(values, weights ? &*weights : nullptr);
        },
        py::arg("values"), py::arg("weights") = py::none());

    m.def(
        "compliance_report",
        [](const std::vector<std::tuple<std::int64_t, bool, bool, std::int64_t>>&
               pairs) {
            std::vector<CompliancePair> cp;
            for (const auto& [a, base, aware, tokens] : pairs)
                cp.push_back(CompliancePair{a, base, aware, tokens});
            ComplianceReport r = compliance_report(cp);
            py::dict d;
            d["n"] = r.n;
            d["compliance"] = r.compliance;
            d["acc_baseline"] = r.acc_baseline;
            d["acc_budget_aware"] = r.acc_budget_aware;
            d["kept_correct"] = r.kept_correct;
            d["lost_correct"] = r.lost_correct;
            d["newly_correct"] = r.newly_correct;
            d["still_wrong"] = r.still_wrong;
            return d;
        },
        py::arg("pairs"),
        "pairs: list of (allocation, baseline_correct, budget_correct, output_tokens)");

    m.def("load_pool", &load_pool);
    m.def("save_pool", &save_pool);
    m.def("load_truth", &load_truth);
}

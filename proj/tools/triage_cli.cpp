#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "triage/backend.hpp"
#include "triage/engine.hpp"
#include "triage/errors.hpp"
#include "triage/metrics.hpp"
#include "triage/plan.hpp"
#include "triage/pool.hpp"
#include "triage/reference.hpp"
#include "triage/report.hpp"

namespace fs = std::filesystem;
using namespace triage;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitMissingData = 3;
constexpr int kExitTransport = 4;

TaskPool load_pool_and_truth(const std::string& pool_path) {
    TaskPool pool = load_pool(pool_path);
    fs::path truth_path(pool_path);
    truth_path.replace_extension(".truth.jsonl");
    if (fs::exists(truth_path)) {
        auto truth = load_truth(truth_path.string());
        for (const auto& p : pool.problems) {
            auto it = truth.find(p.id);
            if (it != truth.end()) pool.truth[p.id] = it->second;
        }
    }
    return pool;
}

std::vector<std::string> pool_files(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    return files;
}

int run(int argc, char** argv) {
    CLI::App app{"triage: budget-constrained plan evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "run configuration file (JSON)");

    // build-pools
    auto* build = app.add_subcommand("build-pools", "chunk a problem file into task pools");
    std::string problems_path, out_dir, dataset;
    std::size_t chunk_size = 30;
    build->add_option("--problems", problems_path, "problems JSONL")->required();
    build->add_option("--dataset", dataset, "dataset label (default: file stem)");
    build->add_option("--chunk-size", chunk_size, "pool size")->capture_default_str();
    build->add_option("--out", out_dir, "output directory")->required();

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "compute pool budgets from ground truth");
    std::string pools_dir, truth_path;
    double alpha = 0.5;
    bool live = false;
    calibrate->add_option("--pools", pools_dir, "pools directory")->required();
    calibrate->add_option("--truth", truth_path, "ground-truth JSONL")->required();
    calibrate->add_option("--alpha", alpha, "budget factor in (0,1]")->capture_default_str();
    calibrate->add_flag("--live", live, "measure missing truth via the endpoint");

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "render planner prompts or request plans");
    std::string variant_str = "A", domain, plans_out;
    bool plan_live = false;
    plan_cmd->add_option("--pools", pools_dir, "pools directory")->required();
    plan_cmd->add_option("--variant", variant_str, "prompt variant A|B|C")->capture_default_str();
    plan_cmd->add_option("--domain", domain, "domain wording for variants B/C");
    plan_cmd->add_option("--out", plans_out, "output directory")->required();
    plan_cmd->add_flag("--live", plan_live, "request plans from the endpoint");

    // execute
    auto* exec_cmd = app.add_subcommand("execute", "execute a plan against a pool");
    std::string pool_path, plan_path, regime_str = "U", trace_out;
    exec_cmd->add_option("--pool", pool_path, "pool file")->required();
    exec_cmd->add_option("--plan", plan_path, "plan file (raw planner output)")->required();
    exec_cmd->add_option("--regime", regime_str, "U or E")->capture_default_str();
    exec_cmd->add_option("--out", trace_out, "trace output file")->required();

    // score
    auto* score_cmd = app.add_subcommand("score", "score pools against plans (offline)");
    std::string plans_dir, score_out;
    std::uint64_t seed = kDefaultSeed;
    int samples = kDefaultSamples;
    std::vector<std::string> regimes_flag;
    score_cmd->add_option("--pools", pools_dir, "pools directory")->required();
    score_cmd->add_option("--plans", plans_dir, "plans directory")->required();
    score_cmd->add_option("--out", score_out, "output directory")->required();
    score_cmd->add_option("--seed", seed, "random-reference seed")->capture_default_str();
    score_cmd->add_option("--samples", samples, "random-reference samples")->capture_default_str();
    score_cmd->add_option("--regime", regimes_flag, "restrict to regimes (U, E)");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "calibrate/score across the alpha grid");
    std::string sweep_plans, sweep_out;
    sweep_cmd->add_option("--plans", sweep_plans, "plans root directory")->required();
    sweep_cmd->add_option("--out", sweep_out, "output root directory")->required();

    // inject
    auto* inject_cmd = app.add_subcommand("inject", "unsolvable-injection study");
    std::string unsolvable_path, inject_plans, inject_out;
    std::vector<double> ratios = {0.0, 0.25, 0.5, 0.75, 1.0};
    inject_cmd->add_option("--unsolvable", unsolvable_path, "unsolvable problems JSONL")->required();
    inject_cmd->add_option("--ratios", ratios, "injection ratios");
    inject_cmd->add_option("--plans", inject_plans, "plans root directory")->required();
    inject_cmd->add_option("--out", inject_out, "output root directory")->required();

    // resolve-budget-aware
    auto* resolve_cmd = app.add_subcommand("resolve-budget-aware",
                                           "re-solve planned problems under a stated budget");
    std::string resolve_pool, resolve_plan, resolve_out;
    resolve_cmd->add_option("--pool", resolve_pool, "pool file")->required();
    resolve_cmd->add_option("--plan", resolve_plan, "plan file")->required();
    resolve_cmd->add_option("--out", resolve_out, "compliance report file")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "merge cell files into a summary");
    std::string cells_dir, report_out;
    bool weighted = false;
    report_cmd->add_option("--cells", cells_dir, "directory holding cells.csv files")->required();
    report_cmd->add_option("--out", report_out, "output directory")->required();
    report_cmd->add_flag("--weighted", weighted, "pool-count weighted cross-dataset merge");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    RunConfig config;
    if (!config_path.empty()) config = load_config(config_path);

    auto cache_path = [&](const char* phase) {
        fs::path dir = config.output_dir.empty() ? fs::path(".") : fs::path(config.output_dir);
        fs::create_directories(dir);
        (void)phase;
        return (dir / (config.endpoint.model_id + "." + to_string(config.endpoint.mode) +
                       ".records.jsonl"))
            .string();
    };

    auto dataset_grader = [&](const std::string& ds) -> const GraderSpec& {
        auto it = config.graders.find(ds);
        if (it == config.graders.end())
            throw ConfigError("no grader configured for dataset: " + ds);
        return it->second;
    };

    if (*build) {
        auto problems = load_problems(problems_path);
        std::string name = dataset.empty() ? fs::path(problems_path).stem().string() : dataset;
        for (auto& p : problems)
            if (p.dataset.empty()) p.dataset = name;
        auto pools = partition(problems, chunk_size);
        for (std::size_t i = 0; i < pools.size(); ++i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "p%03zu", i);
            pools[i].id = name + "-" + buf;
            pools[i].dataset = name;
            save_pool(pools[i], (fs::path(out_dir) / (pools[i].id + ".json")).string());
        }
        std::cout << "wrote " << pools.size() << " pools to " << out_dir << "\n";
    } else if (*calibrate) {
        auto truth = load_truth(truth_path);
        for (const auto& file : pool_files(pools_dir)) {
            TaskPool pool = load_pool(file);
            for (const auto& p : pool.problems) {
                auto it = truth.find(p.id);
                if (it != truth.end()) {
                    pool.truth[p.id] = it->second;
                } else if (live) {
                    const GraderSpec& spec = dataset_grader(pool.dataset);
                    std::map<std::string, std::string> answers;
                    if (!spec.answers_path.empty())
                        answers = load_answers(spec.answers_path);
                    RecordCache cache(cache_path("baseline"));
                    GroundTruth t = solve_baseline(
                        config.endpoint, p, grader_for(spec, answers, p.id), cache);
                    truth[p.id] = t;
                    pool.truth[p.id] = t;
                } else {
                    throw MissingTruth(p.id);
                }
            }
            compute_budget(pool, alpha);
            save_pool(pool, file);
            fs::path tp(file);
            tp.replace_extension(".truth.jsonl");
            save_truth(pool.truth, pool.dataset, tp.string());
        }
        save_truth(truth, "", truth_path);  // persist any live measurements
        std::cout << "calibrated pools in " << pools_dir << " at alpha "
                  << format_number(alpha) << "\n";
    } else if (*plan_cmd) {
        PromptVariant variant = variant_from_string(variant_str);
        for (const auto& file : pool_files(pools_dir)) {
            TaskPool pool = load_pool(file);
            std::string prompt = render_planner_prompt(pool, variant, domain);
            if (plan_live) {
                RecordCache cache(cache_path("plan"));
                std::string raw = request_plan(config.endpoint, prompt, cache);
                write_file((fs::path(plans_out) / (pool.id + ".json")).string(), raw);
            } else {
                write_file((fs::path(plans_out) / (pool.id + ".prompt.txt")).string(),
                           prompt);
            }
        }
    } else if (*exec_cmd) {
        TaskPool pool = load_pool_and_truth(pool_path);
        ParseResult parsed = parse_and_repair(read_file(plan_path), pool);
        if (parsed.status == ParseStatus::Unparseable)
            throw ConfigError("plan is unparseable: " + plan_path);
        ExecutionTrace trace =
            execute(parsed.plan, pool, regime_from_string(regime_str));
        write_file(trace_out, trace_to_json(trace));
        std::cout << "V_M = " << format_number(trace.achieved_value) << " ("
                  << to_string(trace.stop_reason) << ")\n";
    } else if (*score_cmd) {
        config.seed = seed;
        config.samples = samples;
        if (!regimes_flag.empty()) {
            config.regimes.clear();
            for (const auto& r : regimes_flag)
                config.regimes.push_back(regime_from_string(r));
        }
        ScoreOutcome outcome = cmd_score(pools_dir, plans_dir, score_out, config);
        std::cout << "scored " << outcome.pools_scored << " pools ("
                  << outcome.pools_excluded << " excluded) -> " << score_out << "\n";
    } else if (*sweep_cmd) {
        if (config.dataset_paths.empty())
            throw ConfigError("sweep needs dataset_paths in --config");
        cmd_sweep(config, sweep_plans, sweep_out);
        std::cout << "sweep complete -> " << sweep_out << "\n";
    } else if (*inject_cmd) {
        if (config.dataset_paths.empty())
            throw ConfigError("inject needs dataset_paths in --config");
        auto rows = cmd_inject(config, unsolvable_path, ratios, inject_plans,
                               inject_out);
        std::cout << rows.size() << " injection rows -> " << inject_out << "\n";
    } else if (*resolve_cmd) {
        TaskPool pool = load_pool_and_truth(resolve_pool);
        ParseResult parsed = parse_and_repair(read_file(resolve_plan), pool);
        if (parsed.status == ParseStatus::Unparseable)
            throw ConfigError("plan is unparseable: " + resolve_plan);
        const GraderSpec& spec = dataset_grader(pool.dataset);
        std::map<std::string, std::string> answers;
        if (!spec.answers_path.empty()) answers = load_answers(spec.answers_path);
        RecordCache cache(cache_path("budget-aware"));
        std::vector<CompliancePair> pairs;
        for (const auto& entry : parsed.plan.entries) {
            const Problem* problem = nullptr;
            for (const auto& p : pool.problems)
                if (p.id == entry.problem_id) problem = &p;
            if (problem == nullptr) continue;
            Grader grader = grader_for(spec, answers, problem->id);
            GroundTruth baseline =
                solve_baseline(config.endpoint, *problem, grader, cache);
            BudgetAwareResult res = budget_aware_resolve(
                config.endpoint, *problem, entry.tokens, grader, cache);
            pairs.push_back(CompliancePair{entry.tokens, baseline.solvable,
                                           res.correct, res.output_tokens});
        }
        ComplianceReport report = compliance_report(pairs);
        ojson j;
        j["n"] = report.n;
        j["compliance"] = report.compliance;
        j["acc_baseline"] = report.acc_baseline;
        j["acc_budget_aware"] = report.acc_budget_aware;
        j["kept_correct"] = report.kept_correct;
        j["lost_correct"] = report.lost_correct;
        j["newly_correct"] = report.newly_correct;
        j["still_wrong"] = report.still_wrong;
        write_file(resolve_out, j.dump(2) + "\n");
        std::cout << "compliance " << format_number(report.compliance) << " over "
                  << report.n << " pairs\n";
    } else if (*report_cmd) {
        cmd_report(cells_dir, report_out, weighted);
        std::cout << "summary written to " << report_out << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const MissingTruth& e) {
        std::cerr << "missing data: " << e.what() << "\n";
        return kExitMissingData;
    } catch (const AllExcluded& e) {
        std::cerr << "missing data: " << e.what() << "\n";
        return kExitMissingData;
    } catch (const IoError& e) {
        std::cerr << "missing data: " << e.what() << "\n";
        return kExitMissingData;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "triage/backend.hpp"
#include "triage/engine.hpp"
#include "triage/metrics.hpp"
#include "triage/plan.hpp"
#include "triage/pool.hpp"
#include "triage/reference.hpp"

namespace triage {

struct GraderSpec {
    GraderKind kind = GraderKind::ExactMatchNormalized;
    std::string answers_path;  // JSONL of {"id", "answer"} for key-based kinds
    std::string command;       // external-command hook
};

// Per-problem grader resolved from a spec and an answer-key file.
Grader grader_for(const GraderSpec& spec,
                  const std::map<std::string, std::string>& answers,
                  const std::string& problem_id);
std::map<std::string, std::string> load_answers(const std::string& path);

struct RunConfig {
    std::vector<std::string> dataset_paths;
    std::size_t chunk_size = 30;
    std::vector<double> alphas = {0.25, 0.5, 0.75, 1.0};
    std::vector<Regime> regimes = {Regime::Unconstrained, Regime::Enforced};
    PromptVariant variant = PromptVariant::NeutralA;
    std::uint64_t seed = kDefaultSeed;
    int samples = kDefaultSamples;
    std::string output_dir;
    ModelEndpoint endpoint;
    std::map<std::string, GraderSpec> graders;  // per dataset
};

RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_digest(const RunConfig& config);

// Scores one pool against one raw planner output under the configured
// regimes; fully offline. parse_status "excluded" rows carry NA metrics.
std::vector<CellScore> score_pool(const TaskPool& pool,
                                  const std::string* raw_plan,
                                  const std::vector<Regime>& regimes,
                                  int samples, std::uint64_t seed);

struct ScoreOutcome {
    int pools_scored = 0;
    int pools_excluded = 0;
    std::vector<CellScore> rows;
};

// Pools dir layout: <pool_id>.json plus <pool_id>.truth.jsonl.
// Plans dir layout: <pool_id>.json holding raw planner output.
// Writes cells.csv, aggregate.csv, exclusions.txt, metadata.json.
ScoreOutcome cmd_score(const std::string& pools_dir, const std::string& plans_dir,
                       const std::string& out_dir, const RunConfig& config);

// Sweep over alphas x regimes. Dataset problems come from config
// dataset_paths (JSONL) with sibling <stem>.truth.jsonl files; plans are
// read from plans_root/<dataset>/alpha-<a>/<pool_id>.json. Completed cells
// (existing cells.csv) are not recomputed.
void cmd_sweep(const RunConfig& config, const std::string& plans_root,
               const std::string& out_root);

struct InjectionRow {
    std::string dataset;
    std::string pool_id;
    double ratio = 0.0;
    std::optional<double> detection;
    std::optional<double> waste;
    std::string parse_status;
};

// Injection study: builds pools at each ratio, scores the matching plans,
// and emits the per-(dataset, r) detection/waste table.
std::vector<InjectionRow> cmd_inject(const RunConfig& config,
                                     const std::string& unsolvable_path,
                                     const std::vector<double>& ratios,
                                     const std::string& plans_root,
                                     const std::string& out_root);

// Merges cell files under cells_dir into one long-format table per metric;
// optional problem-count weighting. Emits CSV and JSON with equal values.
void cmd_report(const std::string& cells_dir, const std::string& out_dir,
                bool weighted);

}  // namespace triage

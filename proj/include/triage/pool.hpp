#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace triage {

enum class Origin { Native, InjectedUnsolvable };

std::string to_string(Origin o);
Origin origin_from_string(const std::string& s);

struct Problem {
    std::string id;
    std::string text;
    double value = 1.0;
    Origin origin = Origin::Native;
    std::string dataset;
};

enum class Provenance { Measured, Replayed };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// Per-(problem, model) measurement: solvability y and baseline output-token
// cost c, recorded once at temperature 0.
struct GroundTruth {
    std::string problem_id;
    bool solvable = false;
    std::int64_t cost = 1;  // >= 1
    Provenance provenance = Provenance::Measured;
    std::string response_digest;
};

struct TaskPool {
    std::string id;
    std::string dataset;
    std::vector<Problem> problems;
    std::map<std::string, GroundTruth> truth;
    double alpha = 0.0;
    std::int64_t budget = 0;

    bool has_truth(const std::string& problem_id) const {
        return truth.count(problem_id) != 0;
    }
    const GroundTruth& truth_for(const std::string& problem_id) const;
    std::size_t size() const { return problems.size(); }
};

// Splits an ordered problem list into consecutive chunks of chunk_size;
// a non-multiple tail becomes its own smaller pool. Budgets are not set.
std::vector<TaskPool> partition(const std::vector<Problem>& problems,
                                std::size_t chunk_size);

// B = floor(alpha * sum of baseline costs). Stores alpha and budget on the
// pool and returns the budget. Throws MissingTruth naming the first problem
// without a ground-truth record.
std::int64_t compute_budget(TaskPool& pool, double alpha);

// Replaces round(ratio * n) native problems with items drawn from
// unsolvable_items (taken in order), at positions chosen uniformly by seed.
// Pool size is unchanged; replaced problems lose their truth entries, and
// injected items need their own baseline measurement before scoring.
TaskPool inject_unsolvables(const TaskPool& pool,
                            const std::vector<Problem>& unsolvable_items,
                            double ratio, std::uint64_t seed);

// Ids of injected-unsolvable problems, for waste/detection computation.
std::vector<std::string> injected_ids(const TaskPool& pool);

// --- file formats ---

// Pool file: {"pool_id", "dataset", "alpha", "budget", "problems":[...]}
std::string pool_to_json(const TaskPool& pool);
TaskPool pool_from_json(const std::string& text);
void save_pool(const TaskPool& pool, const std::string& path);
TaskPool load_pool(const std::string& path);

// Ground-truth file: JSON lines, one object per problem.
std::string truth_to_jsonl(const std::map<std::string, GroundTruth>& truth,
                           const std::string& dataset);
std::map<std::string, GroundTruth> truth_from_jsonl(const std::string& text);
void save_truth(const std::map<std::string, GroundTruth>& truth,
                const std::string& dataset, const std::string& path);
std::map<std::string, GroundTruth> load_truth(const std::string& path);

// Problem list: JSON lines of {"id", "text", "value"?, "dataset"?}.
std::vector<Problem> problems_from_jsonl(const std::string& text);
std::vector<Problem> load_problems(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace triage

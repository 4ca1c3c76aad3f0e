#include "triage/pool.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "triage/errors.hpp"
#include "triage/rng.hpp"

namespace triage {

using ojson = nlohmann::ordered_json;

std::string to_string(Origin o) {
    return o == Origin::Native ? "native" : "injected-unsolvable";
}

Origin origin_from_string(const std::string& s) {
    if (s == "native") return Origin::Native;
    if (s == "injected-unsolvable") return Origin::InjectedUnsolvable;
    throw ConfigError("unknown origin: " + s);
}

std::string to_string(Provenance p) {
    return p == Provenance::Measured ? "measured" : "replayed";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "measured") return Provenance::Measured;
    if (s == "replayed") return Provenance::Replayed;
    throw ConfigError("unknown provenance: " + s);
}

const GroundTruth& TaskPool::truth_for(const std::string& problem_id) const {
    auto it = truth.find(problem_id);
    if (it == truth.end()) throw MissingTruth(problem_id);
    return it->second;
}

std::vector<TaskPool> partition(const std::vector<Problem>& problems,
                                std::size_t chunk_size) {
    if (chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
    std::vector<TaskPool> pools;
    for (std::size_t start = 0; start < problems.size(); start += chunk_size) {
        TaskPool pool;
        std::size_t end = std::min(start + chunk_size, problems.size());
        pool.problems.assign(problems.begin() + static_cast<std::ptrdiff_t>(start),
                             problems.begin() + static_cast<std::ptrdiff_t>(end));
        if (!pool.problems.empty()) pool.dataset = pool.problems.front().dataset;
        pools.push_back(std::move(pool));
    }
    return pools;
}

std::int64_t compute_budget(TaskPool& pool, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("alpha must be in (0, 1]");
    std::int64_t total = 0;
    for (const auto& p : pool.problems) total += pool.truth_for(p.id).cost;
    pool.alpha = alpha;
    pool.budget = static_cast<std::int64_t>(
        std::floor(alpha * static_cast<double>(total)));
    return pool.budget;
}

TaskPool inject_unsolvables(const TaskPool& pool,
                            const std::vector<Problem>& unsolvable_items,
                            double ratio, std::uint64_t seed) {
    if (!(ratio >= 0.0 && ratio <= 1.0))
        throw ConfigError("injection ratio must be in [0, 1]");
    const std::size_t n = pool.problems.size();
    // half-up rounding; the usual ratio grid is integral at n = 30 either way
    const std::size_t k =
        static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
    if (k == 0) return pool;
    if (unsolvable_items.size() < k)
        throw InsufficientInjectionPool(
            "need " + std::to_string(k) + " unsolvable items, have " +
            std::to_string(unsolvable_items.size()));

    std::vector<std::size_t> native;
    for (std::size_t i = 0; i < n; ++i)
        if (pool.problems[i].origin == Origin::Native) native.push_back(i);
    if (native.size() < k)
        throw InsufficientInjectionPool("not enough native slots to replace");

    Rng rng(seed);
    std::vector<std::size_t> picks = rng.sample_indices(native.size(), k);

    TaskPool out = pool;
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t slot = native[picks[j]];
        out.truth.erase(out.problems[slot].id);
        Problem injected = unsolvable_items[j];
        injected.origin = Origin::InjectedUnsolvable;
        out.problems[slot] = std::move(injected);
    }
    // budget must be recomputed once injected items have truth
    out.budget = 0;
    std::set<std::string> ids;
    for (const auto& p : out.problems)
        if (!ids.insert(p.id).second)
            throw ConfigError("duplicate id after injection: " + p.id);
    return out;
}

std::vector<std::string> injected_ids(const TaskPool& pool) {
    std::vector<std::string> out;
    for (const auto& p : pool.problems)
        if (p.origin == Origin::InjectedUnsolvable) out.push_back(p.id);
    return out;
}

// --- serialization ---

static ojson problem_to_json(const Problem& p) {
    ojson j;
    j["id"] = p.id;
    j["text"] = p.text;
    j["value"] = p.value;
    j["origin"] = to_string(p.origin);
    return j;
}

static Problem problem_from_json(const ojson& j, const std::string& dataset) {
    Problem p;
    p.id = j.at("id").get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.value = j.value("value", 1.0);
    p.origin = origin_from_string(j.value("origin", std::string("native")));
    p.dataset = dataset;
    if (p.id.empty()) throw ConfigError("problem id must be non-empty");
    if (p.text.empty()) throw ConfigError("problem text must be non-empty: " + p.id);
    if (!(p.value > 0)) throw ConfigError("problem value must be > 0: " + p.id);
    return p;
}

std::string pool_to_json(const TaskPool& pool) {
    ojson j;
    j["pool_id"] = pool.id;
    j["dataset"] = pool.dataset;
    j["alpha"] = pool.alpha;
    j["budget"] = pool.budget;
    j["problems"] = ojson::array();
    for (const auto& p : pool.problems) j["problems"].push_back(problem_to_json(p));
    return j.dump(2) + "\n";
}

TaskPool pool_from_json(const std::string& text) {
    ojson j = ojson::parse(text);
    TaskPool pool;
    pool.id = j.value("pool_id", std::string());
    pool.dataset = j.value("dataset", std::string());
    pool.alpha = j.value("alpha", 0.0);
    pool.budget = j.value("budget", std::int64_t{0});
    std::set<std::string> ids;
    for (const auto& pj : j.at("problems")) {
        Problem p = problem_from_json(pj, pool.dataset);
        if (!ids.insert(p.id).second)
            throw ConfigError("duplicate problem id in pool: " + p.id);
        pool.problems.push_back(std::move(p));
    }
    return pool;
}

static ojson truth_to_json(const GroundTruth& t, const std::string& dataset) {
    ojson j;
    j["problem_id"] = t.problem_id;
    j["dataset"] = dataset;
    j["solvable"] = t.solvable ? 1 : 0;
    j["cost"] = t.cost;
    j["provenance"] = to_string(t.provenance);
    j["response_digest"] = t.response_digest;
    return j;
}

std::string truth_to_jsonl(const std::map<std::string, GroundTruth>& truth,
                           const std::string& dataset) {
    std::ostringstream out;
    for (const auto& [id, t] : truth) out << truth_to_json(t, dataset).dump() << "\n";
    return out.str();
}

std::map<std::string, GroundTruth> truth_from_jsonl(const std::string& text) {
    std::map<std::string, GroundTruth> truth;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ojson j = ojson::parse(line);
        GroundTruth t;
        t.problem_id = j.at("problem_id").get<std::string>();
        t.solvable = j.at("solvable").get<int>() != 0;
        t.cost = j.at("cost").get<std::int64_t>();
        t.provenance =
            provenance_from_string(j.value("provenance", std::string("measured")));
        t.response_digest = j.value("response_digest", std::string());
        if (t.cost < 1)
            throw ConfigError("ground-truth cost must be >= 1: " + t.problem_id);
        truth[t.problem_id] = std::move(t);
    }
    return truth;
}

std::vector<Problem> problems_from_jsonl(const std::string& text) {
    std::vector<Problem> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ojson j = ojson::parse(line);
        out.push_back(problem_from_json(j, j.value("dataset", std::string())));
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
}

void save_pool(const TaskPool& pool, const std::string& path) {
    write_file(path, pool_to_json(pool));
}

TaskPool load_pool(const std::string& path) {
    return pool_from_json(read_file(path));
}

void save_truth(const std::map<std::string, GroundTruth>& truth,
                const std::string& dataset, const std::string& path) {
    write_file(path, truth_to_jsonl(truth, dataset));
}

std::map<std::string, GroundTruth> load_truth(const std::string& path) {
    return truth_from_jsonl(read_file(path));
}

std::vector<Problem> load_problems(const std::string& path) {
    return problems_from_jsonl(read_file(path));
}

}  // namespace triage

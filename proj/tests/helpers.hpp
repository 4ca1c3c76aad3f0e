#pragma once

#include <string>
#include <vector>

#include "triage/pool.hpp"

namespace triage::test {

struct ItemSpec {
    std::int64_t cost;
    bool solvable;
    double value = 1.0;
};

inline TaskPool make_pool(const std::vector<ItemSpec>& items, double alpha) {
    TaskPool pool;
    pool.id = "test-pool";
    pool.dataset = "test";
    for (std::size_t i = 0; i < items.size(); ++i) {
        Problem p;
        p.id = "q" + std::to_string(i + 1);
        p.text = "problem " + std::to_string(i + 1);
        p.value = items[i].value;
        p.dataset = pool.dataset;
        pool.problems.push_back(p);
        GroundTruth t;
        t.problem_id = p.id;
        t.solvable = items[i].solvable;
        t.cost = items[i].cost;
        pool.truth[p.id] = t;
    }
    compute_budget(pool, alpha);
    return pool;
}

// The worked four-item pool: costs {100,200,300,400}, y {1,1,0,1}, v = 1,
// alpha = 0.5 -> B = 500, V_oracle = 2, exact random mean = 1.25.
inline TaskPool reference_pool() {
    return make_pool({{100, true}, {200, true}, {300, false}, {400, true}}, 0.5);
}

}  // namespace triage::test

#include "triage/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "triage/errors.hpp"
#include "triage/rng.hpp"

namespace triage {

namespace {

struct Item {
    double value;
    std::int64_t cost;
    bool solvable;
};

std::vector<Item> gradeable_items(const TaskPool& pool) {
    std::vector<Item> items;
    items.reserve(pool.problems.size());
    for (const auto& p : pool.problems) {
        const GroundTruth& t = pool.truth_for(p.id);
        items.push_back(Item{p.value, t.cost, t.solvable});
    }
    return items;
}

bool all_integral(const std::vector<Item>& items) {
    for (const auto& it : items)
        if (it.value != std::floor(it.value)) return false;
    return true;
}

// dp over achievable value: minimum cost to collect exactly v points.
double knapsack_value_dp(const std::vector<Item>& items, std::int64_t budget) {
    std::int64_t value_sum = 0;
    for (const auto& it : items)
        if (it.solvable) value_sum += static_cast<std::int64_t>(it.value);
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 2;
    std::vector<std::int64_t> min_cost(static_cast<std::size_t>(value_sum) + 1,
                                       kInf);
    min_cost[0] = 0;
    for (const auto& it : items) {
        if (!it.solvable) continue;  // y = 0 items never help an optimum
        const auto v = static_cast<std::int64_t>(it.value);
        for (std::int64_t w = value_sum; w >= v; --w) {
            const auto with = min_cost[static_cast<std::size_t>(w - v)];
            if (with + it.cost < min_cost[static_cast<std::size_t>(w)])
                min_cost[static_cast<std::size_t>(w)] = with + it.cost;
        }
    }
    for (std::int64_t w = value_sum; w >= 0; --w)
        if (min_cost[static_cast<std::size_t>(w)] <= budget)
            return static_cast<double>(w);
    return 0.0;
}

// capacity dp fallback for non-integral values; pools that need it are small.
double knapsack_capacity_dp(const std::vector<Item>& items, std::int64_t budget) {
    if (budget < 0) return 0.0;
    std::vector<double> best(static_cast<std::size_t>(budget) + 1, 0.0);
    for (const auto& it : items) {
        if (!it.solvable) continue;
        for (std::int64_t w = budget; w >= it.cost; --w) {
            const double with = best[static_cast<std::size_t>(w - it.cost)] + it.value;
            if (with > best[static_cast<std::size_t>(w)])
                best[static_cast<std::size_t>(w)] = with;
        }
    }
    return best[static_cast<std::size_t>(budget)];
}

double run_shuffled(const std::vector<Item>& items,
                    const std::vector<std::size_t>& order, std::int64_t budget,
                    RandomBaseline mode) {
    std::int64_t remaining = budget;
    double achieved = 0.0;
    for (std::size_t idx : order) {
        const Item& it = items[idx];
        if (it.cost > remaining) {
            if (mode == RandomBaseline::StopAtInfeasible) break;
            continue;  // skip variant draws the next feasible item
        }
        remaining -= it.cost;
        if (it.solvable) achieved += it.value;
    }
    return achieved;
}

}  // namespace

double oracle_value(const TaskPool& pool) {
    std::vector<Item> items = gradeable_items(pool);
    if (all_integral(items)) return knapsack_value_dp(items, pool.budget);
    return knapsack_capacity_dp(items, pool.budget);
}

double oracle_value_uniform(const TaskPool& pool) {
    std::vector<Item> items = gradeable_items(pool);
    double uniform = items.empty() ? 1.0 : items.front().value;
    std::vector<std::int64_t> costs;
    for (const auto& it : items) {
        if (it.value != uniform)
            throw NonUniformValues("oracle_value_uniform requires equal values");
        if (it.solvable) costs.push_back(it.cost);
    }
    std::sort(costs.begin(), costs.end());
    std::int64_t spent = 0;
    std::size_t m = 0;
    for (; m < costs.size() && spent + costs[m] <= pool.budget; ++m)
        spent += costs[m];
    return static_cast<double>(m) * uniform;
}

ReferenceValues random_reference(const TaskPool& pool, int samples,
                                 std::uint64_t seed, RandomBaseline mode) {
    if (samples < 1) throw ConfigError("samples must be >= 1");
    std::vector<Item> items = gradeable_items(pool);
    std::vector<std::size_t> order(items.size());
    double total = 0.0;
    for (int s = 0; s < samples; ++s) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(s)));
        rng.shuffle(order);
        total += run_shuffled(items, order, pool.budget, mode);
    }
    ReferenceValues out;
    out.v_oracle = oracle_value(pool);
    out.v_random_mean = total / samples;
    out.v_random_samples = samples;
    out.seed = seed;
    return out;
}

double exact_random_reference(const TaskPool& pool, RandomBaseline mode) {
    std::vector<Item> items = gradeable_items(pool);
    if (items.size() > 10)
        throw PoolTooLarge("exact_random_reference is limited to n <= 10");
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double total = 0.0;
    std::uint64_t count = 0;
    do {
        total += run_shuffled(items, order, pool.budget, mode);
        ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    return total / static_cast<double>(count);
}

}  // namespace triage

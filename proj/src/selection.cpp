#include "fedcarbon/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedcarbon/errors.hpp"
#include "fedcarbon/rng.hpp"

namespace fedcarbon {

namespace {

double statistical_utility(std::size_t size, double sum_of_squares) {
    if (size == 0) return 0.0;
    return static_cast<double>(size) *
           std::sqrt(sum_of_squares / static_cast<double>(size));
}

double lookup(const std::map<int, double>& m, int id, const char* what) {
    const auto it = m.find(id);
    if (it == m.end())
        throw ConfigError(std::string(what) + " missing for client " +
                          std::to_string(id));
    return it->second;
}

}  // namespace

std::vector<ClientUtility> probing_utility(
    const std::map<int, std::size_t>& sizes,
    const std::map<int, PerSampleGradStats>& grad_stats) {
    std::vector<ClientUtility> out;
    out.reserve(sizes.size());
    for (const auto& [id, size] : sizes) {
        const auto it = grad_stats.find(id);
        if (it == grad_stats.end())
            throw ConfigError("probing_utility: no gradient stats for client " +
                              std::to_string(id));
        if (it->second.count != size)
            throw ConfigError("probing_utility: stats count " +
                              std::to_string(it->second.count) +
                              " does not match dataset size " +
                              std::to_string(size) + " for client " +
                              std::to_string(id));
        out.push_back(ClientUtility{
            id, statistical_utility(size, it->second.mean_square *
                                              static_cast<double>(size)),
            UtilitySource::ProbingGradNorm});
    }
    if (grad_stats.size() != sizes.size())
        throw ConfigError("probing_utility: stats cover unknown clients");
    return out;
}

std::vector<ClientUtility> loss_utility(
    const std::map<int, std::size_t>& sizes,
    const std::map<int, std::vector<double>>& per_sample_losses) {
    std::vector<ClientUtility> out;
    out.reserve(sizes.size());
    for (const auto& [id, size] : sizes) {
        const auto it = per_sample_losses.find(id);
        if (it == per_sample_losses.end())
            throw ConfigError("loss_utility: no losses for client " +
                              std::to_string(id));
        if (it->second.size() != size)
            throw ConfigError("loss_utility: loss count does not match size for client " +
                              std::to_string(id));
        double ss = 0.0;
        for (double l : it->second) ss += l * l;
        out.push_back(ClientUtility{id, statistical_utility(size, ss),
                                    UtilitySource::RunningLoss});
    }
    if (per_sample_losses.size() != sizes.size())
        throw ConfigError("loss_utility: losses cover unknown clients");
    return out;
}

std::set<int> threshold_filter(const std::vector<ClientUtility>& utilities,
                               double c) {
    if (utilities.empty()) throw ConfigError("threshold_filter: no utilities");
    if (c < 0.0 || c > 1.0)
        throw ConfigError("threshold_filter: c must lie in [0, 1]");
    double max_u = 0.0;
    for (const auto& u : utilities) max_u = std::max(max_u, u.utility);
    const double cutoff = c * max_u;
    std::set<int> retained;
    for (const auto& u : utilities)
        if (u.utility >= cutoff) retained.insert(u.client_id);
    return retained;
}

SelectionDecision select_random(const std::vector<int>& pool, int k,
                                std::uint64_t nonce) {
    if (pool.empty()) throw ConfigError("select_random: empty pool");
    if (k < 1) throw ConfigError("select_random: K must be >= 1");

    std::vector<int> ids = pool;
    std::sort(ids.begin(), ids.end());
    Rng rng(nonce);
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                   ids.size());
    // partial Fisher-Yates
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.uniform_int(ids.size() - i);
        std::swap(ids[i], ids[j]);
    }
    SelectionDecision dec;
    dec.selected.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
    return dec;
}

SelectionDecision select_topk_utility(const std::vector<int>& pool,
                                      const std::map<int, double>& utilities,
                                      int k, double epsilon,
                                      std::uint64_t nonce) {
    if (pool.empty()) throw ConfigError("select_topk_utility: empty pool");
    if (k < 1) throw ConfigError("select_topk_utility: K must be >= 1");
    if (epsilon < 0.0 || epsilon > 1.0)
        throw ConfigError("select_topk_utility: epsilon must lie in [0, 1]");

    std::vector<int> remaining = pool;
    std::sort(remaining.begin(), remaining.end());
    Rng rng(nonce);
    const std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(k), remaining.size());

    SelectionDecision dec;
    for (std::size_t slot = 0; slot < take; ++slot) {
        std::size_t pick;
        if (epsilon > 0.0 && rng.uniform() < epsilon) {
            pick = rng.uniform_int(remaining.size());
        } else {
            pick = 0;
            double best = -1.0;
            bool best_unknown = false;
            for (std::size_t i = 0; i < remaining.size(); ++i) {
                const auto it = utilities.find(remaining[i]);
                const bool unknown = it == utilities.end();
                // unknown utility counts as +infinity: explore those first
                if (unknown && !best_unknown) {
                    pick = i;
                    best_unknown = true;
                } else if (!unknown && !best_unknown && it->second > best) {
                    pick = i;
                    best = it->second;
                }
            }
        }
        dec.selected.push_back(remaining[pick]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return dec;
}

namespace {

// Candidate subsets are compared on canonical sums (accumulated in ascending
// id order) so that equal-value ties are detected reliably.
struct Candidate {
    double value = -1.0;
    double cost = 0.0;
    std::vector<int> ids;  // sorted ascending

    bool beats(const Candidate& other) const {
        if (other.value < 0.0) return true;
        if (value != other.value) return value > other.value;
        if (cost != other.cost) return cost < other.cost;
        return std::lexicographical_compare(ids.begin(), ids.end(),
                                            other.ids.begin(), other.ids.end());
    }
};

struct Item {
    int id;
    double utility;
    double cost;
};

struct BudgetedSearch {
    std::vector<Item> items;  // density order
    double budget;
    std::size_t max_take;
    Candidate best;
    std::vector<int> chosen;

    // Upper bound from the current node: remaining slots filled with the best
    // remaining utilities (budget ignored), capped by the fractional knapsack
    // relaxation in density order (cardinality ignored). Both relaxations are
    // valid, so their minimum is too.
    double bound(std::size_t pos, double value, double cost_used,
                 std::size_t taken) const {
        const std::size_t slots = max_take - taken;
        if (slots == 0) return value;
        const double budget_left = budget - cost_used;

        std::vector<double> utils;
        double frac = 0.0, remaining = budget_left;
        for (std::size_t i = pos; i < items.size(); ++i) {
            const Item& it = items[i];
            if (it.cost > budget_left) continue;  // individually unaffordable
            utils.push_back(it.utility);
            if (it.cost <= remaining) {
                frac += it.utility;
                remaining -= it.cost;
            } else if (remaining > 0.0 && it.cost > 0.0) {
                frac += it.utility * (remaining / it.cost);
                remaining = 0.0;
            }
        }
        std::sort(utils.begin(), utils.end(), std::greater<double>());
        double top = 0.0;
        for (std::size_t i = 0; i < std::min(slots, utils.size()); ++i)
            top += utils[i];
        return value + std::min(top, frac);
    }

    std::map<int, const Item*> by_id;

    // Canonical sums accumulate in ascending id order, so equal subsets always
    // produce identical doubles and the tie-break rules fire reliably.
    Candidate canonicalize(std::vector<int> ids) const {
        Candidate cand;
        std::sort(ids.begin(), ids.end());
        cand.value = 0.0;
        cand.cost = 0.0;
        for (int id : ids) {
            const Item* it = by_id.at(id);
            cand.value += it->utility;
            cand.cost += it->cost;
        }
        cand.ids = std::move(ids);
        return cand;
    }

    void offer(std::vector<int> ids) {
        Candidate cand = canonicalize(std::move(ids));
        if (cand.beats(best)) best = std::move(cand);
    }

    void finish_candidate(double running_value) {
        // running_value differs from the canonical sum only by rounding noise;
        // skip clearly-dominated leaves cheaply, canonicalize near-ties
        if (best.value >= 0.0 &&
            running_value < best.value - 1e-9 * (1.0 + std::abs(best.value)))
            return;
        offer(chosen);
    }

    void dfs(std::size_t pos, double value, double cost_used, std::size_t taken) {
        if (pos == items.size() || taken == max_take) {
            finish_candidate(value);
            return;
        }
        const double ub = bound(pos, value, cost_used, taken);
        // small slack keeps exact ties alive for the tie-break rules
        if (best.value >= 0.0 && ub < best.value - 1e-9 * (1.0 + std::abs(best.value)))
            return;

        const Item& it = items[pos];
        if (cost_used + it.cost <= budget) {
            chosen.push_back(it.id);
            dfs(pos + 1, value + it.utility, cost_used + it.cost, taken + 1);
            chosen.pop_back();
        }
        dfs(pos + 1, value, cost_used, taken);
    }

    // Greedy incumbents (by density and by utility) before the search: the
    // bound then prunes most of the tree on the easy instances.
    void seed_incumbents() {
        std::vector<int> greedy;
        double cost_used = 0.0;
        for (const Item& it : items) {
            if (greedy.size() >= max_take) break;
            if (cost_used + it.cost <= budget) {
                greedy.push_back(it.id);
                cost_used += it.cost;
            }
        }
        if (!greedy.empty()) offer(std::move(greedy));

        std::vector<Item> by_utility = items;
        std::sort(by_utility.begin(), by_utility.end(),
                  [](const Item& a, const Item& b) {
                      if (a.utility != b.utility) return a.utility > b.utility;
                      return a.id < b.id;
                  });
        std::vector<int> top;
        cost_used = 0.0;
        for (const Item& it : by_utility) {
            if (top.size() >= max_take) break;
            if (cost_used + it.cost <= budget) {
                top.push_back(it.id);
                cost_used += it.cost;
            }
        }
        if (!top.empty()) offer(std::move(top));
    }
};

}  // namespace

SelectionDecision select_budgeted(const std::vector<int>& pool,
                                  const std::map<int, double>& utilities,
                                  const std::map<int, double>& costs,
                                  double budget, int k) {
    if (pool.empty()) throw ConfigError("select_budgeted: empty pool");
    if (k < 1) throw ConfigError("select_budgeted: K must be >= 1");
    if (budget < 0.0) throw ConfigError("select_budgeted: negative budget");

    BudgetedSearch search;
    search.budget = budget;
    search.max_take = std::min<std::size_t>(static_cast<std::size_t>(k), pool.size());
    for (int id : pool) {
        const double u = lookup(utilities, id, "select_budgeted: utility");
        const double c = lookup(costs, id, "select_budgeted: cost");
        if (u < 0.0 || !std::isfinite(u))
            throw ConfigError("select_budgeted: utility must be finite and >= 0 for client " +
                              std::to_string(id));
        if (c < 0.0 || !std::isfinite(c))
            throw ConfigError("select_budgeted: cost must be finite and >= 0 for client " +
                              std::to_string(id));
        search.items.push_back(Item{id, u, c});
    }
    // density order (zero cost first) makes the fractional bound tight early
    std::sort(search.items.begin(), search.items.end(),
              [](const Item& a, const Item& b) {
                  const double da = a.cost > 0.0
                                        ? a.utility / a.cost
                                        : std::numeric_limits<double>::infinity();
                  const double db = b.cost > 0.0
                                        ? b.utility / b.cost
                                        : std::numeric_limits<double>::infinity();
                  if (da != db) return da > db;
                  if (a.utility != b.utility) return a.utility > b.utility;
                  return a.id < b.id;
              });
    for (const Item& it : search.items) search.by_id[it.id] = &it;
    search.seed_incumbents();
    search.dfs(0, 0.0, 0.0, 0);

    SelectionDecision dec;
    dec.selected = search.best.ids;  // ascending ids
    dec.budget_spent = search.best.cost;

    // fill leftover slots with zero-cost clients, best utility first
    if (dec.selected.size() < search.max_take) {
        std::vector<Item> free_items;
        for (const Item& it : search.items)
            if (it.cost == 0.0 &&
                !std::binary_search(dec.selected.begin(), dec.selected.end(), it.id))
                free_items.push_back(it);
        std::sort(free_items.begin(), free_items.end(),
                  [](const Item& a, const Item& b) {
                      if (a.utility != b.utility) return a.utility > b.utility;
                      return a.id < b.id;
                  });
        for (const Item& it : free_items) {
            if (dec.selected.size() >= search.max_take) break;
            dec.selected.push_back(it.id);
            dec.fallback_fill_count += 1;
        }
        std::sort(dec.selected.begin(), dec.selected.end());
    }
    return dec;
}

BudgetState make_budget_state(double total_budget, int rounds) {
    if (rounds < 1) throw ConfigError("make_budget_state: rounds must be >= 1");
    if (total_budget < 0.0)
        throw ConfigError("make_budget_state: negative total budget");
    BudgetState st;
    st.total_budget = total_budget;
    st.per_round_allotment = total_budget / static_cast<double>(rounds);
    st.available = st.per_round_allotment;
    return st;
}

BudgetState budget_update(const BudgetState& state, double spent) {
    if (spent < 0.0) throw InvariantError("budget_update: negative spend");
    if (spent > state.available + 1e-9)
        throw InvariantError("budget_update: spent " + std::to_string(spent) +
                             " exceeds available " + std::to_string(state.available));
    BudgetState st = state;
    st.available = std::max(0.0, st.available - spent) + st.per_round_allotment;
    st.spent_cumulative += spent;
    return st;
}

}  // namespace fedcarbon

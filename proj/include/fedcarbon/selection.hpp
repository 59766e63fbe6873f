#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "fedcarbon/model.hpp"

namespace fedcarbon {

enum class UtilitySource { ProbingGradNorm, RunningLoss };

/// Oort-style statistical utility of one client:
/// U(i) = |B_i| * sqrt((1/|B_i|) * sum_k g_k^2), where g_k is either the
/// per-sample gradient L2 norm (probing variant) or the per-sample loss.
struct ClientUtility {
    int client_id = 0;
    double utility = 0.0;
    UtilitySource source = UtilitySource::ProbingGradNorm;
};

/// Per-round carbon allowance with carryover of the unused share.
struct BudgetState {
    double total_budget = 0.0;
    double per_round_allotment = 0.0;
    double available = 0.0;
    double spent_cumulative = 0.0;
};

struct SelectionDecision {
    int round = -1;
    std::vector<int> selected;
    double budget_spent = 0.0;
    int fallback_fill_count = 0;
};

std::vector<ClientUtility> probing_utility(
    const std::map<int, std::size_t>& sizes,
    const std::map<int, PerSampleGradStats>& grad_stats);

std::vector<ClientUtility> loss_utility(
    const std::map<int, std::size_t>& sizes,
    const std::map<int, std::vector<double>>& per_sample_losses);

/// Retains clients with utility >= c * max(utility); boundary inclusive.
std::set<int> threshold_filter(const std::vector<ClientUtility>& utilities,
                               double c);

/// Uniform sample without replacement of min(K, |pool|) clients.
SelectionDecision select_random(const std::vector<int>& pool, int k,
                                std::uint64_t nonce);

/// Greedy top-K by utility with per-slot epsilon exploration. Clients absent
/// from `utilities` count as +infinity so they are explored first; ties go to
/// the lower id.
SelectionDecision select_topk_utility(const std::vector<int>& pool,
                                      const std::map<int, double>& utilities,
                                      int k, double epsilon,
                                      std::uint64_t nonce);

/// Exactly optimal cardinality-constrained knapsack:
///   max sum(utility) s.t. sum(cost) <= budget, |S| <= K
/// via branch and bound. Ties resolve by lower total cost, then by the
/// lexicographically smallest id set. Leftover slots are filled with
/// zero-cost clients in descending utility order.
SelectionDecision select_budgeted(const std::vector<int>& pool,
                                  const std::map<int, double>& utilities,
                                  const std::map<int, double>& costs,
                                  double budget, int k);

BudgetState make_budget_state(double total_budget, int rounds);

/// Consumes `spent` and rolls the unused remainder plus the next round's
/// allotment forward. Overspending beyond 1e-9 g is an invariant violation.
BudgetState budget_update(const BudgetState& state, double spent);

}  // namespace fedcarbon

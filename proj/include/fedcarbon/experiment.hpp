#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedcarbon/sim.hpp"

namespace fedcarbon {

/// A grid of (strategy, budget fraction, seed) simulation cells sharing one
/// base configuration.
struct ExperimentPlan {
    SimConfig base;
    std::vector<std::uint64_t> seeds;
    std::vector<double> budget_sweep;  // sorted ascending, >= 0
    std::vector<Strategy> strategies;
    std::string output_dir = "results";
};

struct RunSummary {
    std::string strategy;
    double budget_fraction = 0.0;
    std::uint64_t seed = 0;
    double max_accuracy = 0.0;
    int round_of_max_accuracy = 0;  // first round reaching the maximum
    double emissions_at_max_accuracy_g = 0.0;
    double final_accuracy = 0.0;
    double total_emissions_g = 0.0;
    std::map<int, long long> per_client_selection_counts;
    std::string metrics_file;
};

/// Strict flat key=value config parser ('#' comments). Unknown keys, type
/// mismatches, and constraint violations raise ConfigError naming the key.
/// An empty file yields the defaults. FEDCARBON_TRACE, when set, overrides
/// the trace path.
ExperimentPlan parse_config(const std::string& path);

/// Plan with defaults only (same env override applied).
ExperimentPlan default_plan();

/// Canonical text form; parse_config(serialize_plan(p)) reproduces p.
std::string serialize_plan(const ExperimentPlan& plan);

void validate_plan(const ExperimentPlan& plan);

/// Runs every (strategy, budget, seed) cell. Budget fractions resolve to
/// absolute budgets against the same-seed unconstrained Oort run's total
/// emissions. Writes metrics_<strategy>_<budget>_<seed>.csv per cell plus
/// summary.json, and returns the summaries.
std::vector<RunSummary> run_plan(const ExperimentPlan& plan);

RunSummary summarize(const SimResult& result, const SimConfig& config,
                     const std::string& metrics_file);

/// Metrics CSV header (bit-exact contract with the written files).
extern const char* const kMetricsHeader;

void write_metrics_csv(const std::vector<RoundMetrics>& metrics,
                       const std::string& path);

std::vector<RoundMetrics> read_metrics_csv(const std::string& path);

std::string metrics_file_name(Strategy strategy, double budget_fraction,
                              std::uint64_t seed);

/// Parses "metrics_<strategy>_<budget>_<seed>.csv" back into its parts.
bool parse_metrics_file_name(const std::string& name, std::string& strategy,
                             double& budget_fraction, std::uint64_t& seed);

/// Aggregates selection counts per client and strategy over metrics files and
/// writes a plot-ready CSV: client_id,corrupted,<one column per strategy>.
std::map<std::string, std::vector<long long>> selection_count_report(
    const std::vector<std::string>& metrics_files, int num_clients,
    const std::set<int>& corrupted_ids, const std::string& out_path);

}  // namespace fedcarbon

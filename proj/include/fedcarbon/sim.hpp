#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedcarbon/carbon.hpp"
#include "fedcarbon/data.hpp"
#include "fedcarbon/model.hpp"
#include "fedcarbon/selection.hpp"

namespace fedcarbon {

enum class Strategy { Random, RandomWT, Oort, OortWT, OortCA, OortCAWT };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);
bool strategy_uses_probing(Strategy s);
bool strategy_uses_budget(Strategy s);

enum class FeatureMap { None, BlockContrast };

struct SimConfig {
    // federated protocol
    int rounds = 100;
    int num_clients = 30;
    int clients_per_round = 10;
    int local_epochs = 2;
    int batch_size = 32;
    double lr = 0.001;
    Strategy strategy = Strategy::Oort;
    std::uint64_t seed = 1;

    // probing / thresholding
    double threshold_c = 0.5;

    // plain-Oort exploration (the thresholded variants replace it by probing)
    double oort_epsilon = 0.1;
    double oort_epsilon_decay = 0.98;

    // carbon budget; budget_total_g is resolved from budget_fraction times the
    // unconstrained-Oort emission baseline by the experiment layer, or set
    // directly (may be +infinity)
    double budget_fraction = 1.0;
    double budget_total_g = -1.0;  // < 0 means unresolved

    // data
    int num_samples = 6000;
    int feature_dim = 16;
    int num_classes = 10;
    double dirichlet_alpha = 10.0;
    int min_samples_per_client = 20;
    double test_fraction = 0.2;
    std::set<int> noisy_client_ids = {0, 1, 2, 3, 4, 5};
    double noise_sigma = 1.0;

    // model
    std::vector<int> hidden_dims = {32};
    FeatureMap feature_map = FeatureMap::None;
    int feature_block = 1;

    // carbon trace: path wins when set, otherwise a synthetic trace
    std::string trace_path;
    int trace_regions = 30;
    int trace_hours = 0;  // 0 -> rounds
    double trace_curtail_prob = 0.1;
};

void validate_config(const SimConfig& config);

struct RoundMetrics {
    int round = 0;
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    double emissions_g = 0.0;
    double cumulative_emissions_g = 0.0;  // includes probing emissions
    double budget_available_g = 0.0;      // post-carryover; +inf when unbudgeted
    std::vector<int> selected;
    int fallback_fill_count = 0;
};

struct ProbingResult {
    std::map<int, PerSampleGradStats> grad_stats;
    std::map<int, std::vector<double>> initial_losses;
    double emissions_g = 0.0;
};

struct SimResult {
    std::vector<RoundMetrics> metrics;
    EmissionsLedger ledger;
    RegionAssignment assignment;
    std::set<int> retained_pool;        // after threshold filtering (all ids if unfiltered)
    std::set<int> corrupted_ids;        // ground truth, for reporting
    std::vector<ClientUtility> probing_utilities;  // empty when no probing ran
};

/// Client shards and held-out test set in raw feature space, exactly as
/// run_simulation builds them for this config.
struct DataBundle {
    std::vector<ClientDataset> clients;
    std::vector<Sample> test;
};

DataBundle build_data(const SimConfig& config);

/// Per-sample gradient norms and losses of `params` over every client's full
/// dataset; no parameter update. Emissions: every client, 1 kWh, hour-0
/// effective intensities.
ProbingResult run_probing_round(const std::vector<ClientDataset>& clients,
                                const ModelParams& params,
                                const RegionAssignment& assignment,
                                const CarbonTrace& trace);

/// Size-weighted coordinate-wise average of client models.
ModelParams fedavg(const std::vector<std::pair<ModelParams, double>>& updates);

/// One federated run: construction performs data synthesis, partitioning,
/// corruption, trace/region setup, model init, and (per strategy) the probing
/// round with threshold filtering. Each run_round() then executes selection,
/// local training, aggregation, evaluation, and emissions/budget accounting
/// for the next hour.
class Simulation {
public:
    explicit Simulation(const SimConfig& config);

    bool done() const { return round_ >= config_.rounds; }
    RoundMetrics run_round();

    const SimConfig& config() const { return config_; }
    const std::set<int>& retained_pool() const { return result_.retained_pool; }

    /// Metrics and ledger accumulated so far (moves them out).
    SimResult take_result() { return std::move(result_); }

private:
    SelectionDecision select(int t);

    SimConfig config_;
    std::vector<ClientDataset> clients_;  // model-space features
    std::vector<Sample> test_;
    CarbonTrace trace_;
    RegionAssignment assignment_;
    ModelParams global_;
    std::vector<int> pool_;
    std::map<int, double> frozen_budget_utilities_;
    std::map<int, double> running_loss_utilities_;
    BudgetState budget_;
    bool budgeted_ = false;
    int round_ = 0;
    SimResult result_;
};

/// Runs a Simulation to completion: `rounds` hourly training rounds, fully
/// deterministic per config.
SimResult run_simulation(const SimConfig& config);

}  // namespace fedcarbon

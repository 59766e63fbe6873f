#include "fedcarbon/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedcarbon/errors.hpp"
#include "fedcarbon/rng.hpp"

namespace fedcarbon {

namespace {

// stream tags for deriving independent RNG streams from the run seed
constexpr std::uint64_t kStreamData = 0x01;
constexpr std::uint64_t kStreamSplit = 0x02;
constexpr std::uint64_t kStreamPartition = 0x03;
constexpr std::uint64_t kStreamCorrupt = 0x04;
constexpr std::uint64_t kStreamTrace = 0x05;
constexpr std::uint64_t kStreamAssign = 0x06;
constexpr std::uint64_t kStreamModel = 0x07;
constexpr std::uint64_t kStreamSelect = 0x08;
constexpr std::uint64_t kStreamTrain = 0x09;

}  // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Random: return "random";
        case Strategy::RandomWT: return "random_wt";
        case Strategy::Oort: return "oort";
        case Strategy::OortWT: return "oort_wt";
        case Strategy::OortCA: return "oort_ca";
        case Strategy::OortCAWT: return "oort_ca_wt";
    }
    return "?";
}

Strategy parse_strategy(const std::string& name) {
    for (Strategy s : {Strategy::Random, Strategy::RandomWT, Strategy::Oort,
                       Strategy::OortWT, Strategy::OortCA, Strategy::OortCAWT})
        if (name == strategy_name(s)) return s;
    throw ConfigError("unknown strategy '" + name + "'");
}

bool strategy_uses_probing(Strategy s) {
    return s == Strategy::RandomWT || s == Strategy::OortWT ||
           s == Strategy::OortCA || s == Strategy::OortCAWT;
}

bool strategy_uses_budget(Strategy s) {
    return s == Strategy::OortCA || s == Strategy::OortCAWT;
}

bool strategy_uses_threshold(Strategy s) {
    return s == Strategy::RandomWT || s == Strategy::OortWT ||
           s == Strategy::OortCAWT;
}

void validate_config(const SimConfig& c) {
    if (c.rounds < 1) throw ConfigError("rounds must be >= 1");
    if (c.num_clients < 1) throw ConfigError("num_clients must be >= 1");
    if (c.clients_per_round < 1 || c.clients_per_round > c.num_clients)
        throw ConfigError("clients_per_round must lie in [1, num_clients]");
    if (c.local_epochs < 0) throw ConfigError("local_epochs must be >= 0");
    if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (c.lr <= 0.0) throw ConfigError("lr must be > 0");
    if (c.threshold_c < 0.0 || c.threshold_c > 1.0)
        throw ConfigError("threshold_c must lie in [0, 1]");
    if (c.oort_epsilon < 0.0 || c.oort_epsilon > 1.0)
        throw ConfigError("oort_epsilon must lie in [0, 1]");
    if (c.oort_epsilon_decay <= 0.0 || c.oort_epsilon_decay > 1.0)
        throw ConfigError("oort_epsilon_decay must lie in (0, 1]");
    if (c.budget_fraction < 0.0) throw ConfigError("budget_fraction must be >= 0");
    if (c.num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (c.num_samples < c.num_classes)
        throw ConfigError("num_samples must be >= num_classes");
    if (c.feature_dim < 2) throw ConfigError("feature_dim must be >= 2");
    if (c.dirichlet_alpha <= 0.0) throw ConfigError("dirichlet_alpha must be > 0");
    if (c.min_samples_per_client < 0)
        throw ConfigError("min_samples_per_client must be >= 0");
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0))
        throw ConfigError("test_fraction must lie strictly between 0 and 1");
    if (c.noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    for (int id : c.noisy_client_ids)
        if (id < 0 || id >= c.num_clients)
            throw ConfigError("noisy_client_ids entry " + std::to_string(id) +
                              " outside [0, num_clients)");
    if (c.hidden_dims.empty()) throw ConfigError("hidden must list at least one width");
    for (int h : c.hidden_dims)
        if (h < 1) throw ConfigError("hidden widths must be >= 1");
    if (c.feature_map == FeatureMap::BlockContrast) {
        if (c.feature_block < 1) throw ConfigError("feature_block must be >= 1");
        if (c.feature_dim % (2 * c.feature_block) != 0)
            throw ConfigError("feature_dim must be a multiple of 2*feature_block");
    }
    if (c.trace_path.empty()) {
        if (c.trace_regions < 1) throw ConfigError("trace_regions must be >= 1");
        if (c.trace_curtail_prob < 0.0 || c.trace_curtail_prob > 1.0)
            throw ConfigError("trace_curtail_prob must lie in [0, 1]");
        if (c.trace_hours != 0 && c.trace_hours < c.rounds)
            throw ConfigError("trace_hours shorter than rounds");
    }
}

ProbingResult run_probing_round(const std::vector<ClientDataset>& clients,
                                const ModelParams& params,
                                const RegionAssignment& assignment,
                                const CarbonTrace& trace) {
    ProbingResult res;
    std::vector<int> all_ids;
    for (const ClientDataset& c : clients) {
        all_ids.push_back(c.client_id);
        std::vector<double> norms;
        std::vector<double> losses;
        norms.reserve(c.samples.size());
        losses.reserve(c.samples.size());
        for (std::size_t k = 0; k < c.samples.size(); ++k) {
            const Sample& s = c.samples[k];
            std::vector<double> grad;
            try {
                grad = per_sample_grad(params, s);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (client " +
                                   std::to_string(c.client_id) + ", sample " +
                                   std::to_string(k) + ")");
            }
            double ss = 0.0;
            for (double g : grad) ss += g * g;
            norms.push_back(std::sqrt(ss));
            losses.push_back(loss(forward(params, s.features), s.label));
        }
        res.grad_stats[c.client_id] = make_grad_stats(std::move(norms));
        res.initial_losses[c.client_id] = std::move(losses);
    }
    res.emissions_g = round_emissions(all_ids, assignment, trace, 0);
    return res;
}

ModelParams fedavg(const std::vector<std::pair<ModelParams, double>>& updates) {
    if (updates.empty()) throw ConfigError("fedavg: no updates");

    const ModelParams& ref = updates.front().first;
    double weight_sum = 0.0;
    for (const auto& [params, w] : updates) {
        if (params.param_count() != ref.param_count() || params.shapes.size() != ref.shapes.size())
            throw ShapeError("fedavg: mismatched model shapes");
        if (w <= 0.0) throw ConfigError("fedavg: weights must be > 0");
        weight_sum += w;
    }
    if (updates.size() == 1) return ref;

    ModelParams out = ref;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double acc = 0.0;
        for (const auto& [params, w] : updates) acc += w * params.values[i];
        out.values[i] = acc / weight_sum;
    }
    return out;
}

DataBundle build_data(const SimConfig& config) {
    const std::uint64_t seed = config.seed;
    const std::vector<Sample> raw = make_dataset(
        config.num_samples, config.feature_dim, config.num_classes,
        derive_seed(seed, kStreamData));
    auto [train_raw, test_raw] =
        split_test(raw, config.test_fraction, derive_seed(seed, kStreamSplit));

    PartitionSpec part;
    part.num_clients = config.num_clients;
    part.alpha = config.dirichlet_alpha;
    part.seed = derive_seed(seed, kStreamPartition);
    part.min_samples_per_client = config.min_samples_per_client;

    DataBundle bundle;
    bundle.clients = corrupt_clients(dirichlet_partition(train_raw, part),
                                     config.noisy_client_ids, config.noise_sigma,
                                     derive_seed(seed, kStreamCorrupt));
    bundle.test = std::move(test_raw);
    return bundle;
}

Simulation::Simulation(const SimConfig& config) : config_(config) {
    validate_config(config_);
    const std::uint64_t seed = config_.seed;

    DataBundle bundle = build_data(config_);
    clients_ = std::move(bundle.clients);
    test_ = std::move(bundle.test);

    // optional fixed front end between the stored features and the classifier
    if (config_.feature_map == FeatureMap::BlockContrast) {
        for (ClientDataset& c : clients_)
            c.samples = block_contrast_features(c.samples, config_.feature_block);
        test_ = block_contrast_features(test_, config_.feature_block);
    }
    const std::size_t model_input = test_.front().features.size();

    // carbon trace and regions
    trace_ = config_.trace_path.empty()
                 ? synth_trace(config_.trace_regions,
                               std::max(config_.rounds, config_.trace_hours),
                               derive_seed(seed, kStreamTrace),
                               config_.trace_curtail_prob)
                 : load_trace(config_.trace_path);
    if (trace_.hours < static_cast<std::size_t>(config_.rounds))
        throw ConfigError("trace covers " + std::to_string(trace_.hours) +
                          " hours but the run needs " +
                          std::to_string(config_.rounds));
    assignment_ =
        assign_regions(config_.num_clients, trace_, derive_seed(seed, kStreamAssign));

    // model
    std::vector<std::size_t> layer_dims;
    layer_dims.push_back(model_input);
    for (int h : config_.hidden_dims)
        layer_dims.push_back(static_cast<std::size_t>(h));
    layer_dims.push_back(static_cast<std::size_t>(config_.num_classes));
    global_ = init_params(layer_dims, derive_seed(seed, kStreamModel));

    result_.assignment = assignment_;
    for (const ClientDataset& c : clients_)
        if (c.corrupted) result_.corrupted_ids.insert(c.client_id);

    std::map<int, std::size_t> sizes;
    for (const ClientDataset& c : clients_) sizes[c.client_id] = c.size();
    for (const ClientDataset& c : clients_) pool_.push_back(c.client_id);
    std::sort(pool_.begin(), pool_.end());

    // probing round: gradient-norm utilities for thresholding, initial loss
    // utilities frozen for the budgeted variants
    if (strategy_uses_probing(config_.strategy)) {
        const ProbingResult probing =
            run_probing_round(clients_, global_, assignment_, trace_);
        result_.ledger.add_probing(probing.emissions_g);
        result_.probing_utilities = probing_utility(sizes, probing.grad_stats);
        if (strategy_uses_threshold(config_.strategy)) {
            result_.retained_pool =
                threshold_filter(result_.probing_utilities, config_.threshold_c);
            pool_.assign(result_.retained_pool.begin(), result_.retained_pool.end());
        }
        if (strategy_uses_budget(config_.strategy)) {
            for (const ClientUtility& u : loss_utility(sizes, probing.initial_losses))
                frozen_budget_utilities_[u.client_id] = u.utility;
        }
    }
    if (result_.retained_pool.empty())
        result_.retained_pool.insert(pool_.begin(), pool_.end());

    budgeted_ = strategy_uses_budget(config_.strategy);
    if (budgeted_) {
        if (config_.budget_total_g < 0.0)
            throw ConfigError(
                "budget_total_g unresolved: budgeted strategies need an absolute "
                "budget (fraction of the Oort emission baseline)");
        budget_ = make_budget_state(config_.budget_total_g, config_.rounds);
    }
}

SelectionDecision Simulation::select(int t) {
    const std::uint64_t nonce =
        derive_seed(config_.seed, kStreamSelect, static_cast<std::uint64_t>(t));
    switch (config_.strategy) {
        case Strategy::Random:
        case Strategy::RandomWT:
            return select_random(pool_, config_.clients_per_round, nonce);
        case Strategy::Oort: {
            const double eps =
                config_.oort_epsilon *
                std::pow(config_.oort_epsilon_decay, static_cast<double>(t));
            return select_topk_utility(pool_, running_loss_utilities_,
                                       config_.clients_per_round, eps, nonce);
        }
        case Strategy::OortWT:
            return select_topk_utility(pool_, running_loss_utilities_,
                                       config_.clients_per_round, 0.0, nonce);
        case Strategy::OortCA:
        case Strategy::OortCAWT: {
            std::map<int, double> costs;
            for (int id : pool_)
                costs[id] = effective_intensity(
                    trace_, assignment_.region_of_client[static_cast<std::size_t>(id)],
                    static_cast<std::size_t>(t));
            return select_budgeted(pool_, frozen_budget_utilities_, costs,
                                   budget_.available, config_.clients_per_round);
        }
    }
    throw InvariantError("unhandled strategy");
}

RoundMetrics Simulation::run_round() {
    if (done()) throw ConfigError("run_round: all rounds already executed");
    const int t = round_++;

    SelectionDecision dec = select(t);
    dec.round = t;

    // local training in ascending client-id order, then size-weighted
    // aggregation; an empty selection leaves the global model untouched
    std::vector<int> train_order = dec.selected;
    std::sort(train_order.begin(), train_order.end());
    OptimizerConfig opt;
    opt.lr = config_.lr;
    std::vector<std::pair<ModelParams, double>> updates;
    for (int id : train_order) {
        const auto it =
            std::find_if(clients_.begin(), clients_.end(),
                         [id](const ClientDataset& c) { return c.client_id == id; });
        const ClientDataset& c = *it;
        LocalTrainResult local = local_train(
            global_, c.samples, config_.local_epochs, config_.batch_size, opt,
            derive_seed(config_.seed, kStreamTrain, static_cast<std::uint64_t>(t),
                        static_cast<std::uint64_t>(id)));
        if (config_.strategy == Strategy::Oort ||
            config_.strategy == Strategy::OortWT) {
            double ss = 0.0;
            for (double l : local.per_sample_losses) ss += l * l;
            running_loss_utilities_[id] =
                static_cast<double>(c.size()) *
                std::sqrt(ss / static_cast<double>(c.size()));
        }
        updates.emplace_back(std::move(local.params), static_cast<double>(c.size()));
    }
    if (!updates.empty()) global_ = fedavg(updates);

    const double emissions = round_emissions(dec.selected, assignment_, trace_,
                                             static_cast<std::size_t>(t));
    result_.ledger.add_round(emissions);
    if (budgeted_) budget_ = budget_update(budget_, dec.budget_spent);

    const EvalResult eval = evaluate(global_, test_);
    RoundMetrics row;
    row.round = t;
    row.test_accuracy = eval.accuracy;
    row.test_loss = eval.mean_loss;
    row.emissions_g = emissions;
    row.cumulative_emissions_g = result_.ledger.cumulative;
    row.budget_available_g =
        budgeted_ ? budget_.available : std::numeric_limits<double>::infinity();
    row.selected = dec.selected;
    row.fallback_fill_count = dec.fallback_fill_count;
    result_.metrics.push_back(row);
    return row;
}

SimResult run_simulation(const SimConfig& config) {
    Simulation sim(config);
    while (!sim.done()) sim.run_round();
    return sim.take_result();
}

}  // namespace fedcarbon

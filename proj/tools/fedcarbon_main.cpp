#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedcarbon/errors.hpp"
#include "fedcarbon/experiment.hpp"
#include "fedcarbon/sim.hpp"

namespace {

using namespace fedcarbon;

std::vector<double> parse_sweep(const std::string& text) {
    std::vector<double> out;
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        // start:end:step
        double start, end, step;
        if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &end, &step) != 3 ||
            step <= 0.0)
            throw fedcarbon::ConfigError("bad --budget-sweep range '" + text + "'");
        for (double f = start; f <= end + 1e-12; f += step)
            out.push_back(std::min(f, end));
    } else {
        for (const auto& tok : CLI::detail::split(text, ','))
            out.push_back(std::stod(tok));
    }
    return out;
}

ExperimentPlan load_plan(const std::string& config_path) {
    return config_path.empty() ? default_plan() : parse_config(config_path);
}

int cmd_simulate(const std::string& config_path, const std::string& output,
                 const std::string& seeds, const std::string& sweep,
                 const std::string& strategy) {
    ExperimentPlan plan = load_plan(config_path);
    if (!output.empty()) plan.output_dir = output;
    if (!seeds.empty()) {
        plan.seeds.clear();
        for (const auto& tok : CLI::detail::split(seeds, ','))
            plan.seeds.push_back(std::stoull(tok));
    }
    if (!sweep.empty()) plan.budget_sweep = parse_sweep(sweep);
    if (!strategy.empty()) plan.strategies = {parse_strategy(strategy)};

    const auto summaries = run_plan(plan);
    std::printf("%-12s %8s %6s %10s %10s %14s %14s\n", "strategy", "budget",
                "seed", "max_acc", "final_acc", "em_at_max_g", "total_em_g");
    for (const RunSummary& s : summaries)
        std::printf("%-12s %8g %6llu %10.4f %10.4f %14.1f %14.1f\n",
                    s.strategy.c_str(), s.budget_fraction,
                    static_cast<unsigned long long>(s.seed), s.max_accuracy,
                    s.final_accuracy, s.emissions_at_max_accuracy_g,
                    s.total_emissions_g);
    std::printf("metrics written to %s\n", plan.output_dir.c_str());
    return 0;
}

// Utility table as the probing round sees it; handy for picking threshold_c.
int cmd_probe(const std::string& config_path) {
    const ExperimentPlan plan = load_plan(config_path);
    SimConfig cfg = plan.base;
    cfg.strategy = Strategy::OortWT;
    cfg.rounds = 1;
    const SimResult res = run_simulation(cfg);

    double max_u = 0.0;
    for (const auto& u : res.probing_utilities) max_u = std::max(max_u, u.utility);
    std::printf("%6s %10s %12s %10s %9s %9s\n", "client", "corrupted", "utility",
                "rel_max", "cutoff_c", "retained");
    for (const auto& u : res.probing_utilities) {
        const bool retained = res.retained_pool.count(u.client_id) > 0;
        std::printf("%6d %10d %12.4f %10.4f %9.3f %9s\n", u.client_id,
                    res.corrupted_ids.count(u.client_id) ? 1 : 0, u.utility,
                    max_u > 0 ? u.utility / max_u : 0.0, cfg.threshold_c,
                    retained ? "yes" : "no");
    }
    return 0;
}

int cmd_export_partition(const std::string& config_path, const std::string& out) {
    const ExperimentPlan plan = load_plan(config_path);
    validate_config(plan.base);
    const DataBundle bundle = build_data(plan.base);
    write_partition_csv(bundle.clients, out);
    std::printf("wrote %zu clients to %s\n", bundle.clients.size(), out.c_str());
    return 0;
}

int cmd_selection_counts(const std::string& config_path, const std::string& dir,
                         const std::string& out) {
    const ExperimentPlan plan = load_plan(config_path);
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string strategy;
        double frac;
        std::uint64_t seed;
        if (entry.is_regular_file() &&
            parse_metrics_file_name(entry.path().filename().string(), strategy,
                                    frac, seed))
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    selection_count_report(files, plan.base.num_clients,
                           plan.base.noisy_client_ids, out);
    std::printf("selection counts written to %s\n", out.c_str());
    return 0;
}

int cmd_trace_synth(int regions, int hours, std::uint64_t seed,
                    double curtail_prob, const std::string& out) {
    write_trace_csv(synth_trace(regions, hours, seed, curtail_prob), out);
    std::printf("wrote %d regions x %d hours to %s\n", regions, hours, out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedcarbon: carbon-aware federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, output, seeds, sweep, strategy;
    auto* simulate = app.add_subcommand(
        "simulate", "run an experiment plan and write metrics CSVs");
    simulate->add_option("--config", config_path, "experiment config file");
    simulate->add_option("--output", output, "output directory");
    simulate->add_option("--seeds", seeds, "comma-separated seed list");
    simulate->add_option("--budget-sweep", sweep,
                         "fractions: comma list or start:end:step");
    simulate->add_option("--strategy", strategy,
                         "random|random_wt|oort|oort_wt|oort_ca|oort_ca_wt");

    std::string probe_config;
    auto* probe = app.add_subcommand(
        "probe", "print per-client probing utilities and threshold outcome");
    probe->add_option("--config", probe_config, "experiment config file");

    std::string part_config, part_out = "partition.csv";
    auto* part = app.add_subcommand("export-partition",
                                    "write the partitioned client data as CSV");
    part->add_option("--config", part_config, "experiment config file");
    part->add_option("--output", part_out, "output CSV path");

    std::string counts_config, counts_dir = "results",
                counts_out = "selection_counts.csv";
    auto* counts = app.add_subcommand(
        "report-selection-counts",
        "aggregate per-client selection counts from metrics CSVs");
    counts->add_option("--config", counts_config, "experiment config file");
    counts->add_option("--dir", counts_dir, "directory with metrics CSVs");
    counts->add_option("--output", counts_out, "output CSV path");

    int tr_regions = 30, tr_hours = 100;
    std::uint64_t tr_seed = 1;
    double tr_curtail = 0.1;
    std::string tr_out = "trace.csv";
    auto* tsynth = app.add_subcommand("trace-synth",
                                      "write a synthetic hourly carbon trace");
    tsynth->add_option("--regions", tr_regions, "number of regions");
    tsynth->add_option("--hours", tr_hours, "number of hours");
    tsynth->add_option("--seed", tr_seed, "generator seed");
    tsynth->add_option("--curtail-prob", tr_curtail, "curtailment probability");
    tsynth->add_option("--output", tr_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            return cmd_simulate(config_path, output, seeds, sweep, strategy);
        if (probe->parsed()) return cmd_probe(probe_config);
        if (part->parsed()) return cmd_export_partition(part_config, part_out);
        if (counts->parsed())
            return cmd_selection_counts(counts_config, counts_dir, counts_out);
        if (tsynth->parsed())
            return cmd_trace_synth(tr_regions, tr_hours, tr_seed, tr_curtail,
                                   tr_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

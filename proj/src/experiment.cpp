#include "fedcarbon/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fedcarbon/errors.hpp"

namespace fedcarbon {

const char* const kMetricsHeader =
    "round,test_accuracy,test_loss,emissions_g,cumulative_emissions_g,"
    "budget_available_g,num_selected,selected_ids,fallback_fill_count";

namespace {

// shortest representation that parses back to the same double, so metrics
// files are lossless and cross-file consistency checks can be exact
std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + value +
                          "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" +
                          value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an unsigned integer, got '" +
                          value + "'");
    }
}

void apply_trace_env(SimConfig& config) {
    if (const char* env = std::getenv("FEDCARBON_TRACE"); env && *env)
        config.trace_path = env;
}

void apply_key(ExperimentPlan& plan, const std::string& key,
               const std::string& value) {
    SimConfig& c = plan.base;
    if (key == "rounds") c.rounds = static_cast<int>(parse_int(key, value));
    else if (key == "num_clients") c.num_clients = static_cast<int>(parse_int(key, value));
    else if (key == "clients_per_round") c.clients_per_round = static_cast<int>(parse_int(key, value));
    else if (key == "local_epochs") c.local_epochs = static_cast<int>(parse_int(key, value));
    else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "lr") c.lr = parse_double(key, value);
    else if (key == "strategy") c.strategy = parse_strategy(value);
    else if (key == "seed") c.seed = parse_u64(key, value);
    else if (key == "threshold_c") c.threshold_c = parse_double(key, value);
    else if (key == "oort_epsilon") c.oort_epsilon = parse_double(key, value);
    else if (key == "oort_epsilon_decay") c.oort_epsilon_decay = parse_double(key, value);
    else if (key == "budget_fraction") c.budget_fraction = parse_double(key, value);
    else if (key == "num_samples") c.num_samples = static_cast<int>(parse_int(key, value));
    else if (key == "feature_dim") c.feature_dim = static_cast<int>(parse_int(key, value));
    else if (key == "num_classes") c.num_classes = static_cast<int>(parse_int(key, value));
    else if (key == "dirichlet_alpha") c.dirichlet_alpha = parse_double(key, value);
    else if (key == "min_samples_per_client") c.min_samples_per_client = static_cast<int>(parse_int(key, value));
    else if (key == "test_fraction") c.test_fraction = parse_double(key, value);
    else if (key == "noise_sigma") c.noise_sigma = parse_double(key, value);
    else if (key == "noisy_client_ids") {
        c.noisy_client_ids.clear();
        for (const std::string& tok : split(value, ',')) {
            const std::string t = trim(tok);
            if (t.empty()) continue;
            c.noisy_client_ids.insert(static_cast<int>(parse_int(key, t)));
        }
    } else if (key == "hidden") {
        c.hidden_dims.clear();
        for (const std::string& tok : split(value, ',')) {
            const std::string t = trim(tok);
            if (t.empty()) continue;
            c.hidden_dims.push_back(static_cast<int>(parse_int(key, t)));
        }
    } else if (key == "feature_map") {
        if (value == "none") c.feature_map = FeatureMap::None;
        else if (value == "block_contrast") c.feature_map = FeatureMap::BlockContrast;
        else throw ConfigError("key 'feature_map': expected none|block_contrast, got '" + value + "'");
    } else if (key == "feature_block") {
        c.feature_block = static_cast<int>(parse_int(key, value));
    } else if (key == "trace") {
        c.trace_path = value;
    } else if (key == "trace_regions") {
        c.trace_regions = static_cast<int>(parse_int(key, value));
    } else if (key == "trace_hours") {
        c.trace_hours = static_cast<int>(parse_int(key, value));
    } else if (key == "trace_curtail_prob") {
        c.trace_curtail_prob = parse_double(key, value);
    } else if (key == "seeds") {
        plan.seeds.clear();
        for (const std::string& tok : split(value, ',')) {
            const std::string t = trim(tok);
            if (t.empty()) continue;
            plan.seeds.push_back(parse_u64(key, t));
        }
    } else if (key == "budget_sweep") {
        plan.budget_sweep.clear();
        for (const std::string& tok : split(value, ',')) {
            const std::string t = trim(tok);
            if (t.empty()) continue;
            plan.budget_sweep.push_back(parse_double(key, t));
        }
    } else if (key == "strategies") {
        plan.strategies.clear();
        for (const std::string& tok : split(value, ',')) {
            const std::string t = trim(tok);
            if (t.empty()) continue;
            plan.strategies.push_back(parse_strategy(t));
        }
    } else if (key == "output_dir") {
        plan.output_dir = value;
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

}  // namespace

void validate_plan(const ExperimentPlan& plan) {
    validate_config(plan.base);
    if (plan.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (plan.strategies.empty()) throw ConfigError("strategies must not be empty");
    if (plan.budget_sweep.empty()) throw ConfigError("budget_sweep must not be empty");
    for (double f : plan.budget_sweep)
        if (f < 0.0 || !std::isfinite(f))
            throw ConfigError("budget_sweep fractions must be finite and >= 0");
    if (!std::is_sorted(plan.budget_sweep.begin(), plan.budget_sweep.end()))
        throw ConfigError("budget_sweep must be sorted ascending");
    if (plan.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

ExperimentPlan default_plan() {
    ExperimentPlan plan;
    plan.seeds = {plan.base.seed};
    plan.budget_sweep = {1.0};
    plan.strategies = {plan.base.strategy};
    apply_trace_env(plan.base);
    return plan;
}

ExperimentPlan parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);

    ExperimentPlan plan;
    bool saw_seeds = false, saw_strategies = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected key=value, got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        apply_key(plan, key, value);
        if (key == "seeds") saw_seeds = true;
        if (key == "strategies") saw_strategies = true;
    }
    if (!saw_seeds) plan.seeds = {plan.base.seed};
    if (!saw_strategies) plan.strategies = {plan.base.strategy};
    if (plan.budget_sweep.empty()) plan.budget_sweep = {1.0};
    apply_trace_env(plan.base);
    validate_plan(plan);
    return plan;
}

std::string serialize_plan(const ExperimentPlan& plan) {
    const SimConfig& c = plan.base;
    std::ostringstream os;
    auto join_i = [](const auto& xs) {
        std::string s;
        for (const auto& x : xs) {
            if (!s.empty()) s += ',';
            s += std::to_string(x);
        }
        return s;
    };
    os << "rounds=" << c.rounds << "\n";
    os << "num_clients=" << c.num_clients << "\n";
    os << "clients_per_round=" << c.clients_per_round << "\n";
    os << "local_epochs=" << c.local_epochs << "\n";
    os << "batch_size=" << c.batch_size << "\n";
    os << "lr=" << fmt(c.lr) << "\n";
    os << "strategy=" << strategy_name(c.strategy) << "\n";
    os << "seed=" << c.seed << "\n";
    os << "threshold_c=" << fmt(c.threshold_c) << "\n";
    os << "oort_epsilon=" << fmt(c.oort_epsilon) << "\n";
    os << "oort_epsilon_decay=" << fmt(c.oort_epsilon_decay) << "\n";
    os << "budget_fraction=" << fmt(c.budget_fraction) << "\n";
    os << "num_samples=" << c.num_samples << "\n";
    os << "feature_dim=" << c.feature_dim << "\n";
    os << "num_classes=" << c.num_classes << "\n";
    os << "dirichlet_alpha=" << fmt(c.dirichlet_alpha) << "\n";
    os << "min_samples_per_client=" << c.min_samples_per_client << "\n";
    os << "test_fraction=" << fmt(c.test_fraction) << "\n";
    os << "noisy_client_ids=" << join_i(c.noisy_client_ids) << "\n";
    os << "noise_sigma=" << fmt(c.noise_sigma) << "\n";
    os << "hidden=" << join_i(c.hidden_dims) << "\n";
    os << "feature_map="
       << (c.feature_map == FeatureMap::None ? "none" : "block_contrast") << "\n";
    os << "feature_block=" << c.feature_block << "\n";
    if (!c.trace_path.empty()) os << "trace=" << c.trace_path << "\n";
    os << "trace_regions=" << c.trace_regions << "\n";
    os << "trace_hours=" << c.trace_hours << "\n";
    os << "trace_curtail_prob=" << fmt(c.trace_curtail_prob) << "\n";
    os << "seeds=" << join_i(plan.seeds) << "\n";
    {
        std::string s;
        for (double f : plan.budget_sweep) {
            if (!s.empty()) s += ',';
            s += fmt(f);
        }
        os << "budget_sweep=" << s << "\n";
    }
    {
        std::string s;
        for (Strategy st : plan.strategies) {
            if (!s.empty()) s += ',';
            s += strategy_name(st);
        }
        os << "strategies=" << s << "\n";
    }
    os << "output_dir=" << plan.output_dir << "\n";
    return os.str();
}

void write_metrics_csv(const std::vector<RoundMetrics>& metrics,
                       const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot open " + path + " for writing");
    f << kMetricsHeader << "\n";
    for (const RoundMetrics& m : metrics) {
        f << m.round << ',' << fmt(m.test_accuracy) << ',' << fmt(m.test_loss)
          << ',' << fmt(m.emissions_g) << ',' << fmt(m.cumulative_emissions_g)
          << ',' << fmt(m.budget_available_g) << ',' << m.selected.size() << ',';
        for (std::size_t i = 0; i < m.selected.size(); ++i) {
            if (i) f << ';';
            f << m.selected[i];
        }
        f << ',' << m.fallback_fill_count << "\n";
    }
    if (!f) throw IngestError("write failed for " + path);
}

std::vector<RoundMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IngestError("cannot open metrics file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw IngestError(path + ": empty metrics file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kMetricsHeader)
        throw IngestError(path + ": unexpected metrics header '" + line + "'");

    std::vector<RoundMetrics> out;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 9)
            throw IngestError(path + ":" + std::to_string(line_no) +
                              ": expected 9 fields");
        RoundMetrics m;
        m.round = static_cast<int>(parse_int("round", fields[0]));
        m.test_accuracy = parse_double("test_accuracy", fields[1]);
        m.test_loss = parse_double("test_loss", fields[2]);
        m.emissions_g = parse_double("emissions_g", fields[3]);
        m.cumulative_emissions_g = parse_double("cumulative_emissions_g", fields[4]);
        m.budget_available_g = parse_double("budget_available_g", fields[5]);
        const auto n_sel = parse_int("num_selected", fields[6]);
        if (!fields[7].empty())
            for (const std::string& tok : split(fields[7], ';'))
                m.selected.push_back(static_cast<int>(parse_int("selected_ids", tok)));
        if (static_cast<long long>(m.selected.size()) != n_sel)
            throw IngestError(path + ":" + std::to_string(line_no) +
                              ": num_selected does not match selected_ids");
        m.fallback_fill_count =
            static_cast<int>(parse_int("fallback_fill_count", fields[8]));
        out.push_back(std::move(m));
    }
    return out;
}

std::string metrics_file_name(Strategy strategy, double budget_fraction,
                              std::uint64_t seed) {
    char frac[32];
    std::snprintf(frac, sizeof frac, "%g", budget_fraction);
    return std::string("metrics_") + strategy_name(strategy) + "_" + frac + "_" +
           std::to_string(seed) + ".csv";
}

bool parse_metrics_file_name(const std::string& name, std::string& strategy,
                             double& budget_fraction, std::uint64_t& seed) {
    const std::string base = std::filesystem::path(name).filename().string();
    if (base.rfind("metrics_", 0) != 0) return false;
    if (base.size() < 12 || base.substr(base.size() - 4) != ".csv") return false;
    const std::string core = base.substr(8, base.size() - 12);
    const auto parts = split(core, '_');
    if (parts.size() < 3) return false;
    try {
        seed = parse_u64("seed", parts.back());
        budget_fraction = parse_double("budget", parts[parts.size() - 2]);
    } catch (const ConfigError&) {
        return false;
    }
    strategy.clear();
    for (std::size_t i = 0; i + 2 < parts.size(); ++i) {
        if (i) strategy += '_';
        strategy += parts[i];
    }
    return !strategy.empty();
}

RunSummary summarize(const SimResult& result, const SimConfig& config,
                     const std::string& metrics_file) {
    RunSummary s;
    s.strategy = strategy_name(config.strategy);
    s.budget_fraction = config.budget_fraction;
    s.seed = config.seed;
    s.metrics_file = metrics_file;
    if (result.metrics.empty()) return s;

    s.max_accuracy = -1.0;
    for (const RoundMetrics& m : result.metrics) {
        if (m.test_accuracy > s.max_accuracy) {
            s.max_accuracy = m.test_accuracy;
            s.round_of_max_accuracy = m.round;
            s.emissions_at_max_accuracy_g = m.cumulative_emissions_g;
        }
        for (int id : m.selected) s.per_client_selection_counts[id] += 1;
    }
    s.final_accuracy = result.metrics.back().test_accuracy;
    s.total_emissions_g = result.metrics.back().cumulative_emissions_g;
    return s;
}

std::vector<RunSummary> run_plan(const ExperimentPlan& plan) {
    validate_plan(plan);
    std::filesystem::create_directories(plan.output_dir);

    const bool any_budgeted =
        std::any_of(plan.strategies.begin(), plan.strategies.end(),
                    strategy_uses_budget);

    // emission baseline: unconstrained Oort, same seed and data pipeline
    std::map<std::uint64_t, double> baseline_g;
    if (any_budgeted) {
        for (std::uint64_t s : plan.seeds) {
            SimConfig cfg = plan.base;
            cfg.strategy = Strategy::Oort;
            cfg.seed = s;
            const SimResult res = run_simulation(cfg);
            baseline_g[s] = res.ledger.cumulative;
        }
    }

    std::vector<RunSummary> summaries;
    for (Strategy strategy : plan.strategies) {
        for (double f : plan.budget_sweep) {
            for (std::uint64_t s : plan.seeds) {
                SimConfig cfg = plan.base;
                cfg.strategy = strategy;
                cfg.seed = s;
                cfg.budget_fraction = f;
                if (strategy_uses_budget(strategy))
                    cfg.budget_total_g = f * baseline_g.at(s);
                const SimResult res = run_simulation(cfg);
                const std::string file = metrics_file_name(strategy, f, s);
                write_metrics_csv(res.metrics,
                                  (std::filesystem::path(plan.output_dir) / file)
                                      .string());
                summaries.push_back(summarize(res, cfg, file));
            }
        }
    }

    nlohmann::json j;
    j["baseline_total_emissions_g"] = nlohmann::json::object();
    for (const auto& [seed, grams] : baseline_g)
        j["baseline_total_emissions_g"][std::to_string(seed)] = grams;
    j["runs"] = nlohmann::json::array();
    for (const RunSummary& s : summaries) {
        nlohmann::json r;
        r["strategy"] = s.strategy;
        r["budget_fraction"] = s.budget_fraction;
        r["seed"] = s.seed;
        r["max_accuracy"] = s.max_accuracy;
        r["round_of_max_accuracy"] = s.round_of_max_accuracy;
        r["emissions_at_max_accuracy_g"] = s.emissions_at_max_accuracy_g;
        r["final_accuracy"] = s.final_accuracy;
        r["total_emissions_g"] = s.total_emissions_g;
        r["metrics_file"] = s.metrics_file;
        nlohmann::json counts = nlohmann::json::object();
        for (const auto& [id, n] : s.per_client_selection_counts)
            counts[std::to_string(id)] = n;
        r["per_client_selection_counts"] = counts;
        j["runs"].push_back(std::move(r));
    }
    std::ofstream jf(std::filesystem::path(plan.output_dir) / "summary.json");
    if (!jf) throw IngestError("cannot write summary.json in " + plan.output_dir);
    jf << j.dump(2) << "\n";

    return summaries;
}

std::map<std::string, std::vector<long long>> selection_count_report(
    const std::vector<std::string>& metrics_files, int num_clients,
    const std::set<int>& corrupted_ids, const std::string& out_path) {
    if (metrics_files.empty())
        throw ConfigError("selection_count_report: no metrics files given");

    std::map<std::string, std::vector<long long>> counts;
    for (const std::string& file : metrics_files) {
        std::string strategy;
        double frac;
        std::uint64_t seed;
        if (!parse_metrics_file_name(file, strategy, frac, seed))
            throw ConfigError("selection_count_report: cannot parse file name '" +
                              file + "'");
        auto& row = counts[strategy];
        row.resize(static_cast<std::size_t>(num_clients), 0);
        for (const RoundMetrics& m : read_metrics_csv(file))
            for (int id : m.selected) {
                if (id < 0 || id >= num_clients)
                    throw ConfigError("selection_count_report: client id " +
                                      std::to_string(id) +
                                      " outside [0, num_clients)");
                row[static_cast<std::size_t>(id)] += 1;
            }
    }

    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw IngestError("cannot open " + out_path + " for writing");
        f << "client_id,corrupted";
        for (const auto& [strategy, row] : counts) f << ',' << strategy;
        f << "\n";
        for (int id = 0; id < num_clients; ++id) {
            f << id << ',' << (corrupted_ids.count(id) ? 1 : 0);
            for (const auto& [strategy, row] : counts)
                f << ',' << row[static_cast<std::size_t>(id)];
            f << "\n";
        }
    }
    return counts;
}

}  // namespace fedcarbon

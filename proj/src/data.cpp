#include "fedcarbon/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "fedcarbon/errors.hpp"
#include "fedcarbon/rng.hpp"

namespace fedcarbon {

namespace {

double clip01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Class templates: one value per segment from {0.05, 0.5, 0.95}, adjacent
// segment pairs forced to differ. Candidates are re-drawn until templates are
// well separated both in raw space and in pair-contrast space; after enough
// tries the best candidate so far is kept so tiny (d, C) combinations still
// terminate.
std::vector<std::vector<double>> make_templates(int d, int num_classes, Rng& rng) {
    const int segments = std::min(d, 16);
    static constexpr double kLevels[3] = {0.05, 0.5, 0.95};

    auto draw_code = [&]() {
        std::vector<double> code(static_cast<std::size_t>(segments));
        for (int s = 0; s < segments; ++s) {
            code[static_cast<std::size_t>(s)] =
                kLevels[rng.uniform_int(3)];
            if (s % 2 == 1 && code[static_cast<std::size_t>(s)] ==
                                  code[static_cast<std::size_t>(s - 1)]) {
                // re-draw the second element of the pair until it differs
                for (int tries = 0; tries < 64; ++tries) {
                    const double v = kLevels[rng.uniform_int(3)];
                    if (v != code[static_cast<std::size_t>(s - 1)]) {
                        code[static_cast<std::size_t>(s)] = v;
                        break;
                    }
                }
            }
        }
        return code;
    };

    auto contrast_of = [&](const std::vector<double>& code) {
        std::vector<double> c;
        for (std::size_t k = 0; k + 1 < code.size(); k += 2)
            c.push_back(std::abs(code[k] - code[k + 1]));
        return c;
    };

    auto dist2 = [](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            acc += (a[i] - b[i]) * (a[i] - b[i]);
        return acc;
    };

    std::vector<std::vector<double>> codes;
    const double min_raw2 = 0.4 * 0.4 * static_cast<double>(segments) * 0.01;
    for (int c = 0; c < num_classes; ++c) {
        std::vector<double> best;
        double best_score = -1.0;
        for (int attempt = 0; attempt < 200; ++attempt) {
            std::vector<double> cand = draw_code();
            double score = std::numeric_limits<double>::max();
            const std::vector<double> cand_ct = contrast_of(cand);
            for (const auto& prev : codes) {
                score = std::min(score, dist2(prev, cand));
                if (!cand_ct.empty())
                    score = std::min(score, dist2(contrast_of(prev), cand_ct) *
                                                static_cast<double>(segments));
            }
            if (score > best_score) {
                best_score = score;
                best = std::move(cand);
            }
            if (best_score >= min_raw2 && attempt >= 8) break;
        }
        codes.push_back(std::move(best));
    }

    // guarantee distinct means even in degenerate (d, C) corners
    for (std::size_t c = 1; c < codes.size(); ++c)
        for (std::size_t p = 0; p < c; ++p)
            if (codes[c] == codes[p])
                codes[c][c % codes[c].size()] =
                    clip01(codes[c][c % codes[c].size()] +
                           0.01 * static_cast<double>(c));

    // expand segment codes to full d-dimensional templates
    std::vector<std::vector<double>> templates;
    const int base = d / segments, extra = d % segments;
    for (const auto& code : codes) {
        std::vector<double> t;
        t.reserve(static_cast<std::size_t>(d));
        for (int s = 0; s < segments; ++s) {
            const int len = base + (s < extra ? 1 : 0);
            for (int i = 0; i < len; ++i)
                t.push_back(code[static_cast<std::size_t>(s)]);
        }
        templates.push_back(std::move(t));
    }
    return templates;
}

}  // namespace

std::vector<Sample> make_dataset(int n, int d, int num_classes,
                                 std::uint64_t seed) {
    if (num_classes < 2) throw ConfigError("make_dataset: need at least 2 classes");
    if (n < num_classes)
        throw ConfigError("make_dataset: n must be at least the class count");
    if (d < 2) throw ConfigError("make_dataset: need at least 2 features");

    Rng rng(derive_seed(seed, 0xDA7A));
    const auto templates = make_templates(d, num_classes, rng);

    double min_dist = std::numeric_limits<double>::max();
    for (std::size_t a = 0; a < templates.size(); ++a)
        for (std::size_t b = a + 1; b < templates.size(); ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < templates[a].size(); ++i) {
                const double diff = templates[a][i] - templates[b][i];
                acc += diff * diff;
            }
            min_dist = std::min(min_dist, std::sqrt(acc));
        }
    // keep clusters >= 5.5 sigma apart so a nearest-centroid rule stays sharp
    const double sigma = std::min(0.25, min_dist / 5.5);

    // The cluster noise budget is split into a per-coordinate part and a
    // per-segment part (same total variance). Segment noise is low-frequency
    // per-sample variation, so it survives block averaging the way natural
    // image content does; for width-1 segments the split is equivalent to
    // plain iid noise.
    const double sigma_iid = 0.6 * sigma;
    const double sigma_seg = 0.8 * sigma;
    const int segments = std::min(d, 16);
    const int base = d / segments, extra = d % segments;

    std::vector<Sample> data;
    data.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int label = i % num_classes;  // balanced classes
        Sample s;
        s.label = label;
        s.features.resize(static_cast<std::size_t>(d));
        const auto& t = templates[static_cast<std::size_t>(label)];
        std::size_t j = 0;
        for (int seg = 0; seg < segments; ++seg) {
            const int len = base + (seg < extra ? 1 : 0);
            const double offset = sigma_seg * rng.normal();
            for (int k = 0; k < len; ++k, ++j)
                s.features[j] = clip01(t[j] + offset + sigma_iid * rng.normal());
        }
        data.push_back(std::move(s));
    }
    return data;
}

std::vector<ClientDataset> dirichlet_partition(const std::vector<Sample>& data,
                                               const PartitionSpec& spec) {
    if (data.empty()) throw ConfigError("dirichlet_partition: empty dataset");
    if (spec.num_clients < 1)
        throw ConfigError("dirichlet_partition: need at least one client");
    if (spec.alpha <= 0.0) throw ConfigError("dirichlet_partition: alpha must be > 0");
    const auto n_clients = static_cast<std::size_t>(spec.num_clients);
    if (static_cast<std::size_t>(spec.min_samples_per_client) * n_clients >
        data.size())
        throw ConfigError(
            "dirichlet_partition: min_samples_per_client infeasible for dataset size");

    // group sample indices by label
    int max_label = 0;
    for (const Sample& s : data) max_label = std::max(max_label, s.label);
    std::vector<std::vector<std::size_t>> by_class(
        static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < data.size(); ++i)
        by_class[static_cast<std::size_t>(data[i].label)].push_back(i);

    std::vector<std::vector<std::size_t>> assigned(n_clients);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& idx = by_class[c];
        if (idx.empty()) continue;
        Rng rng(derive_seed(spec.seed, 0xD112, c));
        rng.shuffle(idx);
        const std::vector<double> props = rng.dirichlet(spec.alpha, n_clients);

        // largest-remainder rounding to an exact integer split
        const double total = static_cast<double>(idx.size());
        std::vector<std::size_t> counts(n_clients);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t used = 0;
        for (std::size_t k = 0; k < n_clients; ++k) {
            const double want = props[k] * total;
            counts[k] = static_cast<std::size_t>(std::floor(want));
            used += counts[k];
            remainders.emplace_back(want - std::floor(want), k);
        }
        std::sort(remainders.begin(), remainders.end(),
                  [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                  });
        for (std::size_t r = 0; used < idx.size(); ++r, ++used)
            counts[remainders[r % n_clients].second] += 1;

        std::size_t cursor = 0;
        for (std::size_t k = 0; k < n_clients; ++k)
            for (std::size_t j = 0; j < counts[k]; ++j)
                assigned[k].push_back(idx[cursor++]);
    }

    // top up starved clients from the currently-largest one
    const auto min_sz = static_cast<std::size_t>(spec.min_samples_per_client);
    for (;;) {
        std::size_t smallest = 0, largest = 0;
        for (std::size_t k = 1; k < n_clients; ++k) {
            if (assigned[k].size() < assigned[smallest].size()) smallest = k;
            if (assigned[k].size() > assigned[largest].size()) largest = k;
        }
        if (assigned[smallest].size() >= min_sz) break;
        if (assigned[largest].size() <= 1)
            throw ConfigError("dirichlet_partition: cannot satisfy min_samples_per_client");
        assigned[smallest].push_back(assigned[largest].back());
        assigned[largest].pop_back();
    }

    std::vector<ClientDataset> clients;
    clients.reserve(n_clients);
    for (std::size_t k = 0; k < n_clients; ++k) {
        std::sort(assigned[k].begin(), assigned[k].end());
        ClientDataset c;
        c.client_id = static_cast<int>(k);
        c.samples.reserve(assigned[k].size());
        for (std::size_t i : assigned[k]) c.samples.push_back(data[i]);
        clients.push_back(std::move(c));
    }
    return clients;
}

std::vector<ClientDataset> corrupt_clients(const std::vector<ClientDataset>& clients,
                                           const std::set<int>& noisy_ids,
                                           double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("corrupt_clients: sigma must be >= 0");
    for (int id : noisy_ids) {
        const bool known = std::any_of(clients.begin(), clients.end(),
                                       [id](const ClientDataset& c) {
                                           return c.client_id == id;
                                       });
        if (!known)
            throw ConfigError("corrupt_clients: unknown client id " +
                              std::to_string(id));
    }

    std::vector<ClientDataset> out = clients;
    for (ClientDataset& c : out) {
        if (noisy_ids.count(c.client_id) == 0) continue;
        c.corrupted = true;
        Rng rng(derive_seed(seed, 0xC0FF, static_cast<std::uint64_t>(c.client_id)));
        for (Sample& s : c.samples)
            for (double& x : s.features) x = clip01(x + sigma * rng.normal());
    }
    return out;
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_test(
    const std::vector<Sample>& data, double frac, std::uint64_t seed) {
    if (!(frac > 0.0 && frac < 1.0))
        throw ConfigError("split_test: frac must lie strictly between 0 and 1");
    if (data.empty()) throw ConfigError("split_test: empty dataset");

    int max_label = 0;
    for (const Sample& s : data) max_label = std::max(max_label, s.label);
    std::vector<std::vector<std::size_t>> by_class(
        static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < data.size(); ++i)
        by_class[static_cast<std::size_t>(data[i].label)].push_back(i);

    std::vector<bool> is_test(data.size(), false);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& idx = by_class[c];
        if (idx.empty()) continue;
        Rng rng(derive_seed(seed, 0x5717, c));
        rng.shuffle(idx);
        const auto take = static_cast<std::size_t>(
            std::llround(frac * static_cast<double>(idx.size())));
        for (std::size_t j = 0; j < take; ++j) is_test[idx[j]] = true;
    }

    std::pair<std::vector<Sample>, std::vector<Sample>> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        (is_test[i] ? out.second : out.first).push_back(data[i]);
    return out;
}

std::vector<Sample> block_contrast_features(const std::vector<Sample>& samples,
                                            int block) {
    if (block < 1) throw ConfigError("block_contrast_features: block must be >= 1");
    if (samples.empty()) return {};
    const std::size_t d = samples.front().features.size();
    const auto pair_width = static_cast<std::size_t>(2 * block);
    if (d == 0 || d % pair_width != 0)
        throw ConfigError(
            "block_contrast_features: feature dim must be a multiple of 2*block");

    std::vector<Sample> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) {
        if (s.features.size() != d)
            throw ShapeError("block_contrast_features: ragged feature lengths");
        Sample m;
        m.label = s.label;
        m.features.reserve(d / pair_width);
        for (std::size_t start = 0; start < d; start += pair_width) {
            double a = 0.0, b = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(block); ++i) {
                a += s.features[start + i];
                b += s.features[start + static_cast<std::size_t>(block) + i];
            }
            m.features.push_back(std::abs(a - b) / static_cast<double>(block));
        }
        out.push_back(std::move(m));
    }
    return out;
}

void write_partition_csv(const std::vector<ClientDataset>& clients,
                         const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IngestError("cannot open " + path + " for writing");
    const std::size_t d =
        clients.empty() || clients.front().samples.empty()
            ? 0
            : clients.front().samples.front().features.size();
    f << "client_id,label";
    for (std::size_t j = 0; j < d; ++j) f << ",f" << j;
    f << "\n";
    char buf[64];
    for (const ClientDataset& c : clients)
        for (const Sample& s : c.samples) {
            f << c.client_id << ',' << s.label;
            for (double x : s.features) {
                std::snprintf(buf, sizeof buf, "%.17g", x);
                f << ',' << buf;
            }
            f << "\n";
        }
}

std::vector<ClientDataset> read_partition_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IngestError("cannot open partition file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw IngestError(path + ": empty partition file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("client_id,label", 0) != 0)
        throw IngestError(path + ": unexpected partition header '" + line + "'");

    std::map<int, ClientDataset> by_id;
    std::size_t line_no = 1;
    std::size_t dims = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        fields.push_back(cur);
        if (fields.size() < 3)
            throw IngestError(path + ":" + std::to_string(line_no) +
                              ": expected client_id,label,features");
        if (dims == 0) dims = fields.size() - 2;
        if (fields.size() - 2 != dims)
            throw IngestError(path + ":" + std::to_string(line_no) +
                              ": ragged feature count");
        try {
            const int client_id = std::stoi(fields[0]);
            Sample s;
            s.label = std::stoi(fields[1]);
            s.features.reserve(dims);
            for (std::size_t j = 2; j < fields.size(); ++j)
                s.features.push_back(std::stod(fields[j]));
            auto& client = by_id[client_id];
            client.client_id = client_id;
            client.samples.push_back(std::move(s));
        } catch (const std::exception&) {
            throw IngestError(path + ":" + std::to_string(line_no) +
                              ": malformed row");
        }
    }
    std::vector<ClientDataset> out;
    out.reserve(by_id.size());
    for (auto& [id, client] : by_id) out.push_back(std::move(client));
    return out;
}

}  // namespace fedcarbon

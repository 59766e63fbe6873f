#include "fedcarbon/carbon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fedcarbon/errors.hpp"
#include "fedcarbon/rng.hpp"

namespace fedcarbon {

namespace {

// Howard Hinnant's days-from-civil algorithm.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

// Accepts "YYYY-MM-DDTHH:MM:SSZ" or "YYYY-MM-DDTHH:MMZ"; minutes and seconds
// must be zero since the trace is hourly.
std::int64_t parse_hour_timestamp(const std::string& ts, std::size_t line_no) {
    int y, mo, d, h, mi, se = 0;
    char tail = '\0';
    int fields = std::sscanf(ts.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &h,
                             &mi, &se, &tail);
    if (fields != 7) {
        se = 0;
        fields = std::sscanf(ts.c_str(), "%d-%d-%dT%d:%d%c", &y, &mo, &d, &h, &mi,
                             &tail);
        if (fields != 6)
            throw IngestError("line " + std::to_string(line_no) +
                              ": bad timestamp '" + ts + "'");
    }
    if (tail != 'Z')
        throw IngestError("line " + std::to_string(line_no) +
                          ": timestamp must be UTC ('Z' suffix): '" + ts + "'");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23)
        throw IngestError("line " + std::to_string(line_no) +
                          ": timestamp out of range: '" + ts + "'");
    if (mi != 0 || se != 0)
        throw IngestError("line " + std::to_string(line_no) +
                          ": trace timestamps must be on the hour: '" + ts + "'");
    return days_from_civil(y, mo, d) * 24 + h;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::int64_t epoch_hours(int year, int month, int day, int hour) {
    return days_from_civil(year, month, day) * 24 + hour;
}

std::string format_epoch_hour(std::int64_t hours) {
    std::int64_t days = hours / 24;
    int h = static_cast<int>(hours % 24);
    if (h < 0) {
        h += 24;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:00:00Z", y, m, d, h);
    return buf;
}

int CarbonTrace::region_index(const std::string& name) const {
    const auto it = std::lower_bound(regions.begin(), regions.end(), name);
    if (it == regions.end() || *it != name) return -1;
    return static_cast<int>(it - regions.begin());
}

void EmissionsLedger::add_probing(double grams) {
    probing_round_emissions += grams;
    cumulative += grams;
}

void EmissionsLedger::add_round(double grams) {
    per_round.push_back(grams);
    cumulative += grams;
}

CarbonTrace load_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IngestError("cannot open trace file: " + path);

    std::string line;
    if (!std::getline(f, line)) throw IngestError(path + ": empty trace file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,region,intensity_g_per_kwh,curtailed")
        throw IngestError(path + ": bad header '" + line + "'");

    struct Cell {
        double intensity;
        bool curtailed;
    };
    std::map<std::pair<std::string, std::int64_t>, Cell> cells;
    std::int64_t min_hour = 0, max_hour = 0;
    bool first = true;
    std::size_t line_no = 1;

    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4)
            throw IngestError("line " + std::to_string(line_no) +
                              ": expected 4 fields, got " +
                              std::to_string(fields.size()));
        const std::int64_t hour = parse_hour_timestamp(fields[0], line_no);
        const std::string& region = fields[1];
        if (region.empty())
            throw IngestError("line " + std::to_string(line_no) + ": empty region");
        double intensity;
        try {
            std::size_t pos = 0;
            intensity = std::stod(fields[2], &pos);
            if (pos != fields[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw IngestError("line " + std::to_string(line_no) +
                              ": bad intensity '" + fields[2] + "'");
        }
        if (!(intensity >= 0.0) || !std::isfinite(intensity))
            throw IngestError("line " + std::to_string(line_no) +
                              ": intensity must be finite and >= 0, got '" +
                              fields[2] + "'");
        bool curtailed;
        if (fields[3] == "0")
            curtailed = false;
        else if (fields[3] == "1")
            curtailed = true;
        else
            throw IngestError("line " + std::to_string(line_no) +
                              ": curtailed must be 0 or 1, got '" + fields[3] + "'");

        const auto key = std::make_pair(region, hour);
        if (cells.count(key))
            throw IngestError("line " + std::to_string(line_no) +
                              ": duplicate cell for region '" + region + "' at " +
                              fields[0]);
        cells[key] = Cell{intensity, curtailed};
        if (first) {
            min_hour = max_hour = hour;
            first = false;
        } else {
            min_hour = std::min(min_hour, hour);
            max_hour = std::max(max_hour, hour);
        }
    }
    if (cells.empty()) throw IngestError(path + ": trace has no data rows");

    CarbonTrace trace;
    for (const auto& [key, cell] : cells)
        if (trace.regions.empty() || trace.regions.back() != key.first)
            trace.regions.push_back(key.first);
    std::sort(trace.regions.begin(), trace.regions.end());
    trace.regions.erase(std::unique(trace.regions.begin(), trace.regions.end()),
                        trace.regions.end());
    trace.start_hour = min_hour;
    trace.hours = static_cast<std::size_t>(max_hour - min_hour + 1);
    trace.intensity.assign(trace.regions.size(),
                           std::vector<double>(trace.hours, 0.0));
    trace.curtailed.assign(trace.regions.size(),
                           std::vector<std::uint8_t>(trace.hours, 0));

    for (std::size_t r = 0; r < trace.regions.size(); ++r)
        for (std::size_t h = 0; h < trace.hours; ++h) {
            const auto it = cells.find(
                std::make_pair(trace.regions[r], min_hour + static_cast<std::int64_t>(h)));
            if (it == cells.end())
                throw IngestError(path + ": missing cell for region '" +
                                  trace.regions[r] + "' at " +
                                  format_epoch_hour(min_hour +
                                                    static_cast<std::int64_t>(h)));
            trace.intensity[r][h] = it->second.intensity;
            trace.curtailed[r][h] = it->second.curtailed ? 1 : 0;
        }
    return trace;
}

void write_trace_csv(const CarbonTrace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IngestError("cannot open " + path + " for writing");
    f << "timestamp,region,intensity_g_per_kwh,curtailed\n";
    char buf[64];
    for (std::size_t h = 0; h < trace.hours; ++h)
        for (std::size_t r = 0; r < trace.regions.size(); ++r) {
            std::snprintf(buf, sizeof buf, "%.10g", trace.intensity[r][h]);
            f << format_epoch_hour(trace.start_hour + static_cast<std::int64_t>(h))
              << ',' << trace.regions[r] << ',' << buf << ','
              << (trace.curtailed[r][h] ? '1' : '0') << "\n";
        }
}

CarbonTrace synth_trace(int regions, int hours, std::uint64_t seed,
                        double curtail_prob) {
    if (regions < 1) throw ConfigError("synth_trace: need at least one region");
    if (hours < 1) throw ConfigError("synth_trace: need at least one hour");
    if (curtail_prob < 0.0 || curtail_prob > 1.0)
        throw ConfigError("synth_trace: curtail_prob must lie in [0, 1]");

    CarbonTrace trace;
    trace.start_hour = epoch_hours(2023, 1, 15, 0);
    trace.hours = static_cast<std::size_t>(hours);
    char name[16];
    for (int r = 0; r < regions; ++r) {
        std::snprintf(name, sizeof name, "R%03d", r);
        trace.regions.emplace_back(name);
    }
    trace.intensity.assign(static_cast<std::size_t>(regions),
                           std::vector<double>(trace.hours, 0.0));
    trace.curtailed.assign(static_cast<std::size_t>(regions),
                           std::vector<std::uint8_t>(trace.hours, 0));

    for (int r = 0; r < regions; ++r) {
        Rng rng(derive_seed(seed, 0xCA4B, static_cast<std::uint64_t>(r)));
        const double base = rng.uniform(150.0, 550.0);
        const double amp = base * rng.uniform(0.15, 0.45);
        const double phase = rng.uniform(0.0, 24.0);
        for (std::size_t h = 0; h < trace.hours; ++h) {
            const double angle = 2.0 * 3.14159265358979323846 *
                                 (static_cast<double>(h) + phase) / 24.0;
            trace.intensity[static_cast<std::size_t>(r)][h] =
                std::max(0.0, base + amp * std::sin(angle));
            trace.curtailed[static_cast<std::size_t>(r)][h] =
                rng.bernoulli(curtail_prob) ? 1 : 0;
        }
    }
    return trace;
}

RegionAssignment assign_regions(int num_clients, const CarbonTrace& trace,
                                std::uint64_t seed) {
    if (trace.regions.empty())
        throw ConfigError("assign_regions: trace has no regions");
    if (num_clients < 0) throw ConfigError("assign_regions: negative client count");

    std::vector<int> order(trace.regions.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0xA551));
    rng.shuffle(order);

    RegionAssignment assignment;
    assignment.region_of_client.reserve(static_cast<std::size_t>(num_clients));
    for (int i = 0; i < num_clients; ++i)
        assignment.region_of_client.push_back(
            order[static_cast<std::size_t>(i) % order.size()]);
    return assignment;
}

double effective_intensity(const CarbonTrace& trace, int region, std::size_t t) {
    if (region < 0 || static_cast<std::size_t>(region) >= trace.regions.size())
        throw std::out_of_range("effective_intensity: bad region index " +
                                std::to_string(region));
    if (t >= trace.hours)
        throw std::out_of_range("effective_intensity: hour " + std::to_string(t) +
                                " beyond trace length " +
                                std::to_string(trace.hours));
    const auto r = static_cast<std::size_t>(region);
    return trace.curtailed[r][t] ? 0.0 : trace.intensity[r][t];
}

double round_emissions(const std::vector<int>& selected,
                       const RegionAssignment& assignment,
                       const CarbonTrace& trace, std::size_t t) {
    std::vector<int> ids = selected;
    std::sort(ids.begin(), ids.end());
    double total = 0.0;
    for (int id : ids) {
        if (id < 0 ||
            static_cast<std::size_t>(id) >= assignment.region_of_client.size())
            throw ConfigError("round_emissions: client " + std::to_string(id) +
                              " has no region assignment");
        // 1 kWh per client per round
        total += effective_intensity(
            trace, assignment.region_of_client[static_cast<std::size_t>(id)], t);
    }
    return total;
}

}  // namespace fedcarbon

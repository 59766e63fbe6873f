#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedcarbon {

/// Hourly carbon intensity per region plus curtailment flags. Immutable after
/// load; hours are contiguous starting at start_hour (hours since Unix epoch).
struct CarbonTrace {
    std::vector<std::string> regions;          // sorted, unique
    std::int64_t start_hour = 0;
    std::size_t hours = 0;
    std::vector<std::vector<double>> intensity;   // [region][hour], gCO2eq/kWh
    std::vector<std::vector<std::uint8_t>> curtailed;

    int region_index(const std::string& name) const;
};

/// client_id -> region index into the trace.
struct RegionAssignment {
    std::vector<int> region_of_client;
};

struct EmissionsLedger {
    std::vector<double> per_round;
    double probing_round_emissions = 0.0;
    double cumulative = 0.0;

    void add_probing(double grams);
    void add_round(double grams);
};

/// Parses `timestamp,region,intensity_g_per_kwh,curtailed` CSV. Timestamps
/// are ISO-8601 UTC on the hour ("2023-01-15T06:00:00Z" or without seconds).
/// Rows may be unsorted; every (region, hour) cell must appear exactly once.
CarbonTrace load_trace(const std::string& path);

/// Writes a trace back in the load_trace format.
void write_trace_csv(const CarbonTrace& trace, const std::string& path);

/// Deterministic synthetic trace: per-region diurnal sinusoid with random
/// base, amplitude, and phase, plus Bernoulli(curtail_prob) curtailment.
CarbonTrace synth_trace(int regions, int hours, std::uint64_t seed,
                        double curtail_prob);

/// Round-robin assignment over a seed-shuffled region order.
RegionAssignment assign_regions(int num_clients, const CarbonTrace& trace,
                                std::uint64_t seed);

/// Intensity actually charged: 0 when the region is curtailed at hour t.
double effective_intensity(const CarbonTrace& trace, int region, std::size_t t);

/// Sum of effective intensities of the selected clients at hour t, at the
/// uniform 1 kWh per client per round energy model. Summed in ascending
/// client-id order so the result is reproducible.
double round_emissions(const std::vector<int>& selected,
                       const RegionAssignment& assignment,
                       const CarbonTrace& trace, std::size_t t);

/// Hours since the Unix epoch for a civil UTC date-time on the hour.
std::int64_t epoch_hours(int year, int month, int day, int hour);

/// Inverse of epoch_hours, formatted as "YYYY-MM-DDTHH:00:00Z".
std::string format_epoch_hour(std::int64_t hours);

}  // namespace fedcarbon

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fedcarbon/model.hpp"

namespace fedcarbon {

/// One client's local shard. `corrupted` is ground truth for evaluation and
/// reporting only; selection strategies must never read it.
struct ClientDataset {
    int client_id = 0;
    std::vector<Sample> samples;
    bool corrupted = false;

    std::size_t size() const { return samples.size(); }
};

struct PartitionSpec {
    int num_clients = 30;
    double alpha = 10.0;
    std::uint64_t seed = 1;
    int min_samples_per_client = 20;
};

/// Synthetic classification data: C Gaussian clusters around class templates
/// that are piecewise constant over up to 16 coordinate segments, clipped to
/// [0, 1]. Adjacent segment pairs carry distinct values per class so that the
/// block-contrast feature map (below) also separates the classes.
std::vector<Sample> make_dataset(int n, int d, int num_classes,
                                 std::uint64_t seed);

/// Per-class Dirichlet(alpha) proportions over clients; exact partition with
/// largest-remainder rounding. Clients below min_samples_per_client are
/// topped up by reassignment from the largest client.
std::vector<ClientDataset> dirichlet_partition(const std::vector<Sample>& data,
                                               const PartitionSpec& spec);

/// Replaces every feature x of the designated clients by
/// clip(x + N(0, sigma^2), 0, 1) and sets their corrupted flag.
std::vector<ClientDataset> corrupt_clients(const std::vector<ClientDataset>& clients,
                                           const std::set<int>& noisy_ids,
                                           double sigma, std::uint64_t seed);

/// Stratified-by-class train/test split: first element train, second test.
std::pair<std::vector<Sample>, std::vector<Sample>> split_test(
    const std::vector<Sample>& data, double frac, std::uint64_t seed);

/// Fixed non-trainable front end: feature k is the absolute difference of the
/// means of adjacent coordinate blocks 2k and 2k+1 of width `block`. A cheap
/// stand-in for the pooling stages of a convolutional network: it passes the
/// low-frequency class structure and attenuates per-coordinate noise.
std::vector<Sample> block_contrast_features(const std::vector<Sample>& samples,
                                            int block);

/// CSV export, one row per sample: client_id,label,f0..f{d-1}.
void write_partition_csv(const std::vector<ClientDataset>& clients,
                         const std::string& path);

/// Inverse of write_partition_csv. Clients come back ordered by id; the
/// corrupted flag is not part of the format and reads as false.
std::vector<ClientDataset> read_partition_csv(const std::string& path);

}  // namespace fedcarbon

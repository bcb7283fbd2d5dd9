#pragma once

#include "stgnn/temporal_graph.hpp"

#include <filesystem>
#include <vector>

namespace stgnn {

/// Planted-significant-ties stream. Nodes are split round-robin into
/// communities; background contacts are uniform in time between random
/// members of one community, while each planted pair (also intra-community)
/// is a renewal process with Pareto-distributed gaps, started at a uniform
/// time and wrapped around the horizon. Heavy-tailed gaps give bursts of
/// close contacts separated by long silences.
struct SyntheticSpec {
    NodeId n_nodes = 100;
    NodeId n_communities = 5;
    std::size_t n_significant_pairs = 20;
    std::size_t n_significant_events = 1000;
    std::size_t n_background_events = 1000;
    double horizon = 100.0;
    std::uint64_t seed = 0;
    double gap_exponent = 1.5;
    double min_gap = 0.05;

    void validate() const;
};

struct SyntheticData {
    std::vector<Event> events;
    std::vector<NodePair> planted;
};

[[nodiscard]] SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Writes the stream as "u v t" rows and the planted pairs as "u,v" CSV.
void write_synthetic(const SyntheticData& data, const std::filesystem::path& edge_list,
                     const std::filesystem::path& planted_csv);

} // namespace stgnn

#pragma once

#include "stgnn/common.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stgnn {

/// One undirected contact between two nodes at time `t`.
struct Event {
    NodeId u;
    NodeId v;
    Timestamp t;

    friend bool operator==(const Event&, const Event&) = default;
};

using NodePair = std::pair<NodeId, NodeId>;

/// Canonical key for an undirected pair: smaller id first.
constexpr NodePair ordered_pair(NodeId a, NodeId b) noexcept {
    return a < b ? NodePair{a, b} : NodePair{b, a};
}

struct NeighborHistory {
    NodeId neighbor;
    std::vector<Timestamp> times;
};

/// Immutable, time-sorted event stream with per-pair and per-node indices.
///
/// Every event is stored once under its ordered pair key and appears in the
/// node index of both endpoints. All timestamp lists are non-decreasing.
class TemporalGraph {
public:
    TemporalGraph() = default;

    /// Builds the indices. Events are stably sorted by time.
    /// Throws ContractError on self-loops, negative times or ids outside
    /// [0, num_nodes).
    TemporalGraph(NodeId num_nodes, std::vector<Event> events);

    [[nodiscard]] NodeId num_nodes() const noexcept { return num_nodes_; }
    [[nodiscard]] std::size_t num_events() const noexcept { return events_.size(); }
    [[nodiscard]] bool empty() const noexcept { return events_.empty(); }
    [[nodiscard]] std::span<const Event> events() const noexcept { return events_; }
    [[nodiscard]] Timestamp max_time() const;

    [[nodiscard]] const std::map<NodePair, std::vector<Timestamp>>& pair_index() const noexcept {
        return pair_index_;
    }

    /// Neighbors of `u` sorted by neighbor id.
    [[nodiscard]] std::span<const NeighborHistory> neighbors(NodeId u) const;

    /// All timestamps of the pair; empty when the pair never interacted.
    [[nodiscard]] std::span<const Timestamp> pair_times(NodeId u, NodeId v) const;

    [[nodiscard]] bool linked(NodeId u, NodeId v) const {
        return pair_index_.contains(ordered_pair(u, v));
    }

private:
    NodeId num_nodes_ = 0;
    std::vector<Event> events_;
    std::map<NodePair, std::vector<Timestamp>> pair_index_;
    std::vector<std::vector<NeighborHistory>> node_index_;
};

/// Timestamps of (u, v) events strictly before `t`.
[[nodiscard]] std::span<const Timestamp> pair_history(const TemporalGraph& g, NodeId u, NodeId v,
                                                      Timestamp t);

/// Number of (u, v) events with timestamp in [begin, end).
[[nodiscard]] std::size_t count_in_window(std::span<const Timestamp> times, Timestamp begin,
                                          Timestamp end);

struct LoadOptions {
    /// Raw time units per model unit; 86400 maps seconds to days.
    double time_unit = 1.0;
    /// Zero-based column holding the timestamp.
    std::size_t time_column = 2;
};

/// Result of ingesting an edge list: the graph plus the normalization that
/// was applied to produce it.
struct LoadedGraph {
    TemporalGraph graph;
    /// raw_ids[dense id] is the identifier used in the input file.
    std::vector<std::string> raw_ids;
    std::size_t self_loops_dropped = 0;
    double raw_time_offset = 0.0;
    double time_unit = 1.0;
};

/// Parses "u v t" rows separated by whitespace and/or commas. Lines starting
/// with '#' or '%' are comments. Node ids are remapped densely in sorted
/// order (numeric when every id is an integer), times are shifted so the
/// earliest event is at 0 and divided by `time_unit`.
[[nodiscard]] LoadedGraph load_edge_list(const std::filesystem::path& path,
                                         const LoadOptions& options = {});
[[nodiscard]] LoadedGraph parse_edge_list(std::string_view text, const LoadOptions& options = {});

/// Writes "u v t" rows with dense ids and model-unit times.
void write_edge_list(const TemporalGraph& g, const std::filesystem::path& path);

/// CSV "dense_id,raw_id".
void write_node_map(const LoadedGraph& loaded, const std::filesystem::path& path);

struct TestPair {
    NodeId u;
    NodeId v;
    Timestamp first_time;
};

struct DataSplit {
    Timestamp t_split = 0.0;
    TemporalGraph train;
    /// Distinct pairs with at least one event after t_split, ordered by key.
    std::vector<TestPair> test_pairs;
};

/// Chronological split at ratio * max time. Throws Error when either side
/// would be empty.
[[nodiscard]] DataSplit split_train_test(const TemporalGraph& g, double ratio = 0.75);

} // namespace stgnn

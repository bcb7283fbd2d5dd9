#pragma once

#include "stgnn/temporal_graph.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace stgnn {

/// Exponentially decayed contact count: sum_i exp(-lambda (t - t_i)).
/// Every t_i must be strictly before t.
[[nodiscard]] double initial_significance(std::span<const Timestamp> history, Timestamp t,
                                          double lambda = 1.0);

struct SignificanceEntry {
    NodeId neighbor;
    double score;

    friend bool operator==(const SignificanceEntry&, const SignificanceEntry&) = default;
};

/// Ranking order: higher score first, smaller neighbor id on ties.
[[nodiscard]] constexpr bool ranks_before(const SignificanceEntry& a,
                                          const SignificanceEntry& b) noexcept {
    return a.score > b.score || (a.score == b.score && a.neighbor < b.neighbor);
}

/// Up to `capacity` neighbors of `owner` at time `at_time` in ranking order.
struct CandidateList {
    NodeId owner = 0;
    Timestamp at_time = 0.0;
    std::size_t capacity = 0;
    std::vector<SignificanceEntry> entries;

    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
};

/// Scores every neighbor of `u` with at least one contact strictly before `t`,
/// ordered by neighbor id.
[[nodiscard]] std::vector<SignificanceEntry> score_neighbors(const TemporalGraph& g, NodeId u,
                                                             Timestamp t, double lambda = 1.0);

[[nodiscard]] CandidateList top_m_neighbors(const TemporalGraph& g, NodeId u, Timestamp t,
                                            std::size_t m, double lambda = 1.0);

/// Number of (u, v) contacts in [t, t + delta). Pass the training graph to
/// keep the window from reaching past the split point.
[[nodiscard]] std::size_t significance_label(const TemporalGraph& g, NodeId u, NodeId v,
                                             Timestamp t, double delta);

enum class Selection {
    /// The m most significant neighbors.
    Significant,
    /// m neighbors drawn uniformly from the history, then ranked by score.
    Uniform,
};

struct SelectionPolicy {
    std::size_t m = 10;
    double lambda = 1.0;
    Selection mode = Selection::Significant;
    /// Seeds Uniform draws; the draw for (owner, t) is a pure function of
    /// (seed, owner, t).
    std::uint64_t seed = 0;
};

/// Reduces a full neighbor scoring to a candidate list under `policy`.
[[nodiscard]] CandidateList select_candidates(NodeId owner, Timestamp t,
                                              std::vector<SignificanceEntry> scored,
                                              const SelectionPolicy& policy);

/// Streaming per-node significance state for a chronological sweep.
///
/// Each (node, neighbor) slot holds the score as of its last contact; a query
/// at a later time rescales it by exp(-lambda * elapsed), which equals the
/// full recomputation because the decay factors multiply.
class SignificanceIndex {
public:
    SignificanceIndex(NodeId num_nodes, double lambda = 1.0);

    /// Events must arrive in non-decreasing time order.
    void observe(const Event& e);

    /// All neighbors of `u` scored at `t`, ordered by neighbor id. `t` must not
    /// precede the latest observed event.
    [[nodiscard]] std::vector<SignificanceEntry> scores(NodeId u, Timestamp t) const;

    [[nodiscard]] Timestamp latest() const noexcept { return latest_; }
    [[nodiscard]] std::size_t observed() const noexcept { return observed_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }

    void reset();

private:
    struct Slot {
        NodeId neighbor;
        Timestamp last;
        double score;
    };
    struct NodeState {
        std::vector<Slot> slots;
        std::unordered_map<NodeId, std::size_t> where;
    };

    void bump(NodeState& state, NodeId neighbor, Timestamp t);

    double lambda_;
    std::vector<NodeState> nodes_;
    Timestamp latest_ = 0.0;
    std::size_t observed_ = 0;
};

/// Where the model obtains candidate lists from.
class CandidateSource {
public:
    virtual ~CandidateSource() = default;
    [[nodiscard]] virtual CandidateList candidates(NodeId u, Timestamp t) const = 0;
};

/// Candidate lists computed from a static graph (history strictly before t).
class GraphCandidates final : public CandidateSource {
public:
    GraphCandidates(const TemporalGraph& graph, SelectionPolicy policy)
        : graph_(&graph), policy_(policy) {}

    [[nodiscard]] CandidateList candidates(NodeId u, Timestamp t) const override;

private:
    const TemporalGraph* graph_;
    SelectionPolicy policy_;
};

/// Candidate lists served from a streaming index.
class StreamCandidates final : public CandidateSource {
public:
    StreamCandidates(const SignificanceIndex& index, SelectionPolicy policy)
        : index_(&index), policy_(policy) {}

    [[nodiscard]] CandidateList candidates(NodeId u, Timestamp t) const override;

private:
    const SignificanceIndex* index_;
    SelectionPolicy policy_;
};

} // namespace stgnn

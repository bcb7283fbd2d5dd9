#include "stgnn/significance.hpp"

#include "stgnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stgnn {

double initial_significance(std::span<const Timestamp> history, Timestamp t, double lambda) {
    if (!(lambda > 0.0)) {
        throw ContractError("decay rate must be positive");
    }
    double sum = 0.0;
    for (Timestamp ti : history) {
        if (!(ti < t)) {
            throw ContractError("significance history must lie strictly before the query time");
        }
        sum += std::exp(-lambda * (t - ti));
    }
    return sum;
}

std::vector<SignificanceEntry> score_neighbors(const TemporalGraph& g, NodeId u, Timestamp t,
                                               double lambda) {
    std::vector<SignificanceEntry> out;
    for (const auto& nb : g.neighbors(u)) {
        auto end = std::lower_bound(nb.times.begin(), nb.times.end(), t);
        if (end == nb.times.begin()) {
            continue;
        }
        std::span<const Timestamp> history(nb.times.data(),
                                           static_cast<std::size_t>(end - nb.times.begin()));
        out.push_back({nb.neighbor, initial_significance(history, t, lambda)});
    }
    return out;
}

CandidateList top_m_neighbors(const TemporalGraph& g, NodeId u, Timestamp t, std::size_t m,
                              double lambda) {
    SelectionPolicy policy;
    policy.m = m;
    policy.lambda = lambda;
    return select_candidates(u, t, score_neighbors(g, u, t, lambda), policy);
}

std::size_t significance_label(const TemporalGraph& g, NodeId u, NodeId v, Timestamp t,
                               double delta) {
    if (!(delta > 0.0)) {
        throw ContractError("window size must be positive");
    }
    return count_in_window(g.pair_times(u, v), t, t + delta);
}

CandidateList select_candidates(NodeId owner, Timestamp t, std::vector<SignificanceEntry> scored,
                                const SelectionPolicy& policy) {
    if (policy.m == 0) {
        throw ContractError("history capacity must be at least 1");
    }
    CandidateList list;
    list.owner = owner;
    list.at_time = t;
    list.capacity = policy.m;
    const std::size_t keep = std::min(policy.m, scored.size());

    if (policy.mode == Selection::Significant || keep == scored.size()) {
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                          scored.end(), ranks_before);
        scored.resize(keep);
        list.entries = std::move(scored);
        return list;
    }

    // Uniform draw in neighbor-id order so the result does not depend on how
    // the caller enumerated the history.
    std::sort(scored.begin(), scored.end(),
              [](const SignificanceEntry& a, const SignificanceEntry& b) {
                  return a.neighbor < b.neighbor;
              });
    Rng rng(mix64(policy.seed ^ mix64(static_cast<std::uint64_t>(owner) + 1) ^
                  mix64(hash_time(t))));
    for (std::size_t i = 0; i < keep; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, scored.size() - 1);
        std::swap(scored[i], scored[pick(rng)]);
    }
    scored.resize(keep);
    std::sort(scored.begin(), scored.end(), ranks_before);
    list.entries = std::move(scored);
    return list;
}

SignificanceIndex::SignificanceIndex(NodeId num_nodes, double lambda)
    : lambda_(lambda), nodes_(static_cast<std::size_t>(num_nodes)) {
    if (!(lambda > 0.0)) {
        throw ContractError("decay rate must be positive");
    }
}

void SignificanceIndex::bump(NodeState& state, NodeId neighbor, Timestamp t) {
    auto [it, inserted] = state.where.try_emplace(neighbor, state.slots.size());
    if (inserted) {
        state.slots.push_back({neighbor, t, 1.0});
        return;
    }
    Slot& slot = state.slots[it->second];
    slot.score = slot.score * std::exp(-lambda_ * (t - slot.last)) + 1.0;
    slot.last = t;
}

void SignificanceIndex::observe(const Event& e) {
    if (observed_ > 0 && e.t < latest_) {
        throw ContractError("streaming index requires events in time order");
    }
    if (e.u == e.v || e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= nodes_.size() ||
        static_cast<std::size_t>(e.v) >= nodes_.size()) {
        throw ContractError("invalid event endpoints");
    }
    bump(nodes_[static_cast<std::size_t>(e.u)], e.v, e.t);
    bump(nodes_[static_cast<std::size_t>(e.v)], e.u, e.t);
    latest_ = e.t;
    ++observed_;
}

std::vector<SignificanceEntry> SignificanceIndex::scores(NodeId u, Timestamp t) const {
    if (u < 0 || static_cast<std::size_t>(u) >= nodes_.size()) {
        return {};
    }
    if (observed_ > 0 && t < latest_) {
        throw ContractError("cannot query the streaming index before its latest event");
    }
    const auto& slots = nodes_[static_cast<std::size_t>(u)].slots;
    std::vector<SignificanceEntry> out;
    out.reserve(slots.size());
    for (const auto& s : slots) {
        out.push_back({s.neighbor, s.score * std::exp(-lambda_ * (t - s.last))});
    }
    std::sort(out.begin(), out.end(), [](const SignificanceEntry& a, const SignificanceEntry& b) {
        return a.neighbor < b.neighbor;
    });
    return out;
}

void SignificanceIndex::reset() {
    for (auto& n : nodes_) {
        n.slots.clear();
        n.where.clear();
    }
    latest_ = 0.0;
    observed_ = 0;
}

CandidateList GraphCandidates::candidates(NodeId u, Timestamp t) const {
    return select_candidates(u, t, score_neighbors(*graph_, u, t, policy_.lambda), policy_);
}

CandidateList StreamCandidates::candidates(NodeId u, Timestamp t) const {
    return select_candidates(u, t, index_->scores(u, t), policy_);
}

} // namespace stgnn

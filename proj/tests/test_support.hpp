#pragma once

// Brute-force reference implementations used as oracles. They work directly
// on event vectors and plain loops and share no code path with the library.

#include "stgnn/temporal_graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

namespace stgnn::oracle {

inline std::vector<Event> random_events(std::size_t count, NodeId nodes, double horizon,
                                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<NodeId> node(0, nodes - 1);
    std::uniform_real_distribution<double> time(0.0, horizon);
    std::vector<Event> out;
    while (out.size() < count) {
        NodeId u = node(rng);
        NodeId v = node(rng);
        if (u != v) {
            out.push_back({u, v, time(rng)});
        }
    }
    return out;
}

inline bool same_pair(const Event& e, NodeId u, NodeId v) {
    return (e.u == u && e.v == v) || (e.u == v && e.v == u);
}

inline std::vector<double> brute_history(const std::vector<Event>& events, NodeId u, NodeId v,
                                         double t) {
    std::vector<double> out;
    for (const auto& e : events) {
        if (same_pair(e, u, v) && e.t < t) {
            out.push_back(e.t);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline double brute_significance(const std::vector<Event>& events, NodeId u, NodeId v, double t,
                                 double lambda) {
    double s = 0.0;
    for (const auto& e : events) {
        if (same_pair(e, u, v) && e.t < t) {
            s += std::exp(-lambda * (t - e.t));
        }
    }
    return s;
}

struct BruteEntry {
    NodeId neighbor;
    double score;
};

inline std::vector<BruteEntry> brute_top_m(const std::vector<Event>& events, NodeId u, double t,
                                           std::size_t m, double lambda) {
    std::set<NodeId> seen;
    for (const auto& e : events) {
        if (e.t < t && (e.u == u || e.v == u)) {
            seen.insert(e.u == u ? e.v : e.u);
        }
    }
    std::vector<BruteEntry> all;
    for (NodeId n : seen) {
        all.push_back({n, brute_significance(events, u, n, t, lambda)});
    }
    std::sort(all.begin(), all.end(), [](const BruteEntry& a, const BruteEntry& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.neighbor < b.neighbor;
    });
    if (all.size() > m) {
        all.resize(m);
    }
    return all;
}

inline std::size_t brute_window_count(const std::vector<Event>& events, NodeId u, NodeId v,
                                      double begin, double end) {
    std::size_t c = 0;
    for (const auto& e : events) {
        if (same_pair(e, u, v) && e.t >= begin && e.t < end) {
            ++c;
        }
    }
    return c;
}

struct LabeledScore {
    NodeId u;
    NodeId v;
    double score;
    int label;
};

/// AUC by enumerating every positive/negative pair.
inline double brute_auc(const std::vector<LabeledScore>& xs) {
    std::uint64_t doubled = 0;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    for (const auto& a : xs) {
        (a.label == 1 ? pos : neg) += 1;
        if (a.label != 1) {
            continue;
        }
        for (const auto& b : xs) {
            if (b.label != 0) {
                continue;
            }
            if (a.score > b.score) {
                doubled += 2;
            } else if (a.score == b.score) {
                doubled += 1;
            }
        }
    }
    return static_cast<double>(doubled) / static_cast<double>(2 * pos * neg);
}

/// Average precision: rank of each item counted by comparing against all
/// others, then precision at each positive in rank order.
inline double brute_average_precision(const std::vector<LabeledScore>& xs) {
    auto before = [](const LabeledScore& a, const LabeledScore& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    };
    const std::size_t n = xs.size();
    std::vector<std::size_t> rank(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && before(xs[j], xs[i])) {
                ++rank[i];
            }
        }
    }
    std::vector<int> label_at(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        label_at[rank[i]] = xs[i].label;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (label_at[r] == 1) {
            std::size_t upto = 0;
            for (std::size_t q = 0; q <= r; ++q) {
                upto += label_at[q] == 1 ? 1 : 0;
            }
            ++hits;
            sum += static_cast<double>(upto) / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(hits);
}

/// Plain-loop evaluation of one aggregation layer, row-vector convention.
/// w_self and w_nbr are row-major [d_in][d_out].
inline std::vector<double> loop_layer(const std::vector<double>& self_in,
                                      const std::vector<std::vector<double>>& nbr_ins,
                                      const std::vector<double>& scores,
                                      const std::vector<std::vector<double>>& w_self,
                                      const std::vector<std::vector<double>>& w_nbr,
                                      const std::vector<double>& beta, bool relu) {
    const std::size_t d_in = self_in.size();
    const std::size_t d_out = w_self[0].size();
    std::vector<double> weights(nbr_ins.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < nbr_ins.size(); ++i) {
        weights[i] = std::exp(scores[i] * beta[i]);
        denom += weights[i];
    }
    std::vector<double> out(d_out, 0.0);
    for (std::size_t o = 0; o < d_out; ++o) {
        for (std::size_t k = 0; k < d_in; ++k) {
            out[o] += self_in[k] * w_self[k][o];
        }
        for (std::size_t i = 0; i < nbr_ins.size(); ++i) {
            double msg = 0.0;
            for (std::size_t k = 0; k < d_in; ++k) {
                msg += nbr_ins[i][k] * w_nbr[k][o];
            }
            out[o] += msg * weights[i] / denom;
        }
        if (relu && out[o] < 0.0) {
            out[o] = 0.0;
        }
    }
    return out;
}

/// Random labeled list of at most `max_size` distinct pairs with both classes
/// present. Scores come from a small grid so ties are common.
inline std::vector<LabeledScore> random_labeled(std::mt19937_64& rng, std::size_t max_size) {
    std::uniform_int_distribution<std::size_t> size(2, max_size);
    std::uniform_int_distribution<int> grid(0, 20);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_real_distribution<double> fine(-1.0, 1.0);
    const std::size_t n = size(rng);
    const bool coarse = coin(rng) == 1;
    std::vector<LabeledScore> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto u = static_cast<NodeId>(i / 7);
        const auto v = static_cast<NodeId>(1000 + i % 7);
        out.push_back({u, v, coarse ? grid(rng) / 10.0 : fine(rng), coin(rng)});
    }
    out[0].label = 1;
    out[1].label = 0;
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

} // namespace stgnn::oracle

#include "stgnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>

namespace stgnn {

std::string_view to_string(Similarity s) noexcept {
    switch (s) {
    case Similarity::Cos:
        return "Cos";
    case Similarity::Had:
        return "Had";
    case Similarity::L2:
        return "L2";
    }
    return "?";
}

double score_pair(const RowVectorXd& h_u, const RowVectorXd& h_v, Similarity kind) {
    if (h_u.size() != h_v.size()) {
        throw ContractError("embeddings differ in length");
    }
    switch (kind) {
    case Similarity::Cos:
        return cosine(h_u, h_v);
    case Similarity::Had:
        return h_u.cwiseProduct(h_v).sum();
    case Similarity::L2:
        return -(h_u - h_v).squaredNorm();
    }
    return 0.0;
}

namespace {

void check_finite(std::span<const ScoredPair> pairs) {
    for (const auto& p : pairs) {
        if (!std::isfinite(p.score)) {
            throw ContractError("scores must be finite");
        }
    }
}

bool ranked_before(const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return std::tie(a.u, a.v) < std::tie(b.u, b.v);
}

} // namespace

double auc(std::span<const ScoredPair> pairs) {
    check_finite(pairs);
    std::vector<ScoredPair> sorted(pairs.begin(), pairs.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredPair& a, const ScoredPair& b) { return a.score < b.score; });

    // Twice the Mann-Whitney U, kept integral so the result is exact.
    std::uint64_t doubled_wins = 0;
    std::uint64_t neg_below = 0;
    std::uint64_t pos_total = 0;
    std::uint64_t neg_total = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        std::uint64_t pos = 0;
        std::uint64_t neg = 0;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            (sorted[j].label == 1 ? pos : neg) += 1;
            ++j;
        }
        doubled_wins += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        pos_total += pos;
        neg_total += neg;
        i = j;
    }
    if (pos_total == 0 || neg_total == 0) {
        throw Error("AUC needs at least one positive and one negative");
    }
    return static_cast<double>(doubled_wins) / static_cast<double>(2 * pos_total * neg_total);
}

double mean_average_precision(std::span<const ScoredPair> pairs) {
    check_finite(pairs);
    std::vector<ScoredPair> sorted(pairs.begin(), pairs.end());
    std::sort(sorted.begin(), sorted.end(), ranked_before);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < sorted.size(); ++r) {
        if (sorted[r].label == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    if (hits == 0) {
        throw Error("average precision needs at least one positive");
    }
    return sum / static_cast<double>(hits);
}

double mean_average_precision_per_source(std::span<const ScoredPair> pairs) {
    std::map<NodeId, std::vector<ScoredPair>> by_source;
    for (const auto& p : pairs) {
        by_source[p.u].push_back(p);
    }
    double total = 0.0;
    std::size_t sources = 0;
    for (const auto& [u, group] : by_source) {
        bool any = std::any_of(group.begin(), group.end(),
                               [](const ScoredPair& p) { return p.label == 1; });
        if (!any) {
            continue;
        }
        total += mean_average_precision(group);
        ++sources;
    }
    if (sources == 0) {
        throw Error("average precision needs at least one positive");
    }
    return total / static_cast<double>(sources);
}

std::vector<NodePair> sample_never_linked(const TemporalGraph& full, std::size_t count,
                                          Rng& rng) {
    const auto n = static_cast<std::uint64_t>(full.num_nodes());
    const std::uint64_t total = n * (n - (n > 0 ? 1 : 0)) / 2;
    const std::uint64_t available = total - full.pair_index().size();
    std::vector<NodePair> out;
    if (available == 0 || count == 0) {
        return out;
    }
    if (available <= 2 * static_cast<std::uint64_t>(count)) {
        for (NodeId u = 0; u < full.num_nodes(); ++u) {
            for (NodeId v = u + 1; v < full.num_nodes(); ++v) {
                if (!full.linked(u, v)) {
                    out.push_back({u, v});
                }
            }
        }
        std::shuffle(out.begin(), out.end(), rng);
        out.resize(std::min<std::size_t>(out.size(), count));
        std::sort(out.begin(), out.end());
        return out;
    }
    std::set<NodePair> chosen;
    std::uniform_int_distribution<NodeId> pick(0, full.num_nodes() - 1);
    while (chosen.size() < count) {
        NodeId a = pick(rng);
        NodeId b = pick(rng);
        if (a == b || full.linked(a, b)) {
            continue;
        }
        chosen.insert(ordered_pair(a, b));
    }
    return {chosen.begin(), chosen.end()};
}

std::vector<double> heuristic_reference(const TemporalGraph& train,
                                        std::span<const NodePair> pairs, Timestamp t,
                                        double lambda) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [u, v] : pairs) {
        out.push_back(initial_significance(pair_history(train, u, v, t), t, lambda));
    }
    return out;
}

MetricsReport evaluate(const TemporalGraph& full, const DataSplit& split, const Params& params,
                       const MatrixXd& features, const EvalConfig& config) {
    if (features.rows() != full.num_nodes()) {
        throw ContractError("feature matrix does not match the graph");
    }
    std::vector<NodePair> pairs;
    std::vector<int> labels;
    for (const auto& tp : split.test_pairs) {
        pairs.push_back({tp.u, tp.v});
        labels.push_back(1);
    }
    Rng rng = make_stream(config.seed, "eval-negatives");
    auto negatives = sample_never_linked(full, split.test_pairs.size(), rng);
    if (negatives.size() < split.test_pairs.size()) {
        std::cerr << "warning: only " << negatives.size()
                  << " never-linked pairs available for " << split.test_pairs.size()
                  << " test positives\n";
    }
    for (const auto& p : negatives) {
        pairs.push_back(p);
        labels.push_back(0);
    }

    MetricsReport report;
    report.n_pos = split.test_pairs.size();
    report.n_neg = negatives.size();

    GraphCandidates source(split.train, config.selection);
    std::map<NodeId, RowVectorXd> embeddings;
    auto embed = [&](NodeId n) -> const RowVectorXd& {
        auto it = embeddings.find(n);
        if (it == embeddings.end()) {
            it = embeddings
                     .emplace(n, forward_node(source, features, params, n, split.t_split).vector)
                     .first;
        }
        return it->second;
    };

    auto metrics = [&](std::span<const ScoredPair> scored) {
        SimilarityMetrics m;
        m.auc = auc(scored);
        m.map = config.per_source_map ? mean_average_precision_per_source(scored)
                                      : mean_average_precision(scored);
        return m;
    };

    std::vector<ScoredPair> scored(pairs.size());
    for (std::size_t k = 0; k < kSimilarities.size(); ++k) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& [u, v] = pairs[i];
            scored[i] = {u, v, score_pair(embed(u), embed(v), kSimilarities[k]), labels[i]};
        }
        report.by_similarity[k] = metrics(scored);
        if (k == 0 || report.by_similarity[k].auc > report.best_auc) {
            report.best_auc = report.by_similarity[k].auc;
            report.best_auc_similarity = kSimilarities[k];
        }
        if (k == 0 || report.by_similarity[k].map > report.best_map) {
            report.best_map = report.by_similarity[k].map;
            report.best_map_similarity = kSimilarities[k];
        }
    }

    auto reference = heuristic_reference(split.train, pairs, split.t_split,
                                         config.selection.lambda);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        scored[i] = {pairs[i].first, pairs[i].second, reference[i], labels[i]};
    }
    SimilarityMetrics ref = metrics(scored);
    report.reference_auc = ref.auc;
    report.reference_map = ref.map;
    return report;
}

} // namespace stgnn

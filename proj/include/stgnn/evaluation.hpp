#pragma once

#include "stgnn/model.hpp"
#include "stgnn/temporal_graph.hpp"

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace stgnn {

enum class Similarity { Cos, Had, L2 };

inline constexpr std::array<Similarity, 3> kSimilarities = {Similarity::Cos, Similarity::Had,
                                                            Similarity::L2};

[[nodiscard]] std::string_view to_string(Similarity s) noexcept;

/// Higher means more likely to link. L2 is the negated squared distance.
[[nodiscard]] double score_pair(const RowVectorXd& h_u, const RowVectorXd& h_v, Similarity kind);

struct ScoredPair {
    NodeId u;
    NodeId v;
    double score;
    int label;
};

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Throws Error unless both classes are present.
[[nodiscard]] double auc(std::span<const ScoredPair> pairs);

/// Average precision of the whole list ranked by score (descending, ties by
/// node pair). Throws Error without positives.
[[nodiscard]] double mean_average_precision(std::span<const ScoredPair> pairs);

/// Mean over source nodes `u` of the average precision of that node's pairs;
/// nodes without positives are left out.
[[nodiscard]] double mean_average_precision_per_source(std::span<const ScoredPair> pairs);

struct SimilarityMetrics {
    double auc = 0.0;
    double map = 0.0;
};

struct MetricsReport {
    std::array<SimilarityMetrics, 3> by_similarity{};
    double best_auc = 0.0;
    double best_map = 0.0;
    Similarity best_auc_similarity = Similarity::Cos;
    Similarity best_map_similarity = Similarity::Cos;
    double reference_auc = 0.0;
    double reference_map = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

struct EvalConfig {
    SelectionPolicy selection;
    /// Seeds the test negatives.
    std::uint64_t seed = 0;
    bool per_source_map = false;
};

/// `count` distinct pairs (u < v) that never interact anywhere in `full`.
/// Returns fewer when not enough such pairs exist.
[[nodiscard]] std::vector<NodePair> sample_never_linked(const TemporalGraph& full,
                                                        std::size_t count, Rng& rng);

/// Decayed contact count of each pair at `t`, from the training history.
[[nodiscard]] std::vector<double> heuristic_reference(const TemporalGraph& train,
                                                      std::span<const NodePair> pairs,
                                                      Timestamp t, double lambda = 1.0);

/// Scores the held-out pairs against an equal number of never-linked pairs,
/// with embeddings computed once at the split time from training history.
[[nodiscard]] MetricsReport evaluate(const TemporalGraph& full, const DataSplit& split,
                                     const Params& params, const MatrixXd& features,
                                     const EvalConfig& config);

} // namespace stgnn

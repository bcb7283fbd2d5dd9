#include "stgnn/evaluation.hpp"
#include "stgnn/synthetic.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

using namespace stgnn;

namespace {

std::vector<ScoredPair> labeled(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::vector<ScoredPair> out;
    NodeId id = 0;
    for (double s : pos) {
        out.push_back({id, static_cast<NodeId>(id + 1), s, 1});
        id += 2;
    }
    for (double s : neg) {
        out.push_back({id, static_cast<NodeId>(id + 1), s, 0});
        id += 2;
    }
    return out;
}

std::vector<ScoredPair> ranked(const std::vector<int>& labels) {
    std::vector<ScoredPair> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out.push_back({0, static_cast<NodeId>(i + 1), 10.0 - static_cast<double>(i), labels[i]});
    }
    return out;
}

std::vector<ScoredPair> convert(const std::vector<oracle::LabeledScore>& xs) {
    std::vector<ScoredPair> out;
    for (const auto& x : xs) out.push_back({x.u, x.v, x.score, x.label});
    return out;
}

} // namespace

TEST(ScorePair, IdenticalVectors) {
    RowVectorXd a(2);
    a << 1.0, 1.0;
    EXPECT_NEAR(score_pair(a, a, Similarity::Cos), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(score_pair(a, a, Similarity::Had), 2.0);
    EXPECT_DOUBLE_EQ(score_pair(a, a, Similarity::L2), 0.0);
}

TEST(ScorePair, OrthogonalVectors) {
    RowVectorXd a(2), b(2);
    a << 1.0, 0.0;
    b << 0.0, 1.0;
    EXPECT_DOUBLE_EQ(score_pair(a, b, Similarity::Cos), 0.0);
    EXPECT_DOUBLE_EQ(score_pair(a, b, Similarity::Had), 0.0);
    EXPECT_DOUBLE_EQ(score_pair(a, b, Similarity::L2), -2.0);
}

TEST(ScorePair, ZeroVectorAndMismatch) {
    RowVectorXd a(3), z = RowVectorXd::Zero(3), short_one(2);
    a << 4.0, -1.0, 2.5;
    EXPECT_EQ(score_pair(a, z, Similarity::Had), 0.0);
    EXPECT_THROW((void)score_pair(a, short_one, Similarity::Cos), ContractError);
}

TEST(Auc, Examples) {
    EXPECT_DOUBLE_EQ(auc(labeled({0.9, 0.8}, {0.2, 0.1})), 1.0);
    EXPECT_DOUBLE_EQ(auc(labeled({0.9, 0.3}, {0.5, 0.1})), 0.75);
    EXPECT_DOUBLE_EQ(auc(labeled({0.4, 0.4, 0.4}, {0.4, 0.4})), 0.5);
}

TEST(Auc, Errors) {
    EXPECT_THROW((void)auc(labeled({0.1, 0.2}, {})), Error);
    EXPECT_THROW((void)auc(labeled({}, {0.3})), Error);
    EXPECT_THROW((void)auc(labeled({std::numeric_limits<double>::quiet_NaN()}, {0.3})), Error);
}

TEST(Auc, MonotoneTransformAndInversion) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        auto xs = convert(oracle::random_labeled(rng, 60));
        // Ties are fine here since the shuffle does not touch score equality.
        const double a = auc(xs);
        auto transformed = xs;
        for (auto& p : transformed) p.score = std::exp(3.0 * p.score) + 7.0;
        EXPECT_EQ(auc(transformed), a);
    }
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> pos(5 + trial % 11), neg(3 + trial % 7);
        for (auto& x : pos) x = u(rng);
        for (auto& x : neg) x = u(rng);
        auto xs = labeled(pos, neg);
        auto inverted = xs;
        for (auto& p : inverted) p.label = 1 - p.label;
        EXPECT_NEAR(auc(inverted), 1.0 - auc(xs), 1e-15);
    }
}

TEST(MeanAveragePrecision, Examples) {
    EXPECT_DOUBLE_EQ(mean_average_precision(ranked({1, 1, 0, 0})), 1.0);
    EXPECT_NEAR(mean_average_precision(ranked({1, 0, 1, 0})), 0.83333, 1e-5);
    EXPECT_NEAR(mean_average_precision(ranked({0, 0, 1})), 1.0 / 3.0, 1e-15);
    EXPECT_THROW((void)mean_average_precision(ranked({0, 0})), Error);
}

TEST(MeanAveragePrecision, TiesBrokenByPair) {
    std::vector<ScoredPair> xs{{2, 3, 0.5, 0}, {1, 9, 0.5, 1}};
    EXPECT_DOUBLE_EQ(mean_average_precision(xs), 1.0);
    xs[1] = {3, 0, 0.5, 1};
    EXPECT_DOUBLE_EQ(mean_average_precision(xs), 0.5);
}

TEST(MeanAveragePrecision, PerSourceAveragesSources) {
    std::vector<ScoredPair> xs{{0, 1, 0.9, 1}, {0, 2, 0.8, 0}, {5, 1, 0.9, 0},
                               {5, 2, 0.8, 1}, {7, 1, 0.3, 0}};
    EXPECT_DOUBLE_EQ(mean_average_precision_per_source(xs), (1.0 + 0.5) / 2.0);
}

TEST(Metrics, MatchBruteForceOracles) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        auto xs = oracle::random_labeled(rng, 200);
        auto pairs = convert(xs);
        EXPECT_EQ(auc(pairs), oracle::brute_auc(xs));
        EXPECT_EQ(mean_average_precision(pairs), oracle::brute_average_precision(xs));
    }
}

TEST(NeverLinked, PairsAreDistinctAndUnlinked) {
    auto events = oracle::random_events(400, 50, 10.0, 8);
    TemporalGraph g(50, events);
    Rng rng(1);
    auto pairs = sample_never_linked(g, 300, rng);
    ASSERT_EQ(pairs.size(), 300u);
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& p : pairs) {
        EXPECT_LT(p.first, p.second);
        EXPECT_TRUE(seen.insert({p.first, p.second}).second);
        for (const auto& e : events) EXPECT_FALSE(oracle::same_pair(e, p.first, p.second));
    }
}

TEST(NeverLinked, DenseGraphReturnsWhatExists) {
    TemporalGraph g(4, {{0, 1, 0.0}, {0, 2, 0.0}, {0, 3, 0.0}, {1, 2, 0.0}});
    Rng rng(1);
    auto pairs = sample_never_linked(g, 10, rng);
    ASSERT_EQ(pairs.size(), 2u);
}

TEST(HeuristicReference, EqualsDecayedCount) {
    auto events = oracle::random_events(300, 12, 10.0, 5);
    TemporalGraph g(12, events);
    std::vector<NodePair> pairs{{0, 1}, {2, 7}, {3, 11}, {4, 5}};
    auto scores = heuristic_reference(g, pairs, 10.0);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_NEAR(scores[i], oracle::brute_significance(events, pairs[i].first, pairs[i].second, 10.0, 1.0),
                    1e-12);
    }
    TemporalGraph h(3, {{0, 1, 1.0}});
    std::vector<NodePair> two{{0, 1}, {0, 2}};
    auto s = heuristic_reference(h, two, 2.0);
    EXPECT_GT(s[0], s[1]);
}

namespace {

struct TwoCommunities {
    TemporalGraph full;
    DataSplit split;
    MatrixXd features;
    Params params;
};

TwoCommunities two_communities() {
    SyntheticSpec spec;
    spec.n_nodes = 30;
    spec.n_communities = 2;
    spec.n_significant_pairs = 6;
    spec.n_significant_events = 300;
    spec.n_background_events = 300;
    spec.horizon = 40.0;
    spec.seed = 3;
    auto data = generate_synthetic(spec);
    TwoCommunities out{TemporalGraph(spec.n_nodes, data.events), {}, {}, {}};
    out.split = split_train_test(out.full, 0.75);
    Rng rng(4);
    out.features = random_features(spec.n_nodes, 8, rng);
    const std::size_t m = 10;
    out.params = {MatrixXd::Identity(8, 8), MatrixXd::Identity(8, 8), MatrixXd::Identity(8, 8),
                  MatrixXd::Identity(8, 8), VectorXd::Ones(m)};
    return out;
}

} // namespace

TEST(Evaluate, PassthroughModelBeatsChance) {
    auto tc = two_communities();
    EvalConfig cfg{.selection = {.m = 10}, .seed = 7};
    auto report = evaluate(tc.full, tc.split, tc.params, tc.features, cfg);
    EXPECT_EQ(report.n_pos, tc.split.test_pairs.size());
    EXPECT_EQ(report.n_neg, report.n_pos);
    EXPECT_GT(report.best_auc, 0.5);
    double max_auc = 0.0, max_map = 0.0;
    for (const auto& m : report.by_similarity) {
        max_auc = std::max(max_auc, m.auc);
        max_map = std::max(max_map, m.map);
    }
    EXPECT_EQ(report.best_auc, max_auc);
    EXPECT_EQ(report.best_map, max_map);
    EXPECT_GT(report.reference_auc, 0.0);
}

TEST(Evaluate, DeterministicGivenSeed) {
    auto tc = two_communities();
    EvalConfig cfg{.selection = {.m = 10}, .seed = 7};
    auto a = evaluate(tc.full, tc.split, tc.params, tc.features, cfg);
    auto b = evaluate(tc.full, tc.split, tc.params, tc.features, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(a.by_similarity[i].auc, b.by_similarity[i].auc);
        EXPECT_EQ(a.by_similarity[i].map, b.by_similarity[i].map);
    }
}

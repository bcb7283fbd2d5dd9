#include "stgnn/model.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace stgnn;

namespace {

std::vector<std::vector<double>> rows_of(const MatrixXd& m) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out[r].push_back(m(r, c));
    }
    return out;
}

std::vector<double> vec_of(const Eigen::Ref<const RowVectorXd>& v) {
    return {v.data(), v.data() + v.size()};
}

Params small_params(std::uint64_t seed, Eigen::Index d_in, Eigen::Index d_h, Eigen::Index d_out,
                    std::size_t m) {
    Rng rng(seed);
    Params p = init_params({d_in, d_h, d_out, m}, rng);
    std::uniform_real_distribution<double> b(0.2, 2.0);
    for (Eigen::Index i = 0; i < p.beta.size(); ++i) p.beta[i] = b(rng);
    return p;
}

} // namespace

TEST(Phi, EqualScoresGiveEqualWeights) {
    VectorXd s(2), beta(2);
    s << 0.7, 0.7;
    beta << 1.0, 1.0;
    auto w = phi(s, beta);
    EXPECT_NEAR(w[0], 0.5, 1e-12);
    EXPECT_NEAR(w[1], 0.5, 1e-12);
}

TEST(Phi, UnitGapGivesLogisticWeights) {
    VectorXd s(2), beta(2);
    s << 1.0, 2.0;
    beta << 1.0, 1.0;
    auto w = phi(s, beta);
    EXPECT_NEAR(w[0], 0.26894, 1e-5);
    EXPECT_NEAR(w[1], 0.73106, 1e-5);
}

TEST(Phi, SingleNeighborTakesAllWeight) {
    VectorXd s(1), beta(3);
    s << 42.0;
    beta << 0.1, 5.0, 9.0;
    EXPECT_DOUBLE_EQ(phi(s, beta)[0], 1.0);
}

TEST(Phi, NormalizedAndShiftInvariant) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + trial % 10;
        VectorXd s(k), beta = VectorXd::Ones(10);
        for (int i = 0; i < k; ++i) s[i] = u(rng);
        auto w = phi(s, beta);
        EXPECT_NEAR(w.sum(), 1.0, 1e-12);
        EXPECT_TRUE((w.array() >= 0.0).all());
        VectorXd shifted = s.array() + u(rng);
        EXPECT_LE((phi(shifted, beta) - w).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Phi, ShapeErrors) {
    VectorXd empty(0), beta = VectorXd::Ones(2), three = VectorXd::Ones(3);
    EXPECT_THROW((void)phi(empty, beta), ContractError);
    EXPECT_THROW((void)phi(three, beta), ContractError);
}

TEST(StaggLayer, NoNeighborsIsSelfTransform) {
    RowVectorXd x(2);
    x << 1.0, -2.0;
    MatrixXd ws(2, 2), wn = MatrixXd::Ones(2, 2);
    ws << 1.0, 0.0, 0.0, 1.0;
    MatrixXd none(0, 2);
    VectorXd no_scores(0), beta = VectorXd::Ones(2);
    auto h = stagg_layer(x, none, no_scores, ws, wn, beta, Activation::Identity);
    EXPECT_DOUBLE_EQ(h[0], 1.0);
    EXPECT_DOUBLE_EQ(h[1], -2.0);
    auto r = stagg_layer(x, none, no_scores, ws, wn, beta, Activation::Relu);
    EXPECT_DOUBLE_EQ(r[0], 1.0);
    EXPECT_DOUBLE_EQ(r[1], 0.0);
}

TEST(StaggLayer, TwoEqualNeighborsAverage) {
    RowVectorXd x = RowVectorXd::Zero(2);
    MatrixXd nbr(2, 2);
    nbr << 2.0, 0.0, 0.0, 4.0;
    VectorXd s(2), beta = VectorXd::Ones(2);
    s << 1.0, 1.0;
    MatrixXd eye = MatrixXd::Identity(2, 2);
    auto h = stagg_layer(x, nbr, s, eye, eye, beta, Activation::Identity);
    EXPECT_NEAR(h[0], 1.0, 1e-12);
    EXPECT_NEAR(h[1], 2.0, 1e-12);
}

TEST(StaggLayer, MatchesLoopOracle) {
    Rng rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto fill = [&](MatrixXd m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
        return m;
    };
    for (int trial = 0; trial < 50; ++trial) {
        RowVectorXd x = fill(MatrixXd(1, 4));
        MatrixXd nbr = fill(MatrixXd(3, 4));
        MatrixXd ws = fill(MatrixXd(4, 5)), wn = fill(MatrixXd(4, 5));
        VectorXd s(3), beta(4);
        for (int i = 0; i < 3; ++i) s[i] = 2.0 + u(rng);
        for (int i = 0; i < 4; ++i) beta[i] = 1.0 + u(rng);
        for (bool relu : {false, true}) {
            auto h = stagg_layer(x, nbr, s, ws, wn, beta, relu ? Activation::Relu : Activation::Identity);
            std::vector<std::vector<double>> nbr_rows = rows_of(nbr);
            auto expected = oracle::loop_layer(vec_of(x), nbr_rows, {s[0], s[1], s[2]}, rows_of(ws),
                                                rows_of(wn), {beta[0], beta[1], beta[2]}, relu);
            for (int o = 0; o < 5; ++o) EXPECT_NEAR(h[o], expected[o], 1e-12);
        }
    }
}

TEST(StaggLayer, DimensionErrors) {
    RowVectorXd x = RowVectorXd::Zero(3);
    MatrixXd w = MatrixXd::Zero(2, 2);
    MatrixXd nbr = MatrixXd::Zero(1, 2);
    VectorXd s = VectorXd::Ones(1), beta = VectorXd::Ones(1);
    EXPECT_THROW((void)stagg_layer(x, nbr, s, w, w, beta, Activation::Relu), ContractError);
    RowVectorXd x2 = RowVectorXd::Zero(2);
    VectorXd s2 = VectorXd::Ones(2);
    EXPECT_THROW((void)stagg_layer(x2, nbr, s2, w, w, beta, Activation::Relu), ContractError);
}

TEST(Cosine, Examples) {
    RowVectorXd a(2), b(2), c(2), z = RowVectorXd::Zero(2);
    a << 1.0, 0.0;
    b << 1.0, 1.0;
    c << -3.0, 0.0;
    EXPECT_NEAR(cosine(a, b), 0.70711, 1e-5);
    EXPECT_NEAR(cosine(a, c), -1.0, 1e-12);
    EXPECT_NEAR(cosine(b, b), 1.0, 1e-12);
    EXPECT_EQ(cosine(a, z), 0.0);
}

TEST(ForwardNode, IsolatedNodeUsesOnlyItself) {
    TemporalGraph g(3, {{0, 1, 1.0}});
    Rng rng(1);
    MatrixXd x = random_features(3, 6, rng);
    Params p = small_params(2, 6, 4, 3, 2);
    GraphCandidates source(g, {.m = 2});
    auto h = forward_node(source, x, p, 2, 5.0);
    RowVectorXd expected = (x.row(2) * p.w1_self).cwiseMax(0.0) * p.w2_self;
    EXPECT_LE((h.vector - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(h.node, 2);
    EXPECT_EQ(h.at_time, 5.0);
}

TEST(ForwardNode, MatchesNestedLoopOracle) {
    std::vector<Event> events{{0, 1, 0.5}, {0, 2, 1.0}, {0, 2, 1.5}, {1, 3, 2.0},
                              {2, 4, 2.2}, {0, 3, 2.5}, {3, 4, 2.9}, {1, 2, 3.1}};
    TemporalGraph g(5, events);
    Rng rng(5);
    MatrixXd x = random_features(5, 4, rng);
    const std::size_t m = 2;
    Params p = small_params(6, 4, 3, 2, m);
    GraphCandidates source(g, {.m = m});
    const double t = 3.5;

    auto hidden = [&](NodeId n) {
        auto top = oracle::brute_top_m(events, n, t, m, 1.0);
        std::vector<std::vector<double>> nbr;
        std::vector<double> scores;
        for (const auto& e : top) {
            nbr.push_back(vec_of(x.row(e.neighbor)));
            scores.push_back(e.score);
        }
        return oracle::loop_layer(vec_of(x.row(n)), nbr, scores, rows_of(p.w1_self),
                                   rows_of(p.w1_nbr), vec_of(p.beta.transpose()), true);
    };
    for (NodeId u = 0; u < 5; ++u) {
        auto top = oracle::brute_top_m(events, u, t, m, 1.0);
        std::vector<std::vector<double>> nbr;
        std::vector<double> scores;
        for (const auto& e : top) {
            nbr.push_back(hidden(e.neighbor));
            scores.push_back(e.score);
        }
        auto expected = oracle::loop_layer(hidden(u), nbr, scores, rows_of(p.w2_self),
                                            rows_of(p.w2_nbr), vec_of(p.beta.transpose()), false);
        auto h = forward_node(source, x, p, u, t).vector;
        for (int o = 0; o < 2; ++o) EXPECT_NEAR(h[o], expected[static_cast<std::size_t>(o)], 1e-12);
    }
}

TEST(ForwardNode, CommonDecayKeepsMembership) {
    // Advancing t with no new events scales every score by the same factor,
    // so the candidate set is unchanged.
    auto events = oracle::random_events(300, 15, 10.0, 12);
    TemporalGraph g(15, events);
    for (NodeId u = 0; u < 15; ++u) {
        auto a = top_m_neighbors(g, u, 10.5, 3);
        auto b = top_m_neighbors(g, u, 12.0, 3);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a.entries[i].neighbor, b.entries[i].neighbor);
            EXPECT_NEAR(b.entries[i].score, a.entries[i].score * std::exp(-1.5), 1e-12);
        }
    }
}

TEST(ForwardNode, ZeroWeightsGiveZeroEmbedding) {
    auto events = oracle::random_events(100, 8, 5.0, 3);
    TemporalGraph g(8, events);
    Rng rng(1);
    MatrixXd x = random_features(8, 5, rng);
    Params p = small_params(1, 5, 4, 3, 3).zeros_like();
    p.beta.setOnes();
    GraphCandidates source(g, {.m = 3});
    for (NodeId u = 0; u < 8; ++u) {
        EXPECT_EQ(forward_node(source, x, p, u, 4.0).vector.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(ForwardNode, HiddenStateIsNonNegativeAndDeterministic) {
    auto events = oracle::random_events(200, 10, 5.0, 9);
    TemporalGraph g(10, events);
    Rng rng(2);
    MatrixXd x = random_features(10, 6, rng);
    Params p = small_params(3, 6, 5, 4, 3);
    GraphCandidates source(g, {.m = 3});
    for (NodeId u = 0; u < 10; ++u) {
        auto h1 = hidden_state(x, p, source.candidates(u, 4.0));
        EXPECT_TRUE((h1.array() >= 0.0).all());
        EXPECT_EQ(forward_node(source, x, p, u, 4.0).vector, forward_node(source, x, p, u, 4.0).vector);
    }
}

TEST(ForwardNode, ExtendedPrecisionAgrees) {
    auto events = oracle::random_events(200, 10, 5.0, 19);
    TemporalGraph g(10, events);
    Rng rng(2);
    MatrixXd x = random_features(10, 6, rng);
    Params p = small_params(4, 6, 5, 4, 3);
    auto pl = p.cast<long double>();
    GraphCandidates source(g, {.m = 3});
    for (NodeId u = 0; u < 10; ++u) {
        auto tree = build_tree(source, u, 4.5);
        RowVectorXd d = forward_tree(x, p, tree);
        RowVector<long double> l = forward_tree(x, pl, tree);
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            EXPECT_NEAR(d[i], static_cast<double>(l[i]), 1e-12);
        }
    }
}

TEST(Params, InitShapesAndBeta) {
    Rng rng(0);
    Params p = init_params({128, 16, 16, 10}, rng);
    EXPECT_EQ(p.input_dim(), 128);
    EXPECT_EQ(p.hidden_dim(), 16);
    EXPECT_EQ(p.output_dim(), 16);
    EXPECT_EQ(p.capacity(), 10u);
    EXPECT_TRUE((p.beta.array() == 1.0).all());
    const double limit = std::sqrt(6.0 / (128 + 16));
    EXPECT_LE(p.w1_self.cwiseAbs().maxCoeff(), limit);
    EXPECT_EQ(p.num_parameters(), 2u * 128 * 16 + 2u * 16 * 16 + 10u);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    Rng rng(7);
    Checkpoint ck{small_params(7, 5, 4, 3, 2), random_features(6, 5, rng), 99};
    auto path = std::filesystem::temp_directory_path() / "stgnn_model_test.ckpt";
    save_checkpoint(ck, path);
    auto back = load_checkpoint(path);
    EXPECT_TRUE(back.params == ck.params);
    EXPECT_EQ(back.features, ck.features);
    EXPECT_EQ(back.seed, 99u);
    std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsGarbage) {
    auto path = std::filesystem::temp_directory_path() / "stgnn_model_test_bad.ckpt";
    {
        std::ofstream out(path, std::ios::binary);
        out << "not a checkpoint";
    }
    EXPECT_THROW((void)load_checkpoint(path), Error);
    std::filesystem::remove(path);
    EXPECT_THROW((void)load_checkpoint(path), Error);
}

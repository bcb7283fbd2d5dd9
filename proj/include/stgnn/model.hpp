#pragma once

#include "stgnn/common.hpp"
#include "stgnn/rng.hpp"
#include "stgnn/significance.hpp"

#include <cmath>
#include <filesystem>
#include <vector>

namespace stgnn {

/// Trainable weights of the two-layer aggregator. Row-vector convention:
/// a layer maps h (1 x d_in) to h W (1 x d_out). A single beta vector of
/// length m is shared by both layers.
template <typename Scalar>
struct ModelParams {
    Matrix<Scalar> w1_self;
    Matrix<Scalar> w1_nbr;
    Matrix<Scalar> w2_self;
    Matrix<Scalar> w2_nbr;
    Vector<Scalar> beta;

    [[nodiscard]] Eigen::Index input_dim() const { return w1_self.rows(); }
    [[nodiscard]] Eigen::Index hidden_dim() const { return w1_self.cols(); }
    [[nodiscard]] Eigen::Index output_dim() const { return w2_self.cols(); }
    [[nodiscard]] std::size_t capacity() const { return static_cast<std::size_t>(beta.size()); }

    template <typename Other>
    [[nodiscard]] ModelParams<Other> cast() const {
        return {w1_self.template cast<Other>(), w1_nbr.template cast<Other>(),
                w2_self.template cast<Other>(), w2_nbr.template cast<Other>(),
                beta.template cast<Other>()};
    }

    [[nodiscard]] ModelParams zeros_like() const {
        return {Matrix<Scalar>::Zero(w1_self.rows(), w1_self.cols()),
                Matrix<Scalar>::Zero(w1_nbr.rows(), w1_nbr.cols()),
                Matrix<Scalar>::Zero(w2_self.rows(), w2_self.cols()),
                Matrix<Scalar>::Zero(w2_nbr.rows(), w2_nbr.cols()),
                Vector<Scalar>::Zero(beta.size())};
    }

    [[nodiscard]] std::size_t num_parameters() const {
        return static_cast<std::size_t>(w1_self.size() + w1_nbr.size() + w2_self.size() +
                                        w2_nbr.size() + beta.size());
    }

    /// Visits every coefficient as (tensor index, reference).
    template <typename Fn>
    void for_each_coefficient(Fn&& fn) {
        int tensor = 0;
        for (Matrix<Scalar>* m : {&w1_self, &w1_nbr, &w2_self, &w2_nbr}) {
            for (Eigen::Index i = 0; i < m->size(); ++i) {
                fn(tensor, m->data()[i]);
            }
            ++tensor;
        }
        for (Eigen::Index i = 0; i < beta.size(); ++i) {
            fn(tensor, beta[i]);
        }
    }

    [[nodiscard]] bool all_finite() const {
        return w1_self.allFinite() && w1_nbr.allFinite() && w2_self.allFinite() &&
               w2_nbr.allFinite() && beta.allFinite();
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        auto same = [](const auto& x, const auto& y) {
            return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
        };
        return same(a.w1_self, b.w1_self) && same(a.w1_nbr, b.w1_nbr) &&
               same(a.w2_self, b.w2_self) && same(a.w2_nbr, b.w2_nbr) && same(a.beta, b.beta);
    }
};

using Params = ModelParams<double>;

struct ModelShape {
    Eigen::Index input_dim = 128;
    Eigen::Index hidden_dim = 16;
    Eigen::Index output_dim = 16;
    std::size_t capacity = 10;
};

/// Glorot-uniform weights, beta = 1.
[[nodiscard]] Params init_params(const ModelShape& shape, Rng& rng);

/// Frozen input features, uniform in [-1, 1].
[[nodiscard]] MatrixXd random_features(NodeId num_nodes, Eigen::Index dim, Rng& rng);

/// Significance softmax: w_i = exp(s_i beta_i) / sum_j exp(s_j beta_j) over the
/// k available ranks. Rank i pairs with beta_i.
template <typename ScoreDerived, typename BetaDerived>
[[nodiscard]] Vector<typename BetaDerived::Scalar> phi(const Eigen::MatrixBase<ScoreDerived>& scores,
                                                       const Eigen::MatrixBase<BetaDerived>& beta) {
    using Scalar = typename BetaDerived::Scalar;
    const Eigen::Index k = scores.size();
    if (k == 0) {
        throw ContractError("significance softmax needs at least one neighbor");
    }
    if (k > beta.size()) {
        throw ContractError("more ranked neighbors than correction terms");
    }
    Vector<Scalar> logits = scores.derived().template cast<Scalar>().cwiseProduct(beta.head(k));
    logits.array() -= logits.maxCoeff();
    Vector<Scalar> weights = logits.array().exp().matrix();
    weights /= weights.sum();
    return weights;
}

enum class Activation { Identity, Relu };

/// One aggregation layer:
///   act(self_in W_self + sum_i phi(scores, beta)_i nbr_ins.row(i) W_nbr)
/// With no neighbors the sum is zero.
template <typename SelfDerived, typename NbrDerived, typename ScoreDerived, typename Scalar>
[[nodiscard]] RowVector<Scalar> stagg_layer(const Eigen::MatrixBase<SelfDerived>& self_in,
                                            const Eigen::MatrixBase<NbrDerived>& nbr_ins,
                                            const Eigen::MatrixBase<ScoreDerived>& scores,
                                            const Matrix<Scalar>& w_self,
                                            const Matrix<Scalar>& w_nbr,
                                            const Vector<Scalar>& beta, Activation act) {
    if (self_in.size() != w_self.rows() || w_self.rows() != w_nbr.rows() ||
        w_self.cols() != w_nbr.cols()) {
        throw ContractError("layer weight dimensions do not conform");
    }
    if (nbr_ins.rows() != scores.size()) {
        throw ContractError("one score per neighbor input is required");
    }
    RowVector<Scalar> out = self_in.derived().template cast<Scalar>() * w_self;
    if (nbr_ins.rows() > 0) {
        if (nbr_ins.cols() != w_nbr.rows()) {
            throw ContractError("neighbor input dimension does not conform");
        }
        Vector<Scalar> weights = phi(scores, beta);
        RowVector<Scalar> pooled = weights.transpose() * nbr_ins.derived().template cast<Scalar>();
        out += pooled * w_nbr;
    }
    if (act == Activation::Relu) {
        out = out.cwiseMax(Scalar(0));
    }
    return out;
}

/// Cosine similarity; 0 when either norm is below 1e-12.
template <typename DerivedA, typename DerivedB>
[[nodiscard]] typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a,
                                               const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    if (na < Scalar(1e-12) || nb < Scalar(1e-12)) {
        return Scalar(0);
    }
    return a.dot(b) / (na * nb);
}

/// Candidate lists of a two-hop computation: the root's list and, for each of
/// its entries in rank order, that neighbor's own list at the same time.
struct ComputationTree {
    CandidateList root;
    std::vector<CandidateList> children;
};

[[nodiscard]] ComputationTree build_tree(const CandidateSource& source, NodeId u, Timestamp t);

[[nodiscard]] VectorXd list_scores(const CandidateList& list);

/// Hidden state of `list.owner`: first layer over raw features.
template <typename Scalar>
[[nodiscard]] RowVector<Scalar> hidden_state(const MatrixXd& features,
                                             const ModelParams<Scalar>& params,
                                             const CandidateList& list) {
    MatrixXd nbr(static_cast<Eigen::Index>(list.size()), features.cols());
    for (std::size_t i = 0; i < list.size(); ++i) {
        nbr.row(static_cast<Eigen::Index>(i)) = features.row(list.entries[i].neighbor);
    }
    return stagg_layer(features.row(list.owner), nbr, list_scores(list), params.w1_self,
                       params.w1_nbr, params.beta, Activation::Relu);
}

/// Output embedding of the tree's root. The output layer has no activation.
template <typename Scalar>
[[nodiscard]] RowVector<Scalar> forward_tree(const MatrixXd& features,
                                             const ModelParams<Scalar>& params,
                                             const ComputationTree& tree) {
    RowVector<Scalar> self = hidden_state(features, params, tree.root);
    Matrix<Scalar> nbr(static_cast<Eigen::Index>(tree.children.size()), params.hidden_dim());
    for (std::size_t j = 0; j < tree.children.size(); ++j) {
        nbr.row(static_cast<Eigen::Index>(j)) = hidden_state(features, params, tree.children[j]);
    }
    return stagg_layer(self, nbr, list_scores(tree.root), params.w2_self, params.w2_nbr,
                       params.beta, Activation::Identity);
}

struct Embedding {
    NodeId node;
    Timestamp at_time;
    RowVectorXd vector;
};

/// h_u^t: both layers with every candidate list taken at time t.
[[nodiscard]] Embedding forward_node(const CandidateSource& source, const MatrixXd& features,
                                     const Params& params, NodeId u, Timestamp t);

/// Parameters, frozen features and the seed that produced them.
struct Checkpoint {
    Params params;
    MatrixXd features;
    std::uint64_t seed = 0;
};

/// Little-endian binary dump; doubles are stored bit-exact.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace stgnn

#include "stgnn/model.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace stgnn {

namespace {

MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = dist(rng);
    }
    return m;
}

} // namespace

Params init_params(const ModelShape& shape, Rng& rng) {
    if (shape.input_dim <= 0 || shape.hidden_dim <= 0 || shape.output_dim <= 0 ||
        shape.capacity == 0) {
        throw ContractError("model dimensions must be positive");
    }
    Params p;
    p.w1_self = glorot(shape.input_dim, shape.hidden_dim, rng);
    p.w1_nbr = glorot(shape.input_dim, shape.hidden_dim, rng);
    p.w2_self = glorot(shape.hidden_dim, shape.output_dim, rng);
    p.w2_nbr = glorot(shape.hidden_dim, shape.output_dim, rng);
    p.beta = VectorXd::Ones(static_cast<Eigen::Index>(shape.capacity));
    return p;
}

MatrixXd random_features(NodeId num_nodes, Eigen::Index dim, Rng& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    MatrixXd x(num_nodes, dim);
    // Row-major fill order so that feature rows do not depend on N.
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            x(r, c) = dist(rng);
        }
    }
    return x;
}

VectorXd list_scores(const CandidateList& list) {
    VectorXd s(static_cast<Eigen::Index>(list.size()));
    for (std::size_t i = 0; i < list.size(); ++i) {
        s[static_cast<Eigen::Index>(i)] = list.entries[i].score;
    }
    return s;
}

ComputationTree build_tree(const CandidateSource& source, NodeId u, Timestamp t) {
    ComputationTree tree;
    tree.root = source.candidates(u, t);
    tree.children.reserve(tree.root.size());
    for (const auto& entry : tree.root.entries) {
        tree.children.push_back(source.candidates(entry.neighbor, t));
    }
    return tree;
}

Embedding forward_node(const CandidateSource& source, const MatrixXd& features,
                       const Params& params, NodeId u, Timestamp t) {
    if (u < 0 || u >= features.rows()) {
        throw ContractError("node id outside the feature matrix");
    }
    return {u, t, forward_tree(features, params, build_tree(source, u, t))};
}

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'T', 'G', 'N', 'N', 'C', 'K', '1'};

template <typename T>
void put(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) {
        throw Error("truncated checkpoint");
    }
    return value;
}

void put_matrix(std::ostream& out, const MatrixXd& m) {
    put<std::int64_t>(out, m.rows());
    put<std::int64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

MatrixXd get_matrix(std::istream& in) {
    auto rows = get<std::int64_t>(in);
    auto cols = get<std::int64_t>(in);
    if (rows < 0 || cols < 0 || rows > (1 << 26) || cols > (1 << 26)) {
        throw Error("corrupt checkpoint dimensions");
    }
    MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) {
        throw Error("truncated checkpoint");
    }
    return m;
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write checkpoint " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    put<std::uint64_t>(out, ckpt.seed);
    put_matrix(out, ckpt.params.w1_self);
    put_matrix(out, ckpt.params.w1_nbr);
    put_matrix(out, ckpt.params.w2_self);
    put_matrix(out, ckpt.params.w2_nbr);
    put_matrix(out, ckpt.params.beta);
    put_matrix(out, ckpt.features);
    if (!out) {
        throw Error("failed writing checkpoint " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open checkpoint " + path.string());
    }
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) {
        throw Error("not a checkpoint file: " + path.string());
    }
    Checkpoint ckpt;
    ckpt.seed = get<std::uint64_t>(in);
    ckpt.params.w1_self = get_matrix(in);
    ckpt.params.w1_nbr = get_matrix(in);
    ckpt.params.w2_self = get_matrix(in);
    ckpt.params.w2_nbr = get_matrix(in);
    MatrixXd beta = get_matrix(in);
    if (beta.cols() != 1) {
        throw Error("corrupt checkpoint: beta must be a column");
    }
    ckpt.params.beta = beta.col(0);
    ckpt.features = get_matrix(in);
    const auto& p = ckpt.params;
    if (p.w1_nbr.rows() != p.input_dim() || p.w1_nbr.cols() != p.hidden_dim() ||
        p.w2_self.rows() != p.hidden_dim() || p.w2_nbr.rows() != p.hidden_dim() ||
        p.w2_nbr.cols() != p.output_dim() || ckpt.features.cols() != p.input_dim()) {
        throw Error("corrupt checkpoint: tensor shapes disagree");
    }
    return ckpt;
}

} // namespace stgnn

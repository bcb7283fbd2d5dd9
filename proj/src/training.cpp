#include "stgnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>

namespace stgnn {

void TrainConfig::validate() const {
    if (!(lr > 0.0)) {
        throw ContractError("learning rate must be positive");
    }
    if (epochs < 1) {
        throw ContractError("epochs must be at least 1");
    }
    if (batch_size == 0) {
        throw ContractError("batch size must be positive");
    }
    if (m == 0) {
        throw ContractError("history capacity must be at least 1");
    }
    if (!(p >= 0.0 && p < 1.0)) {
        throw ContractError("window proportion p must lie in [0, 1)");
    }
    if (!(lambda > 0.0)) {
        throw ContractError("decay rate must be positive");
    }
    if (input_dim <= 0 || hidden_dim <= 0 || output_dim <= 0) {
        throw ContractError("layer dimensions must be positive");
    }
    if (delta && !(*delta > 0.0)) {
        throw ContractError("window size must be positive");
    }
}

SelectionPolicy TrainConfig::selection() const {
    SelectionPolicy policy;
    policy.m = m;
    policy.lambda = lambda;
    policy.mode = use_significant_selection ? Selection::Significant : Selection::Uniform;
    policy.seed = mix64(seed ^ hash_name("selection"));
    return policy;
}

ModelShape TrainConfig::shape() const {
    return {input_dim, hidden_dim, output_dim, m};
}

std::vector<TrainSample> make_positives(const TemporalGraph& train, const TrainConfig& config) {
    if (config.use_intimate_window && !config.delta) {
        throw ContractError("the intimate window needs a window size");
    }
    std::vector<TrainSample> out;
    out.reserve(train.num_events());
    for (const auto& e : train.events()) {
        std::size_t label = 1;
        if (config.use_intimate_window) {
            label = significance_label(train, e.u, e.v, e.t, *config.delta);
        }
        out.push_back({e.u, e.v, e.t, SampleLabel::Positive, label});
    }
    return out;
}

NegativeBatch sample_negatives(const TemporalGraph& g, std::span<const TrainSample> positives,
                               std::optional<double> delta, Rng& rng) {
    constexpr int kMaxTries = 100;
    NegativeBatch out;
    out.negatives.reserve(positives.size());
    const NodeId n = g.num_nodes();
    for (const auto& pos : positives) {
        std::optional<TrainSample> found;
        if (n >= 2) {
            std::uniform_int_distribution<NodeId> pick(0, n - 2);
            const Timestamp end =
                delta ? pos.t + *delta : std::nextafter(pos.t, std::numeric_limits<double>::infinity());
            for (int attempt = 0; attempt < kMaxTries; ++attempt) {
                NodeId w = pick(rng);
                if (w >= pos.u) {
                    ++w;
                }
                if (count_in_window(g.pair_times(pos.u, w), pos.t, end) == 0) {
                    found = TrainSample{pos.u, w, pos.t, SampleLabel::Negative, 0};
                    break;
                }
            }
        }
        if (!found) {
            ++out.skipped;
        }
        out.negatives.push_back(found);
    }
    return out;
}

double batch_balance(std::span<const TrainSample> batch) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : batch) {
        if (s.label == SampleLabel::Positive) {
            sum += static_cast<double>(s.s_delta);
            ++count;
        }
    }
    if (count == 0) {
        throw ContractError("batch has no positive samples");
    }
    return sum / static_cast<double>(count);
}

Example make_example(const CandidateSource& source, const TrainSample& sample) {
    return {sample, build_tree(source, sample.u, sample.t), build_tree(source, sample.v, sample.t)};
}

namespace {

// First-layer projections x_n W1 for the nodes a batch touches, and the
// matching gradient rows.
class LayerOneCache {
public:
    LayerOneCache(const MatrixXd& features, const Params& params)
        : features_(features), params_(params),
          self_(features.rows(), params.hidden_dim()), nbr_(features.rows(), params.hidden_dim()),
          grad_self_(features.rows(), params.hidden_dim()),
          grad_nbr_(features.rows(), params.hidden_dim()),
          ready_(static_cast<std::size_t>(features.rows()), 0) {}

    auto self(NodeId n) { ensure(n); return self_.row(n); }
    auto nbr(NodeId n) { ensure(n); return nbr_.row(n); }
    auto grad_self(NodeId n) { ensure(n); return grad_self_.row(n); }
    auto grad_nbr(NodeId n) { ensure(n); return grad_nbr_.row(n); }

    void reduce_into(Params& grad) const {
        for (NodeId n : touched_) {
            grad.w1_self.noalias() += features_.row(n).transpose() * grad_self_.row(n);
            grad.w1_nbr.noalias() += features_.row(n).transpose() * grad_nbr_.row(n);
        }
    }

private:
    void ensure(NodeId n) {
        auto& flag = ready_[static_cast<std::size_t>(n)];
        if (flag) {
            return;
        }
        flag = 1;
        self_.row(n).noalias() = features_.row(n) * params_.w1_self;
        nbr_.row(n).noalias() = features_.row(n) * params_.w1_nbr;
        grad_self_.row(n).setZero();
        grad_nbr_.row(n).setZero();
        touched_.push_back(n);
    }

    const MatrixXd& features_;
    const Params& params_;
    MatrixXd self_;
    MatrixXd nbr_;
    MatrixXd grad_self_;
    MatrixXd grad_nbr_;
    std::vector<char> ready_;
    std::vector<NodeId> touched_;
};

struct HiddenTrace {
    RowVectorXd pre;
    RowVectorXd h;
    VectorXd weights;
};

struct TreeTrace {
    HiddenTrace root;
    std::vector<HiddenTrace> children;
    VectorXd weights;
    RowVectorXd pooled;
    RowVectorXd out;
};

HiddenTrace hidden_forward(LayerOneCache& cache, const Params& params, const CandidateList& list) {
    HiddenTrace tr;
    tr.pre = cache.self(list.owner);
    if (!list.empty()) {
        tr.weights = phi(list_scores(list), params.beta);
        for (std::size_t i = 0; i < list.size(); ++i) {
            tr.pre += tr.weights[static_cast<Eigen::Index>(i)] * cache.nbr(list.entries[i].neighbor);
        }
    }
    tr.h = tr.pre.cwiseMax(0.0);
    return tr;
}

TreeTrace tree_forward(LayerOneCache& cache, const Params& params, const ComputationTree& tree) {
    TreeTrace tr;
    tr.root = hidden_forward(cache, params, tree.root);
    tr.out = tr.root.h * params.w2_self;
    tr.pooled = RowVectorXd::Zero(params.hidden_dim());
    if (!tree.root.empty()) {
        tr.weights = phi(list_scores(tree.root), params.beta);
        tr.children.reserve(tree.children.size());
        for (std::size_t j = 0; j < tree.children.size(); ++j) {
            tr.children.push_back(hidden_forward(cache, params, tree.children[j]));
            tr.pooled += tr.weights[static_cast<Eigen::Index>(j)] * tr.children.back().h;
        }
        tr.out.noalias() += tr.pooled * params.w2_nbr;
    }
    return tr;
}

// d loss / d logit for a softmax, given d loss / d weight.
VectorXd softmax_backward(const VectorXd& weights, const VectorXd& grad_weights) {
    const double mean = weights.dot(grad_weights);
    return weights.cwiseProduct((grad_weights.array() - mean).matrix());
}

void accumulate_beta(Params& grad, const CandidateList& list, const VectorXd& grad_logits) {
    for (std::size_t i = 0; i < list.size(); ++i) {
        grad.beta[static_cast<Eigen::Index>(i)] +=
            grad_logits[static_cast<Eigen::Index>(i)] * list.entries[i].score;
    }
}

void hidden_backward(LayerOneCache& cache, const Params&, const CandidateList& list,
                     const HiddenTrace& tr, const RowVectorXd& grad_h, Params& grad,
                     const GradientOptions& options) {
    RowVectorXd grad_pre = grad_h.cwiseProduct((tr.pre.array() > 0.0).cast<double>().matrix());
    cache.grad_self(list.owner) += grad_pre;
    if (list.empty()) {
        return;
    }
    VectorXd grad_w(static_cast<Eigen::Index>(list.size()));
    for (std::size_t i = 0; i < list.size(); ++i) {
        const NodeId n = list.entries[i].neighbor;
        const auto k = static_cast<Eigen::Index>(i);
        cache.grad_nbr(n) += tr.weights[k] * grad_pre;
        grad_w[k] = grad_pre.dot(cache.nbr(n));
    }
    if (!options.detach_significance_weights) {
        accumulate_beta(grad, list, softmax_backward(tr.weights, grad_w));
    }
}

void tree_backward(LayerOneCache& cache, const Params& params, const ComputationTree& tree,
                   const TreeTrace& tr, const RowVectorXd& grad_out, Params& grad,
                   const GradientOptions& options) {
    grad.w2_self.noalias() += tr.root.h.transpose() * grad_out;
    RowVectorXd grad_root = grad_out * params.w2_self.transpose();
    hidden_backward(cache, params, tree.root, tr.root, grad_root, grad, options);
    if (tree.root.empty()) {
        return;
    }
    grad.w2_nbr.noalias() += tr.pooled.transpose() * grad_out;
    RowVectorXd grad_pooled = grad_out * params.w2_nbr.transpose();
    VectorXd grad_w(static_cast<Eigen::Index>(tree.children.size()));
    for (std::size_t j = 0; j < tree.children.size(); ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        grad_w[k] = grad_pooled.dot(tr.children[j].h);
        RowVectorXd grad_child = tr.weights[k] * grad_pooled;
        hidden_backward(cache, params, tree.children[j], tr.children[j], grad_child, grad,
                        options);
    }
    if (!options.detach_significance_weights) {
        accumulate_beta(grad, tree.root, softmax_backward(tr.weights, grad_w));
    }
}

struct CosineGrad {
    double value = 0.0;
    RowVectorXd da;
    RowVectorXd db;
};

CosineGrad cosine_with_grad(const RowVectorXd& a, const RowVectorXd& b) {
    CosineGrad out;
    const double na = a.norm();
    const double nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) {
        out.da = RowVectorXd::Zero(a.size());
        out.db = RowVectorXd::Zero(b.size());
        return out;
    }
    out.value = a.dot(b) / (na * nb);
    out.da = b / (na * nb) - out.value * a / (na * na);
    out.db = a / (na * nb) - out.value * b / (nb * nb);
    return out;
}

} // namespace

LossGradient backward(std::span<const Example> batch, const MatrixXd& features,
                      const Params& params, double s_bar, const GradientOptions& options) {
    if (batch.empty()) {
        throw ContractError("empty batch");
    }
    LossGradient result;
    result.grad = params.zeros_like();
    LayerOneCache cache(features, params);
    const double scale = 1.0 / static_cast<double>(batch.size());

    for (const auto& ex : batch) {
        TreeTrace tu = tree_forward(cache, params, ex.u_tree);
        TreeTrace tv = tree_forward(cache, params, ex.v_tree);
        CosineGrad cg = cosine_with_grad(tu.out, tv.out);
        result.loss += significance_loss(cg.value, ex.sample.s_delta, s_bar);

        double dloss_dcos = 0.0;
        if (ex.sample.s_delta >= 1) {
            dloss_dcos = -static_cast<double>(ex.sample.s_delta);
        } else if (cg.value > 0.0) {
            dloss_dcos = s_bar;
        }
        if (dloss_dcos == 0.0) {
            continue;
        }
        dloss_dcos *= scale;
        tree_backward(cache, params, ex.u_tree, tu, dloss_dcos * cg.da, result.grad, options);
        tree_backward(cache, params, ex.v_tree, tv, dloss_dcos * cg.db, result.grad, options);
    }
    cache.reduce_into(result.grad);
    result.loss *= scale;
    return result;
}

double kink_margin(std::span<const Example> batch, const MatrixXd& features,
                   const Params& params) {
    LayerOneCache cache(features, params);
    double margin = std::numeric_limits<double>::infinity();
    auto visit = [&](const TreeTrace& tr) {
        margin = std::min(margin, tr.root.pre.cwiseAbs().minCoeff());
        for (const auto& c : tr.children) {
            margin = std::min(margin, c.pre.cwiseAbs().minCoeff());
        }
    };
    for (const auto& ex : batch) {
        TreeTrace tu = tree_forward(cache, params, ex.u_tree);
        TreeTrace tv = tree_forward(cache, params, ex.v_tree);
        visit(tu);
        visit(tv);
        if (ex.sample.s_delta == 0) {
            margin = std::min(margin, std::abs(cosine(tu.out, tv.out)));
        }
    }
    return margin;
}

AdamState AdamState::for_params(const Params& params) {
    AdamState s;
    s.first_moment = params.zeros_like();
    s.second_moment = params.zeros_like();
    return s;
}

namespace {

template <typename Derived>
void adam_update(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<Derived>& grad,
                 Eigen::MatrixBase<Derived>& m, Eigen::MatrixBase<Derived>& v,
                 const AdamState& s, double step_size, double bias2) {
    m = s.beta1 * m + (1.0 - s.beta1) * grad;
    v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseAbs2();
    param.array() -= step_size * m.array() / ((v.array() / bias2).sqrt() + s.epsilon);
}

} // namespace

void adam_step(Params& params, const Params& grads, AdamState& state, double lr) {
    if (grads.w1_self.rows() != params.w1_self.rows() || grads.beta.size() != params.beta.size() ||
        state.first_moment.beta.size() != params.beta.size()) {
        throw ContractError("optimizer state does not match the parameters");
    }
    ++state.step;
    const auto t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(state.beta1, t);
    const double bias2 = 1.0 - std::pow(state.beta2, t);
    const double step_size = lr / bias1;
    adam_update(params.w1_self, grads.w1_self, state.first_moment.w1_self,
                state.second_moment.w1_self, state, step_size, bias2);
    adam_update(params.w1_nbr, grads.w1_nbr, state.first_moment.w1_nbr,
                state.second_moment.w1_nbr, state, step_size, bias2);
    adam_update(params.w2_self, grads.w2_self, state.first_moment.w2_self,
                state.second_moment.w2_self, state, step_size, bias2);
    adam_update(params.w2_nbr, grads.w2_nbr, state.first_moment.w2_nbr,
                state.second_moment.w2_nbr, state, step_size, bias2);
    adam_update(params.beta, grads.beta, state.first_moment.beta, state.second_moment.beta, state,
                step_size, bias2);
}

TrainResult train(const TemporalGraph& train_graph, const MatrixXd& features,
                  const TrainConfig& config) {
    config.validate();
    if (train_graph.empty()) {
        throw ContractError("training graph is empty");
    }
    if (features.rows() != train_graph.num_nodes() || features.cols() != config.input_dim) {
        throw ContractError("feature matrix does not match the graph and input dimension");
    }

    Rng param_rng = make_stream(config.seed, "params");
    Rng negative_rng = make_stream(config.seed, "negatives");
    TrainResult result;
    result.params = init_params(config.shape(), param_rng);
    AdamState adam = AdamState::for_params(result.params);

    const auto positives = make_positives(train_graph, config);
    const auto events = train_graph.events();
    const SelectionPolicy policy = config.selection();
    SignificanceIndex index(train_graph.num_nodes(), config.lambda);
    StreamCandidates source(index, policy);

    const auto start = std::chrono::steady_clock::now();
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        NegativeBatch negs = sample_negatives(train_graph, positives, config.delta, negative_rng);
        result.negatives_skipped += negs.skipped;
        index.reset();
        std::size_t cursor = 0;
        double loss_sum = 0.0;
        std::size_t sample_count = 0;

        for (std::size_t first = 0; first < positives.size(); first += config.batch_size) {
            const std::size_t last = std::min(positives.size(), first + config.batch_size);
            std::vector<Example> batch;
            std::vector<TrainSample> samples;
            batch.reserve(2 * (last - first));
            for (std::size_t i = first; i < last; ++i) {
                const auto& pos = positives[i];
                while (cursor < events.size() && events[cursor].t < pos.t) {
                    index.observe(events[cursor++]);
                }
                Example ex = make_example(source, pos);
                samples.push_back(pos);
                if (negs.negatives[i]) {
                    const auto& neg = *negs.negatives[i];
                    Example nex{neg, ex.u_tree, build_tree(source, neg.v, neg.t)};
                    batch.push_back(std::move(ex));
                    batch.push_back(std::move(nex));
                    samples.push_back(neg);
                } else {
                    batch.push_back(std::move(ex));
                }
            }
            const double s_bar = config.use_intimate_window ? batch_balance(samples) : 1.0;
            LossGradient lg = backward(batch, features, result.params, s_bar);
            if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
                throw TrainingDiverged("non-finite loss or gradient in epoch " +
                                           std::to_string(epoch),
                                       result.params, epoch);
            }
            adam_step(result.params, lg.grad, adam, config.lr);
            loss_sum += lg.loss * static_cast<double>(batch.size());
            sample_count += batch.size();
        }

        const double mean_loss = loss_sum / static_cast<double>(sample_count);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.history.push_back({epoch, mean_loss, elapsed});

        if (mean_loss < best - config.plateau_tolerance * std::abs(best) ||
            !std::isfinite(best)) {
            best = mean_loss;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    if (result.negatives_skipped > 0) {
        std::cerr << "warning: " << result.negatives_skipped
                  << " positive(s) had no valid negative and were trained without one\n";
    }
    return result;
}

} // namespace stgnn

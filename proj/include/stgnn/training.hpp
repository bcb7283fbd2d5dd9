#pragma once

#include "stgnn/model.hpp"
#include "stgnn/significance.hpp"
#include "stgnn/temporal_graph.hpp"

#include <optional>
#include <span>
#include <vector>

namespace stgnn {

enum class SampleLabel { Positive, Negative };

struct TrainSample {
    NodeId u;
    NodeId v;
    Timestamp t;
    SampleLabel label;
    /// Contacts of (u, v) inside the intimate window; 0 for negatives.
    std::size_t s_delta;
};

struct TrainConfig {
    double lr = 0.01;
    int epochs = 50;
    std::size_t batch_size = 128;
    std::size_t m = 10;
    /// Fraction of inter-event gaps the intimate window should cover.
    double p = 0.5;
    double lambda = 1.0;
    std::uint64_t seed = 0;
    bool use_significant_selection = true;
    bool use_intimate_window = true;
    Eigen::Index input_dim = 128;
    Eigen::Index hidden_dim = 16;
    Eigen::Index output_dim = 16;
    /// Stop when the epoch loss has not improved by this relative amount for
    /// `patience` consecutive epochs.
    int patience = 10;
    double plateau_tolerance = 1e-4;
    /// Intimate window size in model time units.
    std::optional<double> delta;

    void validate() const;
    [[nodiscard]] SelectionPolicy selection() const;
    [[nodiscard]] ModelShape shape() const;
};

/// One positive per training event, in time order. With the intimate window
/// enabled the label counts contacts in [t, t + delta) of the given graph;
/// otherwise every label is 1.
[[nodiscard]] std::vector<TrainSample> make_positives(const TemporalGraph& train,
                                                      const TrainConfig& config);

struct NegativeBatch {
    /// negatives[i] corrupts positives[i]; empty when that draw was skipped.
    std::vector<std::optional<TrainSample>> negatives;
    std::size_t skipped = 0;
};

/// For every positive (u, v, t) draws w != u uniformly among nodes with no
/// (u, w) contact in [t, t + delta) (or at exactly t when no window is
/// given). Gives up on a positive after 100 rejected draws.
[[nodiscard]] NegativeBatch sample_negatives(const TemporalGraph& g,
                                             std::span<const TrainSample> positives,
                                             std::optional<double> delta, Rng& rng);

/// Mean s_delta over the positives of a batch.
[[nodiscard]] double batch_balance(std::span<const TrainSample> batch);

/// (1 - cos) s_delta for positives, max(0, cos) s_bar for negatives.
template <typename Scalar>
[[nodiscard]] Scalar significance_loss(Scalar cos_uv, std::size_t s_delta, Scalar s_bar) {
    if (s_delta >= 1) {
        return (Scalar(1) - cos_uv) * static_cast<Scalar>(s_delta);
    }
    return std::max(Scalar(0), cos_uv) * s_bar;
}

template <typename DerivedA, typename DerivedB>
[[nodiscard]] typename DerivedA::Scalar significance_loss(const Eigen::MatrixBase<DerivedA>& h_u,
                                                          const Eigen::MatrixBase<DerivedB>& h_v,
                                                          std::size_t s_delta,
                                                          typename DerivedA::Scalar s_bar) {
    return significance_loss(cosine(h_u, h_v), s_delta, s_bar);
}

/// A sample together with the computation trees of both endpoints.
struct Example {
    TrainSample sample;
    ComputationTree u_tree;
    ComputationTree v_tree;
};

[[nodiscard]] Example make_example(const CandidateSource& source, const TrainSample& sample);

/// Mean significance loss of a batch, evaluated through the generic forward
/// pass in precision `Scalar`.
template <typename Scalar>
[[nodiscard]] Scalar batch_loss(std::span<const Example> batch, const MatrixXd& features,
                                const ModelParams<Scalar>& params, double s_bar) {
    if (batch.empty()) {
        throw ContractError("empty batch");
    }
    Scalar total(0);
    for (const auto& ex : batch) {
        RowVector<Scalar> hu = forward_tree(features, params, ex.u_tree);
        RowVector<Scalar> hv = forward_tree(features, params, ex.v_tree);
        total += significance_loss(hu, hv, ex.sample.s_delta, static_cast<Scalar>(s_bar));
    }
    return total / static_cast<Scalar>(batch.size());
}

struct GradientOptions {
    /// Treat the softmax weights as constants (no gradient reaches beta).
    bool detach_significance_weights = false;
};

struct LossGradient {
    double loss = 0.0;
    Params grad;
};

/// Exact reverse-mode gradient of the mean batch loss with respect to all
/// five tensors. Features receive no gradient. ReLU has derivative 0 at 0.
[[nodiscard]] LossGradient backward(std::span<const Example> batch, const MatrixXd& features,
                                    const Params& params, double s_bar,
                                    const GradientOptions& options = {});

/// Smallest distance of the batch to a non-differentiable point: ReLU
/// pre-activations at 0 and negative-sample cosines at 0.
[[nodiscard]] double kink_margin(std::span<const Example> batch, const MatrixXd& features,
                                 const Params& params);

struct AdamState {
    Params first_moment;
    Params second_moment;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    [[nodiscard]] static AdamState for_params(const Params& params);
};

/// Bias-corrected Adam update, in place.
void adam_step(Params& params, const Params& grads, AdamState& state, double lr);

struct EpochRecord {
    int epoch;
    double mean_loss;
    double wall_time;
};

struct TrainResult {
    Params params;
    std::vector<EpochRecord> history;
    std::size_t negatives_skipped = 0;
};

/// Raised when the loss or gradient stops being finite; carries the last
/// finite parameters.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, Params last_finite, int epoch)
        : Error(what), last_finite_(std::move(last_finite)), epoch_(epoch) {}

    [[nodiscard]] const Params& last_finite() const noexcept { return last_finite_; }
    [[nodiscard]] int epoch() const noexcept { return epoch_; }

private:
    Params last_finite_;
    int epoch_;
};

/// Chronological mini-batch training. Candidate lists come from a streaming
/// index that has seen exactly the events before each sample's time.
/// Parameters are drawn from the "params" stream and negatives from the
/// "negatives" stream of `config.seed`.
[[nodiscard]] TrainResult train(const TemporalGraph& train_graph, const MatrixXd& features,
                                const TrainConfig& config);

} // namespace stgnn

#pragma once

#include "stgnn/evaluation.hpp"
#include "stgnn/powerlaw.hpp"
#include "stgnn/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stgnn {

enum class AblationMode { BGNN, BGNN_S, BGNN_I, STGNN };

inline constexpr std::array<AblationMode, 4> kAblationModes = {
    AblationMode::BGNN, AblationMode::BGNN_S, AblationMode::BGNN_I, AblationMode::STGNN};

[[nodiscard]] std::string_view to_string(AblationMode mode) noexcept;
[[nodiscard]] AblationMode parse_ablation(std::string_view name);

/// BGNN: neither mechanism; +S: significant selection; +I: intimate window.
void apply_ablation(AblationMode mode, TrainConfig& config);

struct ExperimentConfig {
    std::string dataset;
    double time_unit = 1.0;
    std::size_t time_column = 2;
    double split_ratio = 0.75;
    TrainConfig train;
    int repetitions = 10;
    std::string output_dir = "results";
    AblationMode ablation = AblationMode::STGNN;
    bool per_source_map = false;
    /// Fixed window size; skips the power-law fit when set.
    std::optional<double> delta;

    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
    /// Missing keys keep their defaults; unknown keys are rejected.
    [[nodiscard]] static ExperimentConfig from_json(const nlohmann::json& j);
};

struct WindowInfo {
    std::optional<PowerLawFit> fit;
    std::optional<double> delta;
    std::size_t intervals = 0;
    std::size_t zero_gaps_dropped = 0;
};

struct RunResult {
    std::uint64_t seed = 0;
    MetricsReport metrics;
    Params params;
    std::vector<EpochRecord> history;
    std::size_t negatives_skipped = 0;
};

struct Aggregate {
    std::size_t runs = 0;
    double mean_auc = 0.0;
    double std_auc = 0.0;
    double mean_map = 0.0;
    double std_map = 0.0;
    double mean_reference_auc = 0.0;
};

/// Normalization applied to the input, echoed into reports.
struct DataSummary {
    std::size_t num_nodes = 0;
    std::size_t num_events = 0;
    std::size_t train_events = 0;
    std::size_t self_loops_dropped = 0;
    double raw_time_offset = 0.0;
    double t_split = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    DataSummary data;
    WindowInfo window;
    std::vector<RunResult> runs;
    Aggregate aggregate;
};

/// Sample mean and standard deviation (n - 1) of best AUC/MAP.
[[nodiscard]] Aggregate aggregate_runs(std::span<const RunResult> runs);

/// Fits the intimate window on the training graph (unless a size is given).
[[nodiscard]] WindowInfo compute_window(const TemporalGraph& train, const ExperimentConfig& config);

/// One training + evaluation pass for a single seed.
[[nodiscard]] RunResult run_single(const TemporalGraph& full, const DataSplit& split,
                                   const WindowInfo& window, const ExperimentConfig& config,
                                   std::uint64_t seed);

/// Load, split, fit, then train and evaluate seeds seed, seed+1, ... When
/// `write_reports` is set, per-seed JSON, loss CSV, checkpoints and the
/// aggregate land in config.output_dir as each seed completes.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& config,
                                              bool write_reports = true);

/// Same as run_experiment on an already loaded graph.
[[nodiscard]] ExperimentResult run_experiment(const LoadedGraph& loaded,
                                              const ExperimentConfig& config, bool write_reports);

/// Runs all four ablation modes on identical data and seeds. Each mode writes
/// to output_dir/<mode>; an ablation.csv summary goes to output_dir.
[[nodiscard]] std::vector<ExperimentResult> run_ablation_grid(const ExperimentConfig& config,
                                                              bool write_reports = true);

enum class SweepParameter { P, M };
[[nodiscard]] SweepParameter parse_sweep_parameter(std::string_view name);

struct SweepPoint {
    double value;
    Aggregate aggregate;
};

/// One experiment per value; rejects invalid values before any run. Writes
/// sweep_<param>.csv with value,mean_auc,std_auc,mean_map,std_map.
[[nodiscard]] std::vector<SweepPoint> sweep(const ExperimentConfig& config,
                                            SweepParameter parameter,
                                            std::span<const double> values,
                                            bool write_reports = true);

[[nodiscard]] nlohmann::json run_report(const ExperimentResult& experiment, const RunResult& run);
[[nodiscard]] nlohmann::json aggregate_report(const ExperimentResult& experiment);
void write_loss_history(std::span<const EpochRecord> history, const std::filesystem::path& path);

} // namespace stgnn

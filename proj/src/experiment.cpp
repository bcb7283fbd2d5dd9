#include "stgnn/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace stgnn {

using nlohmann::json;

std::string_view to_string(AblationMode mode) noexcept {
    switch (mode) {
    case AblationMode::BGNN:
        return "BGNN";
    case AblationMode::BGNN_S:
        return "BGNN+S";
    case AblationMode::BGNN_I:
        return "BGNN+I";
    case AblationMode::STGNN:
        return "STGNN";
    }
    return "?";
}

AblationMode parse_ablation(std::string_view name) {
    for (auto mode : kAblationModes) {
        if (name == to_string(mode)) {
            return mode;
        }
    }
    throw Error("unknown ablation mode '" + std::string(name) +
                "' (expected BGNN, BGNN+S, BGNN+I or STGNN)");
}

void apply_ablation(AblationMode mode, TrainConfig& config) {
    config.use_significant_selection = mode == AblationMode::BGNN_S || mode == AblationMode::STGNN;
    config.use_intimate_window = mode == AblationMode::BGNN_I || mode == AblationMode::STGNN;
}

void ExperimentConfig::validate() const {
    if (dataset.empty()) {
        throw ContractError("no dataset given");
    }
    if (!(time_unit > 0.0)) {
        throw ContractError("time_unit must be positive");
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
        throw ContractError("split ratio must lie in (0, 1)");
    }
    if (repetitions < 1) {
        throw ContractError("repetitions must be at least 1");
    }
    if (delta && !(*delta > 0.0)) {
        throw ContractError("window size must be positive");
    }
    train.validate();
}

json ExperimentConfig::to_json() const {
    TrainConfig effective = train;
    apply_ablation(ablation, effective);
    return {
        {"dataset", dataset},
        {"time_unit", time_unit},
        {"time_column", time_column},
        {"split_ratio", split_ratio},
        {"repetitions", repetitions},
        {"output_dir", output_dir},
        {"ablation", std::string(to_string(ablation))},
        {"per_source_map", per_source_map},
        {"delta", delta ? json(*delta) : json(nullptr)},
        {"train",
         {
             {"lr", train.lr},
             {"epochs", train.epochs},
             {"batch_size", train.batch_size},
             {"m", train.m},
             {"p", train.p},
             {"lambda", train.lambda},
             {"seed", train.seed},
             {"input_dim", train.input_dim},
             {"hidden_dim", train.hidden_dim},
             {"output_dim", train.output_dim},
             {"patience", train.patience},
             {"plateau_tolerance", train.plateau_tolerance},
             {"use_significant_selection", effective.use_significant_selection},
             {"use_intimate_window", effective.use_intimate_window},
         }},
    };
}

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        out = it->get<T>();
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            ok = ok || key == k;
        }
        if (!ok) {
            throw Error(std::string("unknown ") + where + " key '" + key + "'");
        }
    }
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) {
        throw Error("configuration must be a JSON object");
    }
    reject_unknown(j,
                   {"dataset", "time_unit", "time_column", "split_ratio", "repetitions",
                    "output_dir", "ablation", "per_source_map", "delta", "train"},
                   "configuration");
    ExperimentConfig c;
    try {
        read_key(j, "dataset", c.dataset);
        read_key(j, "time_unit", c.time_unit);
        read_key(j, "time_column", c.time_column);
        read_key(j, "split_ratio", c.split_ratio);
        read_key(j, "repetitions", c.repetitions);
        read_key(j, "output_dir", c.output_dir);
        read_key(j, "per_source_map", c.per_source_map);
        if (auto it = j.find("ablation"); it != j.end()) {
            c.ablation = parse_ablation(it->get<std::string>());
        }
        if (auto it = j.find("delta"); it != j.end() && !it->is_null()) {
            c.delta = it->get<double>();
        }
        if (auto it = j.find("train"); it != j.end()) {
            const json& t = *it;
            reject_unknown(t,
                           {"lr", "epochs", "batch_size", "m", "p", "lambda", "seed", "input_dim",
                            "hidden_dim", "output_dim", "patience", "plateau_tolerance",
                            "use_significant_selection", "use_intimate_window"},
                           "train");
            read_key(t, "lr", c.train.lr);
            read_key(t, "epochs", c.train.epochs);
            read_key(t, "batch_size", c.train.batch_size);
            read_key(t, "m", c.train.m);
            read_key(t, "p", c.train.p);
            read_key(t, "lambda", c.train.lambda);
            read_key(t, "seed", c.train.seed);
            read_key(t, "input_dim", c.train.input_dim);
            read_key(t, "hidden_dim", c.train.hidden_dim);
            read_key(t, "output_dim", c.train.output_dim);
            read_key(t, "patience", c.train.patience);
            read_key(t, "plateau_tolerance", c.train.plateau_tolerance);
        }
    } catch (const json::exception& e) {
        throw Error(std::string("invalid configuration value: ") + e.what());
    }
    apply_ablation(c.ablation, c.train);
    return c;
}

Aggregate aggregate_runs(std::span<const RunResult> runs) {
    Aggregate a;
    a.runs = runs.size();
    if (runs.empty()) {
        return a;
    }
    const double n = static_cast<double>(runs.size());
    for (const auto& r : runs) {
        a.mean_auc += r.metrics.best_auc;
        a.mean_map += r.metrics.best_map;
        a.mean_reference_auc += r.metrics.reference_auc;
    }
    a.mean_auc /= n;
    a.mean_map /= n;
    a.mean_reference_auc /= n;
    if (runs.size() > 1) {
        for (const auto& r : runs) {
            a.std_auc += (r.metrics.best_auc - a.mean_auc) * (r.metrics.best_auc - a.mean_auc);
            a.std_map += (r.metrics.best_map - a.mean_map) * (r.metrics.best_map - a.mean_map);
        }
        a.std_auc = std::sqrt(a.std_auc / (n - 1.0));
        a.std_map = std::sqrt(a.std_map / (n - 1.0));
    }
    return a;
}

WindowInfo compute_window(const TemporalGraph& train, const ExperimentConfig& config) {
    WindowInfo w;
    if (config.delta) {
        w.delta = config.delta;
        return w;
    }
    TrainConfig effective = config.train;
    apply_ablation(config.ablation, effective);
    try {
        auto gaps = collect_inter_event_times(train);
        w.intervals = gaps.intervals.size();
        w.zero_gaps_dropped = gaps.zeros_dropped;
        w.fit = fit_power_law(gaps.intervals);
        w.delta = intimate_window_size(*w.fit, config.train.p);
    } catch (const Error& e) {
        if (effective.use_intimate_window) {
            throw Error(std::string("cannot size the intimate window: ") + e.what());
        }
        std::cerr << "warning: power-law fit unavailable (" << e.what() << ")\n";
    }
    return w;
}

RunResult run_single(const TemporalGraph& full, const DataSplit& split, const WindowInfo& window,
                     const ExperimentConfig& config, std::uint64_t seed) {
    TrainConfig tc = config.train;
    apply_ablation(config.ablation, tc);
    tc.seed = seed;
    tc.delta = window.delta;

    Rng feature_rng = make_stream(seed, "features");
    MatrixXd features = random_features(full.num_nodes(), tc.input_dim, feature_rng);

    TrainResult trained = train(split.train, features, tc);

    EvalConfig ec;
    ec.selection = tc.selection();
    ec.seed = seed;
    ec.per_source_map = config.per_source_map;

    RunResult r;
    r.seed = seed;
    r.metrics = evaluate(full, split, trained.params, features, ec);
    r.params = std::move(trained.params);
    r.history = std::move(trained.history);
    r.negatives_skipped = trained.negatives_skipped;
    return r;
}

namespace {

json fit_json(const WindowInfo& w, double p) {
    json j = {{"p", p}, {"delta", w.delta ? json(*w.delta) : json(nullptr)}};
    if (w.fit) {
        j["alpha"] = w.fit->alpha;
        j["xmin"] = w.fit->xmin;
        j["c"] = w.fit->c;
        j["ks_distance"] = w.fit->ks_distance;
        j["n_tail"] = w.fit->n_tail;
        j["intervals"] = w.intervals;
        j["zero_gaps_dropped"] = w.zero_gaps_dropped;
    } else {
        j["alpha"] = nullptr;
        j["xmin"] = nullptr;
    }
    return j;
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << std::setw(2) << j << '\n';
}


} // namespace

json run_report(const ExperimentResult& experiment, const RunResult& run) {
    const auto& m = run.metrics;
    json sim = json::object();
    for (std::size_t k = 0; k < kSimilarities.size(); ++k) {
        sim[std::string(to_string(kSimilarities[k]))] = {{"auc", m.by_similarity[k].auc},
                                                         {"map", m.by_similarity[k].map}};
    }
    ExperimentConfig echo = experiment.config;
    echo.train.seed = run.seed;
    echo.repetitions = 1;
    return {
        {"dataset", experiment.config.dataset},
        {"seed", run.seed},
        {"ablation", std::string(to_string(experiment.config.ablation))},
        {"similarity", sim},
        {"best_auc", m.best_auc},
        {"best_auc_similarity", std::string(to_string(m.best_auc_similarity))},
        {"best_map", m.best_map},
        {"best_map_similarity", std::string(to_string(m.best_map_similarity))},
        {"reference_auc", m.reference_auc},
        {"reference_map", m.reference_map},
        {"n_pos", m.n_pos},
        {"n_neg", m.n_neg},
        {"map_granularity", experiment.config.per_source_map ? "per-source" : "global"},
        {"test_negatives", "uniform pairs never linked anywhere in the data"},
        {"epochs_run", run.history.size()},
        {"final_loss", run.history.empty() ? json(nullptr) : json(run.history.back().mean_loss)},
        {"train_negatives_skipped", run.negatives_skipped},
        {"fit", fit_json(experiment.window, experiment.config.train.p)},
        {"data",
         {{"num_nodes", experiment.data.num_nodes},
          {"num_events", experiment.data.num_events},
          {"train_events", experiment.data.train_events},
          {"self_loops_dropped", experiment.data.self_loops_dropped},
          {"raw_time_offset", experiment.data.raw_time_offset},
          {"t_split", experiment.data.t_split},
          {"duplicates", "kept as repeat contacts"},
          {"direction", "collapsed (undirected)"}}},
        {"config", echo.to_json()},
    };
}

json aggregate_report(const ExperimentResult& experiment) {
    const auto& a = experiment.aggregate;
    json seeds = json::array();
    for (const auto& r : experiment.runs) {
        seeds.push_back({{"seed", r.seed},
                         {"best_auc", r.metrics.best_auc},
                         {"best_map", r.metrics.best_map},
                         {"reference_auc", r.metrics.reference_auc}});
    }
    return {
        {"dataset", experiment.config.dataset},
        {"ablation", std::string(to_string(experiment.config.ablation))},
        {"runs", a.runs},
        {"mean_best_auc", a.mean_auc},
        {"std_best_auc", a.std_auc},
        {"mean_best_map", a.mean_map},
        {"std_best_map", a.std_map},
        {"mean_reference_auc", a.mean_reference_auc},
        {"seeds", seeds},
        {"fit", fit_json(experiment.window, experiment.config.train.p)},
        {"config", experiment.config.to_json()},
    };
}

void write_loss_history(std::span<const EpochRecord> history, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "epoch,mean_loss,wall_time\n" << std::setprecision(17);
    for (const auto& r : history) {
        out << r.epoch << ',' << r.mean_loss << ',' << r.wall_time << '\n';
    }
}

ExperimentResult run_experiment(const LoadedGraph& loaded, const ExperimentConfig& config,
                                bool write_reports) {
    config.validate();
    ExperimentResult result;
    result.config = config;
    const TemporalGraph& full = loaded.graph;
    DataSplit split = split_train_test(full, config.split_ratio);
    result.window = compute_window(split.train, config);

    result.data = {static_cast<std::size_t>(full.num_nodes()), full.num_events(),
                   split.train.num_events(), loaded.self_loops_dropped, loaded.raw_time_offset,
                   split.t_split};

    const std::filesystem::path dir = config.output_dir;
    if (write_reports) {
        std::filesystem::create_directories(dir);
        write_node_map(loaded, dir / "node_map.csv");
    }

    auto flush_aggregate = [&] {
        result.aggregate = aggregate_runs(result.runs);
        if (write_reports) {
            write_json(aggregate_report(result), dir / "aggregate.json");
        }
    };

    for (int rep = 0; rep < config.repetitions; ++rep) {
        const std::uint64_t seed = config.train.seed + static_cast<std::uint64_t>(rep);
        try {
            RunResult run = run_single(full, split, result.window, config, seed);
            if (write_reports) {
                const std::string stem = "seed_" + std::to_string(seed);
                write_json(run_report(result, run), dir / (stem + ".json"));
                write_loss_history(run.history, dir / ("loss_" + stem + ".csv"));
                Rng feature_rng = make_stream(seed, "features");
                save_checkpoint({run.params,
                                 random_features(full.num_nodes(), config.train.input_dim,
                                                 feature_rng),
                                 seed},
                                dir / (stem + ".ckpt"));
            }
            result.runs.push_back(std::move(run));
        } catch (const TrainingDiverged& e) {
            if (write_reports) {
                Rng feature_rng = make_stream(seed, "features");
                save_checkpoint({e.last_finite(),
                                 random_features(full.num_nodes(), config.train.input_dim,
                                                 feature_rng),
                                 seed},
                                dir / ("diverged_seed_" + std::to_string(seed) + ".ckpt"));
            }
            flush_aggregate();
            throw;
        } catch (...) {
            flush_aggregate();
            throw;
        }
    }
    flush_aggregate();
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_reports) {
    config.validate();
    LoadOptions options;
    options.time_unit = config.time_unit;
    options.time_column = config.time_column;
    LoadedGraph loaded = load_edge_list(config.dataset, options);
    return run_experiment(loaded, config, write_reports);
}

std::vector<ExperimentResult> run_ablation_grid(const ExperimentConfig& config,
                                                bool write_reports) {
    config.validate();
    LoadOptions options;
    options.time_unit = config.time_unit;
    options.time_column = config.time_column;
    LoadedGraph loaded = load_edge_list(config.dataset, options);

    std::vector<ExperimentResult> results;
    for (auto mode : kAblationModes) {
        ExperimentConfig c = config;
        c.ablation = mode;
        c.output_dir = (std::filesystem::path(config.output_dir) / std::string(to_string(mode))).string();
        results.push_back(run_experiment(loaded, c, write_reports));
    }
    if (write_reports) {
        std::ofstream out(std::filesystem::path(config.output_dir) / "ablation.csv");
        out << "mode,mean_auc,std_auc,mean_map,std_map,mean_reference_auc\n"
            << std::setprecision(10);
        for (const auto& r : results) {
            const auto& a = r.aggregate;
            out << to_string(r.config.ablation) << ',' << a.mean_auc << ',' << a.std_auc << ','
                << a.mean_map << ',' << a.std_map << ',' << a.mean_reference_auc << '\n';
        }
    }
    return results;
}

SweepParameter parse_sweep_parameter(std::string_view name) {
    if (name == "p") {
        return SweepParameter::P;
    }
    if (name == "m") {
        return SweepParameter::M;
    }
    throw Error("unknown sweep parameter '" + std::string(name) + "' (expected p or m)");
}

std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepParameter parameter,
                              std::span<const double> values, bool write_reports) {
    if (values.empty()) {
        throw ContractError("sweep needs at least one value");
    }
    for (double v : values) {
        if (parameter == SweepParameter::P && !(v >= 0.0 && v < 1.0)) {
            throw ContractError("sweep value for p outside [0, 1): " + std::to_string(v));
        }
        if (parameter == SweepParameter::M && !(v >= 1.0 && v == std::floor(v))) {
            throw ContractError("sweep value for m must be a positive integer: " +
                                std::to_string(v));
        }
    }
    config.validate();
    LoadOptions options;
    options.time_unit = config.time_unit;
    options.time_column = config.time_column;
    LoadedGraph loaded = load_edge_list(config.dataset, options);

    const std::string name = parameter == SweepParameter::P ? "p" : "m";
    std::vector<SweepPoint> points;
    for (double v : values) {
        ExperimentConfig c = config;
        if (parameter == SweepParameter::P) {
            c.train.p = v;
        } else {
            c.train.m = static_cast<std::size_t>(v);
        }
        std::ostringstream label;
        label << name << '_' << v;
        c.output_dir = (std::filesystem::path(config.output_dir) / label.str()).string();
        points.push_back({v, run_experiment(loaded, c, write_reports).aggregate});
    }
    if (write_reports) {
        std::filesystem::create_directories(config.output_dir);
        std::ofstream out(std::filesystem::path(config.output_dir) / ("sweep_" + name + ".csv"));
        out << "value,mean_auc,std_auc,mean_map,std_map\n" << std::setprecision(10);
        for (const auto& p : points) {
            out << p.value << ',' << p.aggregate.mean_auc << ',' << p.aggregate.std_auc << ','
                << p.aggregate.mean_map << ',' << p.aggregate.std_map << '\n';
        }
    }
    return points;
}

} // namespace stgnn

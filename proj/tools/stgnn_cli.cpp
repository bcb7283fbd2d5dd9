// Command-line front end: run, sweep, synth, fit, eval.

#include "stgnn/experiment.hpp"
#include "stgnn/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

namespace {

using nlohmann::json;
using stgnn::ExperimentConfig;

// Flag values; only flags the user actually passed override the config file.
struct ConfigFlags {
    std::string config_file;
    std::string dataset;
    double time_unit = 1.0;
    std::size_t time_column = 2;
    double split = 0.75;
    double lr = 0.01;
    int epochs = 50;
    std::size_t batch_size = 128;
    std::size_t m = 10;
    double p = 0.5;
    double lambda = 1.0;
    std::uint64_t seed = 0;
    int repetitions = 10;
    std::string out = "results";
    std::string ablation = "STGNN";
    double delta = 0.0;
    Eigen::Index input_dim = 128;
    Eigen::Index hidden_dim = 16;
    Eigen::Index output_dim = 16;
    int patience = 10;
    bool per_source_map = false;
};

void add_config_flags(CLI::App& app, ConfigFlags& f) {
    app.add_option("--config", f.config_file, "JSON configuration file; flags override it");
    app.add_option("--dataset", f.dataset, "edge list with rows 'u v t'");
    app.add_option("--time-unit", f.time_unit, "raw time units per model unit (86400: s -> days)");
    app.add_option("--time-column", f.time_column, "zero-based timestamp column");
    app.add_option("--split", f.split, "training fraction of the time span");
    app.add_option("--lr", f.lr, "Adam learning rate");
    app.add_option("--epochs", f.epochs, "maximum epochs");
    app.add_option("--batch-size", f.batch_size, "positives per mini-batch");
    app.add_option("--m", f.m, "history capacity");
    app.add_option("--p", f.p, "intimate window coverage proportion");
    app.add_option("--lambda", f.lambda, "significance decay rate");
    app.add_option("--seed", f.seed, "master seed");
    app.add_option("--repetitions", f.repetitions, "number of seeds");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--ablation", f.ablation, "BGNN, BGNN+S, BGNN+I or STGNN");
    app.add_option("--delta", f.delta, "fixed intimate window size (skips the power-law fit)");
    app.add_option("--input-dim", f.input_dim, "feature dimension");
    app.add_option("--hidden-dim", f.hidden_dim, "hidden layer width");
    app.add_option("--output-dim", f.output_dim, "embedding width");
    app.add_option("--patience", f.patience, "early-stop patience in epochs");
    app.add_flag("--per-source-map", f.per_source_map, "report MAP averaged per source node");
}

ExperimentConfig resolve_config(const CLI::App& app, const ConfigFlags& f) {
    ExperimentConfig c;
    if (!f.config_file.empty()) {
        std::ifstream in(f.config_file);
        if (!in) {
            throw stgnn::Error("cannot open configuration " + f.config_file);
        }
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw stgnn::Error("invalid configuration file: " + std::string(e.what()));
        }
        c = ExperimentConfig::from_json(j);
    }
    auto given = [&](const char* name) { return app.count(name) > 0; };
    if (given("--dataset")) c.dataset = f.dataset;
    if (given("--time-unit")) c.time_unit = f.time_unit;
    if (given("--time-column")) c.time_column = f.time_column;
    if (given("--split")) c.split_ratio = f.split;
    if (given("--lr")) c.train.lr = f.lr;
    if (given("--epochs")) c.train.epochs = f.epochs;
    if (given("--batch-size")) c.train.batch_size = f.batch_size;
    if (given("--m")) c.train.m = f.m;
    if (given("--p")) c.train.p = f.p;
    if (given("--lambda")) c.train.lambda = f.lambda;
    if (given("--seed")) c.train.seed = f.seed;
    if (given("--repetitions")) c.repetitions = f.repetitions;
    if (given("--out")) c.output_dir = f.out;
    if (given("--ablation")) c.ablation = stgnn::parse_ablation(f.ablation);
    if (given("--delta")) c.delta = f.delta;
    if (given("--input-dim")) c.train.input_dim = f.input_dim;
    if (given("--hidden-dim")) c.train.hidden_dim = f.hidden_dim;
    if (given("--output-dim")) c.train.output_dim = f.output_dim;
    if (given("--patience")) c.train.patience = f.patience;
    if (given("--per-source-map")) c.per_source_map = f.per_source_map;
    stgnn::apply_ablation(c.ablation, c.train);
    c.validate();
    return c;
}

void print_aggregate(const stgnn::ExperimentResult& r) {
    const auto& a = r.aggregate;
    std::cout << std::fixed << std::setprecision(4) << stgnn::to_string(r.config.ablation)
              << ": best AUC " << a.mean_auc << " +- " << a.std_auc << ", best MAP "
              << a.mean_map << " +- " << a.std_map << ", reference AUC " << a.mean_reference_auc
              << " (" << a.runs << " seed(s))\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Significance-weighted temporal GNN for link prediction"};
    app.require_subcommand(1);

    ConfigFlags run_flags;
    bool ablation_grid = false;
    auto* run = app.add_subcommand("run", "train and evaluate over one or more seeds");
    add_config_flags(*run, run_flags);
    run->add_flag("--ablation-grid", ablation_grid, "run BGNN, BGNN+S, BGNN+I and STGNN");

    ConfigFlags sweep_flags;
    std::string sweep_param;
    std::vector<double> sweep_values;
    auto* sw = app.add_subcommand("sweep", "repeat the experiment over values of p or m");
    add_config_flags(*sw, sweep_flags);
    sw->add_option("--param", sweep_param, "p or m")->required();
    sw->add_option("--values", sweep_values, "comma-separated values")
        ->required()
        ->delimiter(',');

    stgnn::SyntheticSpec synth_spec;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a planted-significant-ties stream");
    synth->add_option("--nodes", synth_spec.n_nodes, "node count");
    synth->add_option("--communities", synth_spec.n_communities, "community count");
    synth->add_option("--pairs", synth_spec.n_significant_pairs, "planted pairs");
    synth->add_option("--significant-events", synth_spec.n_significant_events,
                      "contacts emitted by planted pairs");
    synth->add_option("--background-events", synth_spec.n_background_events,
                      "uniform intra-community contacts");
    synth->add_option("--horizon", synth_spec.horizon, "time span in days");
    synth->add_option("--seed", synth_spec.seed, "generator seed");
    synth->add_option("--out", synth_out, "edge list path (planted pairs go to <out>.planted.csv)")
        ->required();

    std::string fit_dataset;
    double fit_time_unit = 1.0;
    std::size_t fit_time_column = 2;
    double fit_split = 0.0;
    std::vector<double> fit_p{0.5};
    auto* fit = app.add_subcommand("fit", "fit the inter-event power law and report window sizes");
    fit->add_option("--dataset", fit_dataset, "edge list")->required();
    fit->add_option("--time-unit", fit_time_unit, "raw time units per model unit");
    fit->add_option("--time-column", fit_time_column, "zero-based timestamp column");
    fit->add_option("--split", fit_split, "fit on the training part of this split (0: all data)");
    fit->add_option("--p", fit_p, "coverage proportions")->delimiter(',');

    ConfigFlags eval_flags;
    std::string checkpoint;
    auto* ev = app.add_subcommand("eval", "evaluate a saved checkpoint");
    add_config_flags(*ev, eval_flags);
    ev->add_option("--checkpoint", checkpoint, "checkpoint written by run")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            ExperimentConfig config = resolve_config(*run, run_flags);
            if (ablation_grid) {
                for (const auto& r : stgnn::run_ablation_grid(config)) {
                    print_aggregate(r);
                }
            } else {
                print_aggregate(stgnn::run_experiment(config));
            }
        } else if (sw->parsed()) {
            ExperimentConfig config = resolve_config(*sw, sweep_flags);
            auto param = stgnn::parse_sweep_parameter(sweep_param);
            for (const auto& point : stgnn::sweep(config, param, sweep_values)) {
                std::cout << sweep_param << '=' << point.value << ": AUC "
                          << point.aggregate.mean_auc << " +- " << point.aggregate.std_auc
                          << ", MAP " << point.aggregate.mean_map << " +- "
                          << point.aggregate.std_map << '\n';
            }
        } else if (synth->parsed()) {
            auto data = stgnn::generate_synthetic(synth_spec);
            stgnn::write_synthetic(data, synth_out, synth_out + ".planted.csv");
            std::cout << "wrote " << data.events.size() << " events, " << data.planted.size()
                      << " planted pairs to " << synth_out << '\n';
        } else if (fit->parsed()) {
            stgnn::LoadOptions options;
            options.time_unit = fit_time_unit;
            options.time_column = fit_time_column;
            auto loaded = stgnn::load_edge_list(fit_dataset, options);
            stgnn::TemporalGraph graph = loaded.graph;
            if (fit_split > 0.0) {
                graph = stgnn::split_train_test(loaded.graph, fit_split).train;
            }
            auto gaps = stgnn::collect_inter_event_times(graph);
            auto pl = stgnn::fit_power_law(gaps.intervals);
            json windows = json::array();
            for (double p : fit_p) {
                windows.push_back({{"p", p}, {"delta", stgnn::intimate_window_size(pl, p)}});
            }
            json out = {{"dataset", fit_dataset},
                        {"alpha", pl.alpha},
                        {"xmin", pl.xmin},
                        {"c", pl.c},
                        {"ks_distance", pl.ks_distance},
                        {"n_tail", pl.n_tail},
                        {"intervals", gaps.intervals.size()},
                        {"zero_gaps_dropped", gaps.zeros_dropped},
                        {"windows", windows}};
            std::cout << std::setw(2) << out << '\n';
        } else if (ev->parsed()) {
            ExperimentConfig config = resolve_config(*ev, eval_flags);
            auto ckpt = stgnn::load_checkpoint(checkpoint);
            stgnn::LoadOptions options;
            options.time_unit = config.time_unit;
            options.time_column = config.time_column;
            auto loaded = stgnn::load_edge_list(config.dataset, options);
            auto split = stgnn::split_train_test(loaded.graph, config.split_ratio);
            if (ckpt.features.rows() != loaded.graph.num_nodes()) {
                throw stgnn::Error("checkpoint features do not match the dataset's node count");
            }
            config.train.m = ckpt.params.capacity();
            config.train.seed = ckpt.seed;
            stgnn::EvalConfig ec;
            ec.selection = config.train.selection();
            ec.seed = ckpt.seed;
            ec.per_source_map = config.per_source_map;
            stgnn::ExperimentResult experiment;
            experiment.config = config;
            experiment.data = {static_cast<std::size_t>(loaded.graph.num_nodes()),
                               loaded.graph.num_events(), split.train.num_events(),
                               loaded.self_loops_dropped, loaded.raw_time_offset, split.t_split};
            stgnn::RunResult r;
            r.seed = ckpt.seed;
            r.metrics = stgnn::evaluate(loaded.graph, split, ckpt.params, ckpt.features, ec);
            std::cout << std::setw(2) << stgnn::run_report(experiment, r) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

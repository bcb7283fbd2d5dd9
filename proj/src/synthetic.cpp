#include "stgnn/synthetic.hpp"

#include "stgnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>

namespace stgnn {

void SyntheticSpec::validate() const {
    if (n_nodes < 2 || n_communities < 1) {
        throw ContractError("need at least two nodes and one community");
    }
    if (n_nodes / n_communities < 2) {
        throw ContractError("every community needs at least two members");
    }
    if (!(horizon > 0.0) || !(gap_exponent > 1.0) || !(min_gap > 0.0)) {
        throw ContractError("invalid synthetic stream parameters");
    }
    const auto size = static_cast<std::size_t>(n_nodes / n_communities);
    const std::size_t intra_pairs = static_cast<std::size_t>(n_communities) * size * (size - 1) / 2;
    if (n_significant_pairs > intra_pairs) {
        throw ContractError("more planted pairs than intra-community pairs");
    }
    if (n_significant_pairs > 0 && n_significant_events < n_significant_pairs) {
        throw ContractError("each planted pair needs at least one event");
    }
}

namespace {

std::vector<std::vector<NodeId>> communities(const SyntheticSpec& spec) {
    std::vector<std::vector<NodeId>> groups(static_cast<std::size_t>(spec.n_communities));
    for (NodeId i = 0; i < spec.n_nodes; ++i) {
        groups[static_cast<std::size_t>(i % spec.n_communities)].push_back(i);
    }
    return groups;
}

} // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng = make_stream(spec.seed, "synthetic");
    const auto groups = communities(spec);
    std::uniform_int_distribution<std::size_t> pick_group(0, groups.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> when(0.0, spec.horizon);

    auto intra_pair = [&]() {
        const auto& g = groups[pick_group(rng)];
        std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
        std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        while (b == a) {
            b = pick(rng);
        }
        return ordered_pair(g[a], g[b]);
    };

    SyntheticData data;
    std::set<NodePair> planted;
    while (planted.size() < spec.n_significant_pairs) {
        planted.insert(intra_pair());
    }
    data.planted.assign(planted.begin(), planted.end());

    for (std::size_t k = 0; k < data.planted.size(); ++k) {
        const auto [u, v] = data.planted[k];
        const std::size_t quota = spec.n_significant_events / data.planted.size() +
                                  (k < spec.n_significant_events % data.planted.size() ? 1 : 0);
        double t = when(rng);
        for (std::size_t i = 0; i < quota; ++i) {
            data.events.push_back({u, v, t});
            const double gap =
                spec.min_gap * std::pow(1.0 - unit(rng), -1.0 / (spec.gap_exponent - 1.0));
            t = std::fmod(t + gap, spec.horizon);
        }
    }

    for (std::size_t i = 0; i < spec.n_background_events; ++i) {
        const auto [u, v] = intra_pair();
        data.events.push_back({u, v, when(rng)});
    }
    std::stable_sort(data.events.begin(), data.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    return data;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& edge_list,
                     const std::filesystem::path& planted_csv) {
    std::ofstream out(edge_list);
    if (!out) {
        throw Error("cannot write " + edge_list.string());
    }
    out << "# u v t (days)\n" << std::fixed << std::setprecision(6);
    for (const auto& e : data.events) {
        out << e.u << ' ' << e.v << ' ' << e.t << '\n';
    }
    std::ofstream planted(planted_csv);
    if (!planted) {
        throw Error("cannot write " + planted_csv.string());
    }
    planted << "u,v\n";
    for (const auto& [u, v] : data.planted) {
        planted << u << ',' << v << '\n';
    }
}

} // namespace stgnn

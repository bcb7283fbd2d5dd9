#include "stgnn/temporal_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

namespace stgnn {

TemporalGraph::TemporalGraph(NodeId num_nodes, std::vector<Event> events)
    : num_nodes_(num_nodes), events_(std::move(events)) {
    if (num_nodes < 0) {
        throw ContractError("negative node count");
    }
    for (const auto& e : events_) {
        if (e.u == e.v) {
            throw ContractError("self-loop on node " + std::to_string(e.u));
        }
        if (e.u < 0 || e.v < 0 || e.u >= num_nodes || e.v >= num_nodes) {
            throw ContractError("node id out of range");
        }
        if (!(e.t >= 0.0) || !std::isfinite(e.t)) {
            throw ContractError("event time must be finite and non-negative");
        }
    }
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });

    for (const auto& e : events_) {
        pair_index_[ordered_pair(e.u, e.v)].push_back(e.t);
    }

    node_index_.assign(static_cast<std::size_t>(num_nodes), {});
    for (const auto& [key, times] : pair_index_) {
        node_index_[key.first].push_back({key.second, times});
        node_index_[key.second].push_back({key.first, times});
    }
    for (auto& list : node_index_) {
        std::sort(list.begin(), list.end(),
                  [](const NeighborHistory& a, const NeighborHistory& b) {
                      return a.neighbor < b.neighbor;
                  });
    }
}

Timestamp TemporalGraph::max_time() const {
    if (events_.empty()) {
        throw Error("empty graph has no time horizon");
    }
    return events_.back().t;
}

std::span<const NeighborHistory> TemporalGraph::neighbors(NodeId u) const {
    if (u < 0 || u >= num_nodes_) {
        return {};
    }
    return node_index_[static_cast<std::size_t>(u)];
}

std::span<const Timestamp> TemporalGraph::pair_times(NodeId u, NodeId v) const {
    auto it = pair_index_.find(ordered_pair(u, v));
    if (it == pair_index_.end()) {
        return {};
    }
    return it->second;
}

std::span<const Timestamp> pair_history(const TemporalGraph& g, NodeId u, NodeId v, Timestamp t) {
    auto times = g.pair_times(u, v);
    auto end = std::lower_bound(times.begin(), times.end(), t);
    return times.first(static_cast<std::size_t>(end - times.begin()));
}

std::size_t count_in_window(std::span<const Timestamp> times, Timestamp begin, Timestamp end) {
    auto lo = std::lower_bound(times.begin(), times.end(), begin);
    auto hi = std::lower_bound(lo, times.end(), end);
    return static_cast<std::size_t>(hi - lo);
}

namespace {

struct RawRow {
    std::string u;
    std::string v;
    double t;
    std::size_t line;
};

bool parse_integer(const std::string& s, long long& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

} // namespace

LoadedGraph parse_edge_list(std::string_view text, const LoadOptions& options) {
    if (!(options.time_unit > 0.0)) {
        throw ContractError("time_unit must be positive");
    }
    const std::size_t min_fields = std::max<std::size_t>(3, options.time_column + 1);

    std::vector<RawRow> rows;
    std::size_t self_loops = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        std::string line(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;

        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::vector<std::string> tokens;
        for (std::string tok; fields >> tok;) {
            tokens.push_back(std::move(tok));
        }
        if (tokens.empty() || tokens.front().front() == '#' || tokens.front().front() == '%') {
            continue;
        }
        if (tokens.size() < min_fields) {
            throw ParseError("expected at least " + std::to_string(min_fields) + " fields, got " +
                                 std::to_string(tokens.size()),
                             line_no);
        }
        const auto& ts = tokens[options.time_column];
        double t = 0.0;
        auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t);
        if (ec != std::errc() || ptr != ts.data() + ts.size() || !std::isfinite(t)) {
            throw ParseError("malformed timestamp '" + ts + "'", line_no);
        }
        if (tokens[0] == tokens[1]) {
            ++self_loops;
            continue;
        }
        rows.push_back({tokens[0], tokens[1], t, line_no});
    }
    if (rows.empty()) {
        throw Error("edge list contains no events");
    }
    if (self_loops > 0) {
        std::cerr << "warning: dropped " << self_loops << " self-loop event(s)\n";
    }

    std::vector<std::string> ids;
    ids.reserve(rows.size() * 2);
    for (const auto& r : rows) {
        ids.push_back(r.u);
        ids.push_back(r.v);
    }
    bool numeric = std::all_of(ids.begin(), ids.end(), [](const std::string& s) {
        long long x = 0;
        return parse_integer(s, x);
    });
    if (numeric) {
        std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
            long long x = 0, y = 0;
            parse_integer(a, x);
            parse_integer(b, y);
            return x < y;
        });
        ids.erase(std::unique(ids.begin(), ids.end(),
                              [](const std::string& a, const std::string& b) {
                                  long long x = 0, y = 0;
                                  parse_integer(a, x);
                                  parse_integer(b, y);
                                  return x == y;
                              }),
                  ids.end());
    } else {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }

    auto dense = [&](const std::string& raw) -> NodeId {
        if (numeric) {
            long long key = 0;
            parse_integer(raw, key);
            auto it = std::lower_bound(ids.begin(), ids.end(), key,
                                       [](const std::string& s, long long k) {
                                           long long x = 0;
                                           parse_integer(s, x);
                                           return x < k;
                                       });
            return static_cast<NodeId>(it - ids.begin());
        }
        return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), raw) - ids.begin());
    };

    double t_min = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        t_min = std::min(t_min, r.t);
    }

    std::vector<Event> events;
    events.reserve(rows.size());
    for (const auto& r : rows) {
        events.push_back({dense(r.u), dense(r.v), (r.t - t_min) / options.time_unit});
    }

    LoadedGraph out;
    out.graph = TemporalGraph(static_cast<NodeId>(ids.size()), std::move(events));
    out.raw_ids = std::move(ids);
    out.self_loops_dropped = self_loops;
    out.raw_time_offset = t_min;
    out.time_unit = options.time_unit;
    return out;
}

LoadedGraph load_edge_list(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open edge list " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_edge_list(buffer.str(), options);
}

void write_edge_list(const TemporalGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << std::setprecision(17);
    for (const auto& e : g.events()) {
        out << e.u << ' ' << e.v << ' ' << e.t << '\n';
    }
}

void write_node_map(const LoadedGraph& loaded, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "dense_id,raw_id\n";
    for (std::size_t i = 0; i < loaded.raw_ids.size(); ++i) {
        out << i << ',' << loaded.raw_ids[i] << '\n';
    }
}

DataSplit split_train_test(const TemporalGraph& g, double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw ContractError("split ratio must lie in (0, 1)");
    }
    if (g.empty()) {
        throw Error("cannot split an empty graph");
    }
    DataSplit split;
    split.t_split = ratio * g.max_time();

    std::vector<Event> train;
    std::map<NodePair, Timestamp> test_first;
    for (const auto& e : g.events()) {
        if (e.t <= split.t_split) {
            train.push_back(e);
        } else {
            test_first.try_emplace(ordered_pair(e.u, e.v), e.t);
        }
    }
    if (train.empty()) {
        throw Error("split leaves the training window empty");
    }
    if (test_first.empty()) {
        throw Error("split leaves the test window empty");
    }
    split.train = TemporalGraph(g.num_nodes(), std::move(train));
    split.test_pairs.reserve(test_first.size());
    for (const auto& [key, t] : test_first) {
        split.test_pairs.push_back({key.first, key.second, t});
    }
    return split;
}

} // namespace stgnn

#pragma once

// Structural network measures. Distances and clustering are taken on the
// undirected graph with reciprocal/multiple links collapsed; components and
// reciprocity on the directed simple graph.

#include "edge_list.hpp"

#include <deque>
#include <iostream>
#include <numeric>

namespace scnrisk {

/// Directed simple graph on nodes 0..n-1 (no self-loops, no duplicate arcs).
struct DiGraph {
    std::size_t n = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> arcs;

    static DiGraph from(const ScNetwork& net) {
        DiGraph g;
        g.n = net.firm_count();
        g.arcs.reserve(net.link_count());
        for (const auto& l : canonical_links(net)) g.arcs.emplace_back(l.source, l.target);
        return g;
    }
};

struct MetricsReport {
    std::size_t n_nodes = 0;
    std::size_t n_links = 0;
    double mean_total_degree = 0.0;
    double mean_neighbor_total_degree = 0.0;
    double global_clustering = 0.0;
    std::size_t diameter = 0;
    double avg_shortest_path = 0.0;
    std::vector<std::size_t> top3_scc_sizes;
    std::size_t largest_wcc_size = 0;
    double reciprocity = 0.0;
};

namespace detail {

inline std::vector<std::vector<std::uint32_t>> undirected_adjacency(const DiGraph& g) {
    std::vector<std::vector<std::uint32_t>> adj(g.n);
    for (auto [u, v] : g.arcs) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

/// Strongly connected component sizes (iterative Tarjan).
inline std::vector<std::size_t> scc_sizes(const DiGraph& g) {
    std::vector<std::vector<std::uint32_t>> out(g.n);
    for (auto [u, v] : g.arcs) out[u].push_back(v);
    constexpr std::uint32_t unvisited = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> index(g.n, unvisited), low(g.n, 0);
    std::vector<char> on_stack(g.n, 0);
    std::vector<std::uint32_t> stack;
    std::vector<std::pair<std::uint32_t, std::size_t>> call;  // (node, next child)
    std::vector<std::size_t> sizes;
    std::uint32_t counter = 0;
    for (std::uint32_t root = 0; root < g.n; ++root) {
        if (index[root] != unvisited) continue;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            auto& [v, next] = call.back();
            if (next < out[v].size()) {
                std::uint32_t w = out[v][next++];
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::size_t size = 0;
                std::uint32_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    ++size;
                } while (w != v);
                sizes.push_back(size);
            }
            std::uint32_t finished = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[finished]);
        }
    }
    std::sort(sizes.rbegin(), sizes.rend());
    return sizes;
}

/// Weakly connected component label per node; labels are the smallest node
/// id in each component.
inline std::vector<std::uint32_t> wcc_labels(const std::vector<std::vector<std::uint32_t>>& adj) {
    std::vector<std::uint32_t> label(adj.size(), std::numeric_limits<std::uint32_t>::max());
    std::deque<std::uint32_t> queue;
    for (std::uint32_t s = 0; s < adj.size(); ++s) {
        if (label[s] != std::numeric_limits<std::uint32_t>::max()) continue;
        label[s] = s;
        queue.push_back(s);
        while (!queue.empty()) {
            auto u = queue.front();
            queue.pop_front();
            for (auto v : adj[u])
                if (label[v] == std::numeric_limits<std::uint32_t>::max()) {
                    label[v] = s;
                    queue.push_back(v);
                }
        }
    }
    return label;
}

}  // namespace detail

inline MetricsReport compute_metrics(const DiGraph& g) {
    MetricsReport r;
    r.n_nodes = g.n;
    r.n_links = g.arcs.size();
    if (g.n == 0) return r;

    std::vector<std::size_t> k_tot(g.n, 0);
    for (auto [u, v] : g.arcs) {
        ++k_tot[u];
        ++k_tot[v];
    }
    r.mean_total_degree = 2.0 * static_cast<double>(g.arcs.size()) / static_cast<double>(g.n);

    // reciprocity
    if (!g.arcs.empty()) {
        auto sorted = g.arcs;
        std::sort(sorted.begin(), sorted.end());
        std::size_t mutual = 0;
        for (auto [u, v] : g.arcs)
            if (std::binary_search(sorted.begin(), sorted.end(), std::make_pair(v, u))) ++mutual;
        r.reciprocity = static_cast<double>(mutual) / static_cast<double>(g.arcs.size());
    }

    const auto adj = detail::undirected_adjacency(g);

    // mean over nodes (with neighbors) of the mean neighbor total degree
    double nn_sum = 0.0;
    std::size_t nn_count = 0;
    for (std::size_t v = 0; v < g.n; ++v) {
        if (adj[v].empty()) continue;
        double s = 0.0;
        for (auto u : adj[v]) s += static_cast<double>(k_tot[u]);
        nn_sum += s / static_cast<double>(adj[v].size());
        ++nn_count;
    }
    r.mean_neighbor_total_degree = nn_count ? nn_sum / static_cast<double>(nn_count) : 0.0;

    // transitivity
    std::size_t triangles3 = 0;  // each triangle counted once per corner
    std::size_t triples = 0;
    std::vector<std::uint32_t> mark(g.n, std::numeric_limits<std::uint32_t>::max());
    for (std::uint32_t v = 0; v < g.n; ++v) {
        std::size_t d = adj[v].size();
        triples += d * (d - (d > 0 ? 1 : 0)) / 2;
        for (auto u : adj[v]) mark[u] = v;
        for (auto u : adj[v])
            for (auto w : adj[u])
                if (w > u && mark[w] == v) ++triangles3;
    }
    r.global_clustering = triples ? static_cast<double>(triangles3) / static_cast<double>(triples) : 0.0;

    // components
    auto scc = detail::scc_sizes(g);
    r.top3_scc_sizes.assign(scc.begin(), scc.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(3, scc.size())));
    auto label = detail::wcc_labels(adj);
    std::vector<std::size_t> size(g.n, 0);
    for (auto l : label) ++size[l];
    std::uint32_t best = 0;
    for (std::uint32_t c = 0; c < g.n; ++c)
        if (size[c] > size[best]) best = c;
    r.largest_wcc_size = size[best];

    // distances within the largest WCC
    std::vector<std::uint32_t> dist(g.n);
    std::deque<std::uint32_t> queue;
    std::size_t pairs = 0, dist_sum = 0;
    for (std::uint32_t s = 0; s < g.n; ++s) {
        if (label[s] != best) continue;
        std::fill(dist.begin(), dist.end(), std::numeric_limits<std::uint32_t>::max());
        dist[s] = 0;
        queue.push_back(s);
        while (!queue.empty()) {
            auto u = queue.front();
            queue.pop_front();
            for (auto v : adj[u])
                if (dist[v] == std::numeric_limits<std::uint32_t>::max()) {
                    dist[v] = dist[u] + 1;
                    dist_sum += dist[v];
                    ++pairs;
                    r.diameter = std::max<std::size_t>(r.diameter, dist[v]);
                    queue.push_back(v);
                }
        }
    }
    r.avg_shortest_path = pairs ? static_cast<double>(dist_sum) / static_cast<double>(pairs) : 0.0;
    return r;
}

inline MetricsReport compute_metrics(const ScNetwork& net) { return compute_metrics(DiGraph::from(net)); }

/// Column names and values in Table-1 order, for CSV/JSON emission.
inline std::vector<std::pair<std::string, double>> metric_columns(const MetricsReport& m) {
    auto scc = [&](std::size_t i) { return i < m.top3_scc_sizes.size() ? static_cast<double>(m.top3_scc_sizes[i]) : 0.0; };
    return {{"N", static_cast<double>(m.n_nodes)},
            {"L", static_cast<double>(m.n_links)},
            {"mean_k_tot", m.mean_total_degree},
            {"mean_k_tot_nn", m.mean_neighbor_total_degree},
            {"clustering", m.global_clustering},
            {"diameter", static_cast<double>(m.diameter)},
            {"avg_shortest_path", m.avg_shortest_path},
            {"scc1", scc(0)},
            {"scc2", scc(1)},
            {"scc3", scc(2)},
            {"largest_wcc", static_cast<double>(m.largest_wcc_size)},
            {"reciprocity", m.reciprocity}};
}

struct SnapshotRef {
    std::size_t step = 0;
    std::filesystem::path path;
};

/// Long-form table (step, metric, value) over stored snapshots. Missing
/// files are skipped with a warning on `warn`.
inline std::vector<std::tuple<std::size_t, std::string, double>> metrics_trajectory(std::span<const SnapshotRef> snaps,
                                                                                     WeightMode mode,
                                                                                     std::ostream& warn = std::cerr) {
    std::vector<std::tuple<std::size_t, std::string, double>> rows;
    LoadOptions raw;
    raw.min_weight = 0.0;
    for (const auto& s : snaps) {
        if (!std::filesystem::exists(s.path)) {
            warn << "warning: snapshot " << s.path.string() << " missing, skipped\n";
            continue;
        }
        auto m = compute_metrics(load_edge_list(s.path, mode, raw));
        for (auto& [name, value] : metric_columns(m)) rows.emplace_back(s.step, name, value);
    }
    return rows;
}

}  // namespace scnrisk

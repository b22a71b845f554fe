#pragma once

// Clauset-Newman-Moore greedy modularity maximization on an undirected
// simple graph with unit edge weights.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <unordered_map>
#include <vector>

namespace scnrisk {

/// Modularity of a partition (community label per node) of an undirected
/// simple graph given as adjacency lists.
inline double modularity(const std::vector<std::vector<std::uint32_t>>& adj, const std::vector<std::uint32_t>& label) {
    double two_m = 0.0;
    for (const auto& a : adj) two_m += static_cast<double>(a.size());
    if (two_m == 0.0) return 0.0;
    std::unordered_map<std::uint32_t, double> inner, degree;
    for (std::uint32_t v = 0; v < adj.size(); ++v) {
        degree[label[v]] += static_cast<double>(adj[v].size());
        for (auto u : adj[v])
            if (label[u] == label[v]) inner[label[v]] += 1.0;  // each inner edge seen twice
    }
    double q = 0.0;
    for (const auto& [c, d] : degree) {
        double e = inner.count(c) ? inner[c] : 0.0;
        q += e / two_m - (d / two_m) * (d / two_m);
    }
    return q;
}

/// Greedy agglomeration: repeatedly merges the pair of adjacent communities
/// with the largest modularity gain while that gain is positive. Returns a
/// community label per node (labels are surviving community indices).
inline std::vector<std::uint32_t> cnm_communities(const std::vector<std::vector<std::uint32_t>>& adj) {
    const std::size_t n = adj.size();
    std::vector<std::uint32_t> parent(n);
    for (std::uint32_t v = 0; v < n; ++v) parent[v] = v;
    double two_m = 0.0;
    for (const auto& a : adj) two_m += static_cast<double>(a.size());
    if (two_m == 0.0) return parent;

    // e[i][j]: fraction of edge ends joining community i to j (each direction)
    std::vector<std::unordered_map<std::uint32_t, double>> e(n);
    std::vector<double> a(n, 0.0);
    std::vector<std::uint32_t> stamp(n, 0);
    std::vector<char> alive(n, 1);
    for (std::uint32_t v = 0; v < n; ++v) {
        a[v] = static_cast<double>(adj[v].size()) / two_m;
        for (auto u : adj[v])
            if (u != v) e[v][u] += 1.0 / two_m;
    }

    struct Candidate {
        double gain;
        std::uint32_t i, j;
        std::uint32_t stamp_i, stamp_j;
        bool operator<(const Candidate& o) const {
            if (gain != o.gain) return gain < o.gain;
            if (i != o.i) return i > o.i;  // deterministic tie-break: smaller ids first
            return j > o.j;
        }
    };
    std::priority_queue<Candidate> heap;
    auto push = [&](std::uint32_t i, std::uint32_t j) {
        std::uint32_t lo = std::min(i, j), hi = std::max(i, j);
        heap.push({2.0 * (e[lo].at(hi) - a[lo] * a[hi]), lo, hi, stamp[lo], stamp[hi]});
    };
    for (std::uint32_t i = 0; i < n; ++i)
        for (const auto& [j, w] : e[i])
            if (i < j) push(i, j);

    while (!heap.empty()) {
        auto c = heap.top();
        heap.pop();
        if (!alive[c.i] || !alive[c.j] || stamp[c.i] != c.stamp_i || stamp[c.j] != c.stamp_j) continue;
        if (c.gain <= 0.0) break;
        // merge j into i
        std::uint32_t i = c.i, j = c.j;
        for (const auto& [k, w] : e[j]) {
            if (k == i) continue;
            e[i][k] += w;
            auto& back = e[k];
            back[i] += w;
            back.erase(j);
        }
        e[i].erase(j);
        e[j].clear();
        a[i] += a[j];
        alive[j] = 0;
        parent[j] = i;
        ++stamp[i];
        for (const auto& [k, w] : e[i]) push(i, k);
    }
    std::vector<std::uint32_t> label(n);
    for (std::uint32_t v = 0; v < n; ++v) {
        std::uint32_t r = v;
        while (parent[r] != r) r = parent[r];
        label[v] = r;
    }
    return label;
}

}  // namespace scnrisk

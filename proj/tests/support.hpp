#pragma once

// Test-only helpers and independent reference implementations. The oracles
// work from raw link lists with maps and plain loops; they share no code with
// the library beyond its public data types.

#include "scnrisk/scnrisk.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

namespace testing_support {

using namespace scnrisk;

struct RawLink {
    int source;
    int target;
    double weight;
};

inline ScNetwork make_net(WeightMode mode, const std::vector<std::string>& sectors, const std::vector<RawLink>& links) {
    std::vector<FirmSpec> firms;
    for (std::size_t i = 0; i < sectors.size(); ++i) firms.push_back({"f" + std::to_string(i), SectorCode(sectors[i])});
    std::vector<LinkSpec> specs;
    for (const auto& l : links)
        specs.push_back({static_cast<FirmId>(l.source), static_cast<FirmId>(l.target), Weight::from_units(l.weight)});
    return ScNetwork::from_parts(mode, std::move(firms), std::move(specs));
}

inline std::vector<RawLink> raw_links(const ScNetwork& net) {
    std::vector<RawLink> out;
    for (const auto& l : canonical_links(net))
        out.push_back({static_cast<int>(l.source), static_cast<int>(l.target), l.weight.units()});
    return out;
}

/// Temporary directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("scnrisk_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------------------
// cascade oracle

struct OracleResult {
    std::vector<double> h;
    std::vector<std::vector<double>> history;  // h after every round
    int rounds = 0;
    bool converged = false;
    double esri = 0.0;
};

/// class(supplier nace2, buyer nace2) -> 'E', 'N' or 'I'
using ClassFn = std::function<char(const std::string&, const std::string&)>;

/// Straight-line shock cascade from the textual rules: calibrate from the
/// raw links, then iterate the synchronous min-update until the largest
/// change drops below tol.
inline OracleResult oracle_cascade(const std::vector<std::string>& sector, const std::vector<RawLink>& links,
                                   const ClassFn& cls, double gamma, int shocked, double tol = 1e-6, int t_max = 1000) {
    const int n = static_cast<int>(sector.size());
    auto product = [&](int f) { return sector[f].substr(0, 3); };
    auto div = [&](int f) { return sector[f].substr(0, 2); };

    std::vector<double> s_out(n, 0.0);
    std::vector<std::map<std::string, double>> pi0(n);
    for (const auto& l : links) {
        s_out[l.source] += l.weight;
        pi0[l.target][product(l.source)] += l.weight;
    }
    std::map<std::string, double> product_total;
    std::map<std::string, int> producers;
    for (int f = 0; f < n; ++f) {
        product_total[product(f)] += s_out[f];
        producers[product(f)] += 1;
    }
    std::vector<double> share(n);
    for (int f = 0; f < n; ++f) {
        double tot = product_total[product(f)];
        share[f] = tot > 0 ? s_out[f] / tot : (producers[product(f)] == 1 ? 1.0 : 0.0);
    }
    double total = 0.0;
    for (double s : s_out) total += s;

    OracleResult r;
    std::vector<double> h(n, 1.0);
    h[shocked] = 0.0;
    while (r.rounds < t_max) {
        ++r.rounds;
        std::vector<double> next(n);
        for (int i = 0; i < n; ++i) {
            if (i == shocked) {
                next[i] = 0.0;
                continue;
            }
            // (a) delivered amounts per product
            std::map<std::string, double> delivered;
            for (const auto& l : links)
                if (l.target == i) delivered[product(l.source)] += l.weight * (1.0 - share[l.source] * (1.0 - h[l.source]));
            // (b) GLPF relative to calibrated output
            double x0 = s_out[i] > 0 ? s_out[i] : 1.0;
            double x = x0;
            double ne_pi0 = 0.0, ne_now = 0.0;
            for (const auto& [k, p0] : pi0[i]) {
                char c = cls(k.substr(0, 2), div(i));
                if (c == 'E') {
                    double alpha = p0 / x0;
                    x = std::min(x, delivered[k] / alpha);
                } else if (c == 'N') {
                    ne_pi0 += p0;
                    ne_now += delivered[k];
                }
            }
            if (ne_pi0 > 0 && gamma > 0) {
                double beta_bar = x0 * (1.0 - gamma);
                double alpha_ne = ne_pi0 / (gamma * x0);
                x = std::min(x, beta_bar + ne_now / alpha_ne);
            }
            x = std::max(0.0, std::min(x, x0));
            double h_down = x / x0;
            // (c) upstream demand
            double h_up = 1.0;
            if (s_out[i] > 0) {
                double demand = 0.0;
                for (const auto& l : links)
                    if (l.source == i) demand += l.weight * h[l.target];
                h_up = demand / s_out[i];
            }
            // (d)
            next[i] = std::min(h[i], std::min(h_down, h_up));
        }
        double max_change = 0.0;
        for (int i = 0; i < n; ++i) max_change = std::max(max_change, std::abs(next[i] - h[i]));
        h = next;
        r.history.push_back(h);
        if (max_change < tol) {
            r.converged = true;
            break;
        }
    }
    r.h = h;
    for (int i = 0; i < n; ++i) r.esri += (total > 0 ? s_out[i] / total : 1.0 / n) * (1.0 - h[i]);
    return r;
}

inline ClassFn class_from(const EssentialityMatrix& m) {
    return [&m](const std::string& s, const std::string& b) { return to_char(m.lookup(s, b)); };
}

inline std::vector<std::string> sectors_of(const ScNetwork& net) {
    std::vector<std::string> out;
    for (const auto& f : net.firms()) out.push_back(f.sector.str());
    return out;
}

// ---------------------------------------------------------------------------
// metrics oracle (dense matrices, exhaustive)

struct BruteMetrics {
    std::size_t n_links = 0;
    double mean_k_tot = 0, mean_k_nn = 0, clustering = 0, reciprocity = 0, avg_path = 0;
    std::size_t diameter = 0, largest_wcc = 0;
    std::vector<std::size_t> scc;
};

inline BruteMetrics brute_metrics(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& arcs) {
    BruteMetrics m;
    std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
    for (auto [u, v] : arcs) a[u][v] = 1;
    std::vector<std::vector<int>> u(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) u[i][j] = (a[i][j] || a[j][i]) ? 1 : 0;

    m.n_links = arcs.size();
    std::size_t mutual = 0;
    for (auto [x, y] : arcs) mutual += a[y][x];
    m.reciprocity = arcs.empty() ? 0.0 : static_cast<double>(mutual) / static_cast<double>(arcs.size());

    std::vector<double> k(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j] + a[j][i];
    double ksum = 0;
    for (double x : k) ksum += x;
    m.mean_k_tot = n ? ksum / static_cast<double>(n) : 0.0;

    double nn = 0;
    int with_nb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        int d = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (u[i][j]) {
                s += k[j];
                ++d;
            }
        if (d) {
            nn += s / d;
            ++with_nb;
        }
    }
    m.mean_k_nn = with_nb ? nn / with_nb : 0.0;

    // closed and connected triples, enumerating centers
    double closed = 0, triples = 0;
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = x + 1; y < n; ++y)
                if (x != c && y != c && u[c][x] && u[c][y]) {
                    triples += 1;
                    closed += u[x][y];
                }
    m.clustering = triples > 0 ? closed / triples : 0.0;

    // SCC via reachability closure
    std::vector<std::vector<int>> reach(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        reach[i][i] = 1;
        for (std::size_t j = 0; j < n; ++j)
            if (a[i][j]) reach[i][j] = 1;
    }
    for (std::size_t w = 0; w < n; ++w)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (reach[i][w] && reach[w][j]) reach[i][j] = 1;
    std::vector<int> seen(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i]) continue;
        std::size_t size = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (reach[i][j] && reach[j][i]) {
                seen[j] = 1;
                ++size;
            }
        m.scc.push_back(size);
    }
    std::sort(m.scc.rbegin(), m.scc.rend());
    if (m.scc.size() > 3) m.scc.resize(3);

    // Floyd-Warshall on the undirected graph
    const std::size_t inf = 1u << 30;
    std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
    for (std::size_t i = 0; i < n; ++i) {
        d[i][i] = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (u[i][j]) d[i][j] = 1;
    }
    for (std::size_t w = 0; w < n; ++w)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][w] + d[w][j] < d[i][j]) d[i][j] = d[i][w] + d[w][j];
    // largest WCC, smallest member id breaking ties
    std::size_t best_root = 0, best_size = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool is_root = true;
        for (std::size_t j = 0; j < i; ++j)
            if (d[i][j] < inf) is_root = false;
        if (!is_root) continue;
        std::size_t size = 0;
        for (std::size_t j = 0; j < n; ++j) size += d[i][j] < inf;
        if (size > best_size) {
            best_size = size;
            best_root = i;
        }
    }
    m.largest_wcc = best_size;
    double sum = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && d[best_root][i] < inf && d[i][j] < inf && d[best_root][j] < inf) {
                sum += static_cast<double>(d[i][j]);
                ++pairs;
                m.diameter = std::max(m.diameter, d[i][j]);
            }
    m.avg_path = pairs ? sum / static_cast<double>(pairs) : 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// random fixtures

/// Small random weighted network with a few sectors, reciprocal links and
/// the occasional isolated firm.
inline std::pair<std::vector<std::string>, std::vector<RawLink>> random_small(std::mt19937_64& rng, int max_firms = 12) {
    std::uniform_int_distribution<int> nd(2, max_firms);
    const int n = nd(rng);
    const char* codes[] = {"101", "102", "201", "251", "462"};
    std::uniform_int_distribution<int> sd(0, 4);
    std::vector<std::string> sectors;
    for (int i = 0; i < n; ++i) sectors.push_back(codes[sd(rng)]);
    std::uniform_real_distribution<double> p(0.0, 1.0);
    std::uniform_int_distribution<int> wd(1, 50000);
    double density = 0.1 + 0.4 * p(rng);
    std::vector<RawLink> links;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && p(rng) < density) links.push_back({i, j, static_cast<double>(wd(rng))});
    return {sectors, links};
}

inline EssentialityMatrix random_matrix(std::mt19937_64& rng) {
    EssentialityMatrix m(Essentiality::essential);
    const char* divs[] = {"10", "20", "25", "46"};
    std::uniform_int_distribution<int> c(0, 2);
    for (auto s : divs)
        for (auto b : divs) m.set(s, b, c(rng) == 0 ? Essentiality::essential : c(rng) == 1 ? Essentiality::non_essential : Essentiality::irrelevant);
    return m;
}

}  // namespace testing_support

#pragma once

// Subnetwork extraction (seed-sector and community based) and a seeded
// synthetic supply-chain generator.

#include "community.hpp"
#include "metrics.hpp"
#include "production.hpp"
#include "rewiring.hpp"

#include <set>

namespace scnrisk {

// ---------------------------------------------------------------------------
// helpers

/// Induced subgraph on the largest weakly connected component.
inline ScNetwork largest_wcc(const ScNetwork& net) {
    auto adj = detail::undirected_adjacency(DiGraph::from(net));
    auto label = detail::wcc_labels(adj);
    std::vector<std::size_t> size(net.firm_count(), 0);
    for (auto l : label) ++size[l];
    std::uint32_t best = 0;
    for (std::uint32_t c = 0; c < size.size(); ++c)
        if (size[c] > size[best]) best = c;
    std::vector<FirmId> keep;
    for (FirmId f = 0; f < net.firm_count(); ++f)
        if (label[f] == best) keep.push_back(f);
    return induced_subgraph(net, keep);
}

// ---------------------------------------------------------------------------
// seed-sector extraction

struct SeedSectorSpec {
    std::string seed_code;  // matched as a prefix of the firm's sector code
    std::size_t n_supplier_groups = 16;
    std::size_t n_customer_groups = 8;
    std::size_t min_group_size = 5;

    void validate() const {
        if (seed_code.empty()) throw ConfigError("seed code must not be empty");
        if (n_supplier_groups < 1 || n_customer_groups < 1 || min_group_size < 1)
            throw ConfigError("group counts must be at least 1");
    }
};

struct GroupScore {
    ProductId product = 0;
    std::size_t tier1_count = 0;
    std::size_t network_count = 0;
    /// (share among Tier-1 firms) / (share among all firms)
    double ratio = 0.0;
};

/// Ranks the nace3 groups of `tier1` by overrepresentation, most
/// overrepresented first; ties by group code.
inline std::vector<GroupScore> rank_groups(const ScNetwork& net, const std::vector<FirmId>& tier1) {
    std::vector<GroupScore> scores(net.product_count());
    for (ProductId p = 0; p < net.product_count(); ++p) {
        scores[p].product = p;
        scores[p].network_count = net.firms_of_product(p).size();
    }
    for (FirmId f : tier1) ++scores[net.product_of(f)].tier1_count;
    std::vector<GroupScore> out;
    for (auto& s : scores) {
        if (s.tier1_count == 0) continue;
        s.ratio = (static_cast<double>(s.tier1_count) / static_cast<double>(tier1.size())) /
                  (static_cast<double>(s.network_count) / static_cast<double>(net.firm_count()));
        out.push_back(s);
    }
    std::stable_sort(out.begin(), out.end(), [](const GroupScore& a, const GroupScore& b) { return a.ratio > b.ratio; });
    return out;
}

inline ScNetwork extract_seed_sector(const ScNetwork& net, const SeedSectorSpec& spec) {
    spec.validate();
    std::vector<char> seed(net.firm_count(), 0);
    std::size_t n_seed = 0;
    for (FirmId f = 0; f < net.firm_count(); ++f)
        if (net.firm(f).sector.str().rfind(spec.seed_code, 0) == 0) {
            seed[f] = 1;
            ++n_seed;
        }
    if (n_seed == 0) throw IntegrityError("no firm belongs to seed class '" + spec.seed_code + "'");

    auto tier1 = [&](bool suppliers) {
        std::vector<char> in(net.firm_count(), 0);
        for (FirmId f = 0; f < net.firm_count(); ++f) {
            if (!seed[f]) continue;
            for (LinkId id : suppliers ? net.in_links(f) : net.out_links(f)) {
                FirmId other = suppliers ? net.link(id).source : net.link(id).target;
                if (!seed[other]) in[other] = 1;
            }
        }
        std::vector<FirmId> out;
        for (FirmId f = 0; f < net.firm_count(); ++f)
            if (in[f]) out.push_back(f);
        return out;
    };

    std::vector<char> keep(seed);
    auto select = [&](const std::vector<FirmId>& firms, std::size_t n_groups) {
        std::set<ProductId> chosen;
        for (const auto& g : rank_groups(net, firms)) {
            if (chosen.size() == n_groups) break;
            if (g.tier1_count >= spec.min_group_size) chosen.insert(g.product);
        }
        for (FirmId f : firms)
            if (chosen.count(net.product_of(f))) keep[f] = 1;
    };
    select(tier1(true), spec.n_supplier_groups);
    select(tier1(false), spec.n_customer_groups);

    std::vector<FirmId> kept;
    for (FirmId f = 0; f < net.firm_count(); ++f)
        if (keep[f]) kept.push_back(f);
    return largest_wcc(induced_subgraph(net, kept));
}

// ---------------------------------------------------------------------------
// community extraction

/// Two-digit divisions selected by a filter: a NACE section letter ("C"), or
/// a comma-separated list of divisions and ranges ("10-33,45").
inline std::set<int> parse_division_filter(const std::string& filter) {
    static const std::map<char, std::pair<int, int>> sections = {
        {'A', {1, 3}},   {'B', {5, 9}},   {'C', {10, 33}}, {'D', {35, 35}}, {'E', {36, 39}}, {'F', {41, 43}},
        {'G', {45, 47}}, {'H', {49, 53}}, {'I', {55, 56}}, {'J', {58, 63}}, {'K', {64, 66}}, {'L', {68, 68}},
        {'M', {69, 75}}, {'N', {77, 82}}, {'O', {84, 84}}, {'P', {85, 85}}, {'Q', {86, 88}}, {'R', {90, 93}},
        {'S', {94, 96}}, {'T', {97, 98}}, {'U', {99, 99}}};
    std::set<int> out;
    if (filter.size() == 1 && std::isalpha(static_cast<unsigned char>(filter[0]))) {
        auto it = sections.find(static_cast<char>(std::toupper(static_cast<unsigned char>(filter[0]))));
        if (it == sections.end()) throw ConfigError("unknown NACE section '" + filter + "'");
        for (int d = it->second.first; d <= it->second.second; ++d) out.insert(d);
        return out;
    }
    std::stringstream ss(filter);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            auto dash = part.find('-');
            int lo = std::stoi(part.substr(0, dash));
            int hi = dash == std::string::npos ? lo : std::stoi(part.substr(dash + 1));
            if (lo > hi) throw ConfigError("");
            for (int d = lo; d <= hi; ++d) out.insert(d);
        } catch (...) {
            throw ConfigError("bad division filter '" + filter + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty division filter");
    return out;
}

struct CommunitySpec {
    std::string section_filter = "C";
    std::size_t target_size = 1000;
};

/// CNM partition of `net`'s collapsed undirected graph (label per firm).
inline std::vector<std::uint32_t> community_partition(const ScNetwork& net) {
    return cnm_communities(detail::undirected_adjacency(DiGraph::from(net)));
}

inline ScNetwork extract_community(const ScNetwork& net, const CommunitySpec& spec) {
    if (spec.target_size < 1) throw ConfigError("target size must be at least 1");
    auto divisions = parse_division_filter(spec.section_filter);
    std::vector<FirmId> in_section;
    for (FirmId f = 0; f < net.firm_count(); ++f) {
        int div = 0;
        try {
            div = std::stoi(net.firm(f).sector.nace2());
        } catch (...) {
            continue;
        }
        if (divisions.count(div)) in_section.push_back(f);
    }
    if (in_section.empty()) throw IntegrityError("section filter '" + spec.section_filter + "' selects no firm");
    auto sub = induced_subgraph(net, in_section);
    auto label = community_partition(sub);
    std::map<std::uint32_t, std::vector<FirmId>> groups;
    for (FirmId f = 0; f < sub.firm_count(); ++f) groups[label[f]].push_back(f);
    const std::vector<FirmId>* best = nullptr;
    std::size_t best_gap = 0;
    for (const auto& [c, members] : groups) {
        std::size_t gap = members.size() > spec.target_size ? members.size() - spec.target_size : spec.target_size - members.size();
        if (!best || gap < best_gap) {
            best = &members;
            best_gap = gap;
        }
    }
    return induced_subgraph(sub, *best);
}

// ---------------------------------------------------------------------------
// synthetic generator

struct SynthSpec {
    std::size_t n_firms = 200;
    std::size_t n_sectors = 20;
    double mean_degree = 2.0;        // mean out-degree
    double degree_exponent = 2.2;    // fitness CCDF ~ x^-(exponent-1)
    double weight_exponent = 2.5;
    double reciprocity_target = 0.05;
    double essentiality_density = 0.3;
    std::size_t buyer_sectors = 3;   // buyer sectors each sector sells to
    bool weighted = true;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_firms < 2) throw ConfigError("need at least two firms");
        if (n_sectors < 1 || n_sectors > n_firms) throw ConfigError("n_sectors must lie in [1, n_firms]");
        if (n_sectors > 178) throw ConfigError("at most 178 synthetic sectors are supported");
        if (!(degree_exponent > 1.0) || !(weight_exponent > 1.0)) throw ConfigError("exponents must exceed 1");
        if (!(reciprocity_target >= 0.0 && reciprocity_target <= 1.0)) throw ConfigError("reciprocity must lie in [0,1]");
        if (!(essentiality_density >= 0.0 && essentiality_density <= 1.0))
            throw ConfigError("essentiality density must lie in [0,1]");
        if (!(mean_degree > 0.0) || mean_degree >= static_cast<double>(n_firms - 1))
            throw ConfigError("mean degree must lie in (0, n_firms-1)");
        if (buyer_sectors < 1) throw ConfigError("buyer_sectors must be at least 1");
    }
};

struct SyntheticData {
    ScNetwork network;
    EssentialityMatrix essentiality{Essentiality::non_essential};
};

/// Sector index -> code: two nace3 groups per two-digit division, from 10 up.
inline std::string synthetic_sector_code(std::size_t s) {
    return std::to_string(10 + s / 2) + std::to_string(s % 2 + 1);
}

/// True if at least one link has an eligible swap partner.
inline bool has_eligible_swap(const ScNetwork& net) {
    std::vector<LinkId> partners;
    for (LinkId id : net.alive_links()) {
        detail::eligible_partners(net, id, partners);
        if (!partners.empty()) return true;
    }
    return false;
}

inline SyntheticData generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto pareto = [&](double exponent) { return std::pow(1.0 - unif(rng), -1.0 / (exponent - 1.0)); };

    // skewed sector sizes, every sector populated
    std::vector<std::size_t> sector(spec.n_firms);
    {
        std::vector<double> w(spec.n_sectors);
        for (std::size_t s = 0; s < spec.n_sectors; ++s) w[s] = std::pow(static_cast<double>(s + 1), -0.8);
        std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
        for (std::size_t f = 0; f < spec.n_firms; ++f) sector[f] = f < spec.n_sectors ? f : pick(rng);
    }
    std::vector<std::vector<FirmId>> members(spec.n_sectors);
    for (FirmId f = 0; f < spec.n_firms; ++f) members[sector[f]].push_back(f);

    // sector-level recipe: which buyer sectors each sector sells to
    std::vector<std::vector<std::size_t>> buyers(spec.n_sectors);
    for (std::size_t s = 0; s < spec.n_sectors; ++s) {
        std::vector<std::size_t> all(spec.n_sectors);
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(std::min(spec.buyer_sectors, spec.n_sectors));
        buyers[s] = std::move(all);
    }

    std::vector<double> out_fit(spec.n_firms), in_fit(spec.n_firms);
    for (auto& x : out_fit) x = pareto(spec.degree_exponent);
    for (auto& x : in_fit) x = pareto(spec.degree_exponent);
    std::discrete_distribution<std::size_t> pick_source(out_fit.begin(), out_fit.end());
    std::vector<std::discrete_distribution<std::size_t>> pick_in_sector;
    for (const auto& m : members) {
        std::vector<double> w;
        for (FirmId f : m) w.push_back(in_fit[f]);
        pick_in_sector.emplace_back(w.begin(), w.end());
    }

    auto draw_weight = [&] {
        if (!spec.weighted) return Weight::unit();
        double w = std::min(3000.0 * pareto(spec.weight_exponent), 1e9);
        return Weight::from_units(std::round(w * 100.0) / 100.0);
    };

    const std::size_t target_links = static_cast<std::size_t>(std::llround(spec.mean_degree * static_cast<double>(spec.n_firms)));
    std::unordered_map<std::uint64_t, std::size_t> seen;
    std::vector<LinkSpec> links;
    auto add = [&](FirmId s, FirmId t) {
        if (s == t || seen.count(pair_key(s, t))) return false;
        seen.emplace(pair_key(s, t), links.size());
        links.push_back({s, t, draw_weight()});
        return true;
    };
    for (std::size_t attempts = 0; links.size() < target_links && attempts < 50 * target_links; ++attempts) {
        FirmId s = static_cast<FirmId>(pick_source(rng));
        const auto& b = buyers[sector[s]];
        std::size_t bs = b[detail::uniform_index(b.size(), rng)];
        FirmId t = members[bs][pick_in_sector[bs](rng)];
        if (!add(s, t)) continue;
        if (unif(rng) < spec.reciprocity_target) add(t, s);
    }

    // every firm trades: attach leftovers as a supplier to a recipe buyer,
    // or failing that as a customer of a firm selling into its sector
    std::vector<char> linked(spec.n_firms, 0);
    for (const auto& l : links) linked[l.source] = linked[l.target] = 1;
    for (FirmId f = 0; f < spec.n_firms; ++f) {
        if (linked[f]) continue;
        for (int tries = 0; tries < 100 && !linked[f]; ++tries) {
            if (tries % 2 == 0) {
                const auto& b = buyers[sector[f]];
                std::size_t bs = b[detail::uniform_index(b.size(), rng)];
                FirmId t = members[bs][pick_in_sector[bs](rng)];
                if (add(f, t)) linked[f] = linked[t] = 1;
            } else {
                FirmId s = static_cast<FirmId>(pick_source(rng));
                if (add(s, f)) linked[f] = linked[s] = 1;
            }
        }
    }

    std::vector<FirmSpec> firms;
    for (FirmId f = 0; f < spec.n_firms; ++f)
        firms.push_back({"f" + std::to_string(f), SectorCode(synthetic_sector_code(sector[f]))});
    auto full = ScNetwork::from_parts(spec.weighted ? WeightMode::weighted : WeightMode::unweighted, std::move(firms),
                                      std::move(links));
    std::vector<FirmId> connected;
    for (FirmId f = 0; f < full.firm_count(); ++f)
        if (!full.out_links(f).empty() || !full.in_links(f).empty()) connected.push_back(f);

    SyntheticData data;
    data.network = induced_subgraph(full, connected);
    if (!has_eligible_swap(data.network)) throw ConfigError("synthetic network admits no eligible swap; adjust the spec");

    std::set<std::string> divisions;
    for (const auto& f : data.network.firms()) divisions.insert(f.sector.nace2());
    for (const auto& sup : divisions)
        for (const auto& buy : divisions)
            data.essentiality.set(sup, buy,
                                  unif(rng) < spec.essentiality_density ? Essentiality::essential : Essentiality::non_essential);
    return data;
}

}  // namespace scnrisk

#pragma once

#include "core.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace scnrisk {

struct FirmSpec {
    std::string name;
    SectorCode sector;
};

struct LinkSpec {
    FirmId source = 0;
    FirmId target = 0;
    Weight weight;

    friend bool operator==(const LinkSpec&, const LinkSpec&) = default;
    friend auto operator<=>(const LinkSpec& a, const LinkSpec& b) {
        return std::tie(a.source, a.target, a.weight) <=> std::tie(b.source, b.target, b.weight);
    }
};

struct FirmRecord {
    std::string name;
    SectorCode sector;
    ProductId product = 0;
    // Empirical values captured when the network was built; never touched by swaps.
    Weight out_strength0;
    std::vector<std::pair<ProductId, Weight>> in_strength0;  // sorted by product
};

struct LinkRecord {
    FirmId source = 0;
    FirmId target = 0;
    Weight weight;
    bool alive = false;
    // back-pointers into the index vectors, for O(1) removal
    std::uint32_t pos_alive = 0;
    std::uint32_t pos_out = 0;
    std::uint32_t pos_in = 0;
    std::uint32_t pos_pair = 0;
};

class ScNetwork;

/// Versioned, self-contained copy of a network, including the empirical
/// strengths that anchor the rewiring constraints.
struct NetworkSnapshot {
    static constexpr int kFormatVersion = 1;
    int format_version = kFormatVersion;
    WeightMode mode = WeightMode::weighted;
    std::vector<FirmRecord> firms;
    std::vector<std::string> products;
    std::vector<LinkSpec> links;  // canonical order
};

/// Supply-chain network: firms with a sector label, and directed supply
/// links (supplier -> customer) carrying a monetary weight.
///
/// Link storage is append-only; removed links leave a dead slot so that
/// handles held by swap proposals stay meaningful. At most one live link
/// exists per (source, target) pair.
class ScNetwork {
public:
    ScNetwork() = default;

    /// Builds a network. Self-loops are dropped, parallel links are merged
    /// (summed in weighted mode, collapsed to a single unit link otherwise),
    /// and the empirical strengths are computed from the result.
    static ScNetwork from_parts(WeightMode mode, std::vector<FirmSpec> firms, std::vector<LinkSpec> links) {
        ScNetwork net;
        net.mode_ = mode;
        std::map<std::string, ProductId> product_ids;
        for (const auto& f : firms) product_ids.emplace(f.sector.nace3(), 0);
        ProductId next = 0;
        for (auto& [code, id] : product_ids) {
            id = next++;
            net.products_.push_back(code);
        }
        net.firms_.reserve(firms.size());
        for (auto& f : firms) {
            FirmRecord rec;
            rec.product = product_ids.at(f.sector.nace3());
            rec.name = std::move(f.name);
            rec.sector = std::move(f.sector);
            net.firms_.push_back(std::move(rec));
        }
        net.init_indexes();

        std::vector<LinkSpec> merged;
        merged.reserve(links.size());
        std::unordered_map<std::uint64_t, std::size_t> seen;
        for (const auto& l : links) {
            if (l.source >= net.firms_.size() || l.target >= net.firms_.size())
                throw IntegrityError("link references unknown firm");
            if (l.source == l.target) continue;
            Weight w = mode == WeightMode::unweighted ? Weight::unit() : l.weight;
            if (w.ticks() <= 0) throw IntegrityError("link weight must be positive");
            auto [it, fresh] = seen.emplace(pair_key(l.source, l.target), merged.size());
            if (fresh) {
                merged.push_back({l.source, l.target, w});
            } else if (mode == WeightMode::weighted) {
                merged[it->second].weight += w;
            }
        }
        for (const auto& l : merged) net.add_link(l.source, l.target, l.weight);
        net.capture_empirical();
        net.version_ = 0;
        return net;
    }

    WeightMode mode() const { return mode_; }
    bool weighted() const { return mode_ == WeightMode::weighted; }

    std::size_t firm_count() const { return firms_.size(); }
    const FirmRecord& firm(FirmId f) const { return firms_.at(f); }
    std::span<const FirmRecord> firms() const { return firms_; }
    ProductId product_of(FirmId f) const { return firms_[f].product; }

    std::size_t product_count() const { return products_.size(); }
    const std::string& product_code(ProductId p) const { return products_.at(p); }
    std::span<const std::string> products() const { return products_; }
    std::span<const FirmId> firms_of_product(ProductId p) const { return producers_.at(p); }

    std::optional<FirmId> find_firm(const std::string& name) const {
        for (FirmId f = 0; f < firms_.size(); ++f)
            if (firms_[f].name == name) return f;
        return std::nullopt;
    }

    std::size_t link_count() const { return alive_.size(); }
    std::size_t link_slots() const { return links_.size(); }
    const LinkRecord& link(LinkId id) const { return links_.at(id); }
    std::span<const LinkId> alive_links() const { return alive_; }
    std::span<const LinkId> out_links(FirmId f) const { return out_[f]; }
    std::span<const LinkId> in_links(FirmId f) const { return in_[f]; }

    /// Live links whose source produces `source_product` and whose target
    /// produces `target_product`.
    std::span<const LinkId> sector_pair_links(ProductId source_product, ProductId target_product) const {
        auto it = by_pair_.find(pair_key(source_product, target_product));
        if (it == by_pair_.end()) return {};
        return it->second;
    }

    LinkId find_link(FirmId source, FirmId target) const {
        auto it = by_ends_.find(pair_key(source, target));
        return it == by_ends_.end() ? kNoLink : it->second;
    }

    Weight out_strength(FirmId f) const { return out_strength_[f]; }
    Weight in_strength(FirmId f) const { return in_strength_[f]; }
    Weight out_strength0(FirmId f) const { return firms_[f].out_strength0; }
    Weight total_weight() const { return total_weight_; }

    Weight in_strength0(FirmId f, ProductId p) const {
        const auto& v = firms_[f].in_strength0;
        auto it = std::lower_bound(v.begin(), v.end(), p, [](const auto& e, ProductId q) { return e.first < q; });
        return it != v.end() && it->first == p ? it->second : Weight{};
    }

    /// Incremented by every mutation; swap proposals use it to detect staleness.
    std::uint64_t version() const { return version_; }

    // -- low-level mutation, used by the rewiring module -------------------

    LinkId add_link(FirmId source, FirmId target, Weight w) {
        if (source == target) throw IntegrityError("self-loop");
        if (w.ticks() <= 0) throw IntegrityError("non-positive link weight");
        if (find_link(source, target) != kNoLink) throw IntegrityError("duplicate (source,target) pair");
        LinkId id = static_cast<LinkId>(links_.size());
        links_.push_back({source, target, w, false});
        attach(id);
        ++version_;
        return id;
    }

    void remove_link(LinkId id) {
        if (id >= links_.size() || !links_[id].alive) throw IntegrityError("removing a dead link");
        detach(id);
        ++version_;
    }

    /// Brings a removed link back under its old handle.
    void restore_link(LinkId id) {
        if (id >= links_.size() || links_[id].alive) throw IntegrityError("restoring a live link");
        if (find_link(links_[id].source, links_[id].target) != kNoLink)
            throw IntegrityError("restoring onto an occupied pair");
        attach(id);
        ++version_;
    }

    /// Discards the most recently appended slot, which must be live.
    void drop_last_slot() {
        if (links_.empty()) throw IntegrityError("no slot to drop");
        LinkId id = static_cast<LinkId>(links_.size() - 1);
        if (links_[id].alive) detach(id);
        links_.pop_back();
        ++version_;
    }

    void set_weight(LinkId id, Weight w) {
        if (id >= links_.size() || !links_[id].alive) throw IntegrityError("reweighting a dead link");
        if (w.ticks() <= 0) throw IntegrityError("non-positive link weight");
        auto& l = links_[id];
        Weight d = w - l.weight;
        out_strength_[l.source] += d;
        in_strength_[l.target] += d;
        total_weight_ += d;
        l.weight = w;
        ++version_;
    }

    /// Brute-force check that every index agrees with the link table.
    void check_integrity() const {
        std::size_t live = 0;
        std::vector<Weight> out(firms_.size()), in(firms_.size());
        Weight total;
        std::unordered_map<std::uint64_t, std::size_t> pair_counts;
        for (LinkId id = 0; id < links_.size(); ++id) {
            const auto& l = links_[id];
            if (!l.alive) continue;
            ++live;
            if (l.source == l.target) throw IntegrityError("self-loop present");
            if (l.weight.ticks() <= 0) throw IntegrityError("non-positive weight present");
            if (mode_ == WeightMode::unweighted && l.weight != Weight::unit())
                throw IntegrityError("non-unit weight in unweighted network");
            if (find_link(l.source, l.target) != id) throw IntegrityError("pair index mismatch");
            if (alive_.at(l.pos_alive) != id || out_.at(l.source).at(l.pos_out) != id ||
                in_.at(l.target).at(l.pos_in) != id)
                throw IntegrityError("adjacency index mismatch");
            const auto& bucket = by_pair_.at(pair_key(product_of(l.source), product_of(l.target)));
            if (bucket.at(l.pos_pair) != id) throw IntegrityError("sector-pair index mismatch");
            ++pair_counts[pair_key(product_of(l.source), product_of(l.target))];
            out[l.source] += l.weight;
            in[l.target] += l.weight;
            total += l.weight;
        }
        if (live != alive_.size() || live != by_ends_.size()) throw IntegrityError("live link count mismatch");
        for (const auto& [key, bucket] : by_pair_)
            if (bucket.size() != (pair_counts.count(key) ? pair_counts[key] : 0))
                throw IntegrityError("sector-pair bucket size mismatch");
        for (FirmId f = 0; f < firms_.size(); ++f)
            if (out[f] != out_strength_[f] || in[f] != in_strength_[f]) throw IntegrityError("strength mismatch");
        if (total != total_weight_) throw IntegrityError("total weight mismatch");
    }

    friend NetworkSnapshot snapshot(const ScNetwork& net);
    friend ScNetwork restore(const NetworkSnapshot& snap);

private:
    void init_indexes() {
        out_.assign(firms_.size(), {});
        in_.assign(firms_.size(), {});
        out_strength_.assign(firms_.size(), Weight{});
        in_strength_.assign(firms_.size(), Weight{});
        producers_.assign(products_.size(), {});
        for (FirmId f = 0; f < firms_.size(); ++f) producers_[firms_[f].product].push_back(f);
    }

    void capture_empirical() {
        for (auto& f : firms_) f.in_strength0.clear();
        std::vector<std::map<ProductId, Weight>> by_product(firms_.size());
        for (LinkId id : alive_) {
            const auto& l = links_[id];
            by_product[l.target][product_of(l.source)] += l.weight;
        }
        for (FirmId f = 0; f < firms_.size(); ++f) {
            firms_[f].out_strength0 = out_strength_[f];
            firms_[f].in_strength0.assign(by_product[f].begin(), by_product[f].end());
        }
    }

    void attach(LinkId id) {
        auto& l = links_[id];
        l.alive = true;
        l.pos_alive = static_cast<std::uint32_t>(alive_.size());
        alive_.push_back(id);
        l.pos_out = static_cast<std::uint32_t>(out_[l.source].size());
        out_[l.source].push_back(id);
        l.pos_in = static_cast<std::uint32_t>(in_[l.target].size());
        in_[l.target].push_back(id);
        auto& bucket = by_pair_[pair_key(product_of(l.source), product_of(l.target))];
        l.pos_pair = static_cast<std::uint32_t>(bucket.size());
        bucket.push_back(id);
        by_ends_.emplace(pair_key(l.source, l.target), id);
        out_strength_[l.source] += l.weight;
        in_strength_[l.target] += l.weight;
        total_weight_ += l.weight;
    }

    void detach(LinkId id) {
        auto& l = links_[id];
        erase_at(alive_, l.pos_alive, &LinkRecord::pos_alive);
        erase_at(out_[l.source], l.pos_out, &LinkRecord::pos_out);
        erase_at(in_[l.target], l.pos_in, &LinkRecord::pos_in);
        erase_at(by_pair_[pair_key(product_of(l.source), product_of(l.target))], l.pos_pair, &LinkRecord::pos_pair);
        by_ends_.erase(pair_key(l.source, l.target));
        out_strength_[l.source] -= l.weight;
        in_strength_[l.target] -= l.weight;
        total_weight_ -= l.weight;
        l.alive = false;
    }

    // swap-with-last removal, keeping the moved element's back-pointer right
    void erase_at(std::vector<LinkId>& v, std::uint32_t pos, std::uint32_t LinkRecord::*field) {
        LinkId moved = v.back();
        v[pos] = moved;
        links_[moved].*field = pos;
        v.pop_back();
    }

    WeightMode mode_ = WeightMode::weighted;
    std::vector<FirmRecord> firms_;
    std::vector<std::string> products_;
    std::vector<std::vector<FirmId>> producers_;
    std::vector<LinkRecord> links_;
    std::vector<LinkId> alive_;
    std::vector<std::vector<LinkId>> out_;
    std::vector<std::vector<LinkId>> in_;
    std::unordered_map<std::uint64_t, std::vector<LinkId>> by_pair_;
    std::unordered_map<std::uint64_t, LinkId> by_ends_;
    std::vector<Weight> out_strength_;
    std::vector<Weight> in_strength_;
    Weight total_weight_;
    std::uint64_t version_ = 0;
};

/// Live links as (source, target, weight) in sorted order; two networks over
/// the same firm table hold the same link multiset iff these compare equal.
inline std::vector<LinkSpec> canonical_links(const ScNetwork& net) {
    std::vector<LinkSpec> out;
    out.reserve(net.link_count());
    for (LinkId id : net.alive_links()) {
        const auto& l = net.link(id);
        out.push_back({l.source, l.target, l.weight});
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline NetworkSnapshot snapshot(const ScNetwork& net) {
    NetworkSnapshot s;
    s.mode = net.mode_;
    s.firms = net.firms_;
    s.products = net.products_;
    s.links = canonical_links(net);
    return s;
}

inline ScNetwork restore(const NetworkSnapshot& snap) {
    if (snap.format_version != NetworkSnapshot::kFormatVersion)
        throw IntegrityError("unsupported snapshot format version " + std::to_string(snap.format_version));
    ScNetwork net;
    net.mode_ = snap.mode;
    net.firms_ = snap.firms;
    net.products_ = snap.products;
    net.init_indexes();
    for (const auto& l : snap.links) net.add_link(l.source, l.target, l.weight);
    net.version_ = 0;
    return net;
}

/// The network's firm table paired with a fresh link list; empirical
/// strengths are recomputed from `links`.
inline ScNetwork with_links(const ScNetwork& net, std::vector<LinkSpec> links) {
    std::vector<FirmSpec> firms;
    firms.reserve(net.firm_count());
    for (const auto& f : net.firms()) firms.push_back({f.name, f.sector});
    return ScNetwork::from_parts(net.mode(), std::move(firms), std::move(links));
}

/// Induced subgraph on `keep` (in the given order); every link between kept
/// firms is retained.
inline ScNetwork induced_subgraph(const ScNetwork& net, std::span<const FirmId> keep) {
    std::vector<FirmId> remap(net.firm_count(), kNoLink);
    std::vector<FirmSpec> firms;
    for (FirmId f : keep) {
        if (remap[f] != kNoLink) continue;
        remap[f] = static_cast<FirmId>(firms.size());
        firms.push_back({net.firm(f).name, net.firm(f).sector});
    }
    std::vector<LinkSpec> links;
    for (LinkId id : net.alive_links()) {
        const auto& l = net.link(id);
        if (remap[l.source] != kNoLink && remap[l.target] != kNoLink)
            links.push_back({remap[l.source], remap[l.target], l.weight});
    }
    std::sort(links.begin(), links.end());
    return ScNetwork::from_parts(net.mode(), std::move(firms), std::move(links));
}

}  // namespace scnrisk

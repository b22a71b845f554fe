#pragma once

// Two-link swaps that keep every firm's production recipe intact.
//
// Two links i->j and k->l joining the same (source product, target product)
// pair exchange suppliers. When the weights are within epsilon of each
// other the swap is "full" (k->j carries w1, i->l carries w2, so in-strengths
// are exact and out-strengths shift by |w1-w2|, subject to a band around the
// empirical value). Otherwise the heavier link is split and only the smaller
// weight changes hands ("partial"), which keeps all four strengths exact at
// the price of one extra link.

#include "network.hpp"

#include <json.hpp>

#include <optional>
#include <random>

namespace scnrisk {

using Rng = std::mt19937_64;

struct SwapConstraints {
    /// Full-swap tolerance on |w1 - w2|, in weight units.
    double epsilon = 3000.0;
    /// Out-strengths stay within [1-band, 1+band] times their empirical value.
    double out_strength_band = 0.20;
    /// Link-sampling attempts before giving up; 0 means 10 * link count.
    std::size_t resample_budget = 0;

    void validate() const {
        if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
        if (!(out_strength_band >= 0.0 && out_strength_band < 1.0)) throw ConfigError("out-strength band must lie in [0,1)");
    }
};

enum class SwapKind { full, partial };

inline const char* to_string(SwapKind k) { return k == SwapKind::full ? "full" : "partial"; }

struct EditOp {
    enum class Kind { add, remove, reweight };
    Kind kind = Kind::add;
    LinkId link = kNoLink;  // assigned on apply for additions
    FirmId source = 0;
    FirmId target = 0;
    Weight before;  // zero for additions
    Weight after;   // zero for removals
};

struct SwapProposal {
    LinkId link1 = kNoLink;
    LinkId link2 = kNoLink;
    LinkSpec first;
    LinkSpec second;
    SwapKind kind = SwapKind::full;
    Weight swap_amount;
    std::vector<EditOp> ops;
    std::uint64_t base_version = 0;
    std::uint64_t applied_version = 0;
    bool applied = false;

    long link_delta() const {
        long d = 0;
        for (const auto& op : ops) d += op.kind == EditOp::Kind::add ? 1 : op.kind == EditOp::Kind::remove ? -1 : 0;
        return d;
    }
};

namespace detail {

inline std::size_t uniform_index(std::size_t n, Rng& rng) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Second-link candidates for `link1`, following the exclusions that rule
/// out self-loops and, in unweighted networks, multi-edges and no-op swaps.
inline void eligible_partners(const ScNetwork& net, LinkId link1, std::vector<LinkId>& out) {
    out.clear();
    const auto& l1 = net.link(link1);
    const FirmId s = l1.source, t = l1.target;
    for (LinkId id : net.sector_pair_links(net.product_of(s), net.product_of(t))) {
        if (id == link1) continue;
        const auto& l2 = net.link(id);
        if (l2.source == t || l2.target == s) continue;
        if (!net.weighted()) {
            if (net.find_link(l2.source, t) != kNoLink) continue;  // covers l2.source == s
            if (net.find_link(s, l2.target) != kNoLink) continue;  // covers l2.target == t
        }
        out.push_back(id);
    }
}

}  // namespace detail

/// Draws link1 uniformly and link2 uniformly among its eligible partners,
/// resampling link1 whenever that set is empty.
inline std::pair<LinkId, LinkId> find_two_links(const ScNetwork& net, Rng& rng, std::size_t budget = 0) {
    const std::size_t n = net.link_count();
    if (n < 2) throw ExhaustionError("need at least two links to swap");
    if (budget == 0) budget = 10 * n;
    std::vector<LinkId> partners;
    for (std::size_t attempt = 0; attempt < budget; ++attempt) {
        LinkId link1 = net.alive_links()[detail::uniform_index(n, rng)];
        detail::eligible_partners(net, link1, partners);
        if (partners.empty()) continue;
        return {link1, partners[detail::uniform_index(partners.size(), rng)]};
    }
    throw ExhaustionError("no eligible swap pair found in " + std::to_string(budget) + " attempts");
}

/// Builds the edit script for swapping `link1` and `link2`, or returns
/// nullopt when a full swap would push a supplier out of its band.
inline std::optional<SwapProposal> propose_swap(const ScNetwork& net, LinkId link1, LinkId link2,
                                                const SwapConstraints& c) {
    const auto& a = net.link(link1);
    const auto& b = net.link(link2);
    if (!a.alive || !b.alive || link1 == link2) throw IntegrityError("swap needs two distinct live links");
    if (net.product_of(a.source) != net.product_of(b.source) || net.product_of(a.target) != net.product_of(b.target))
        throw IntegrityError("swap links must join the same sector pair");

    SwapProposal p;
    p.link1 = link1;
    p.link2 = link2;
    p.first = {a.source, a.target, a.weight};
    p.second = {b.source, b.target, b.weight};
    p.base_version = net.version();

    const FirmId i = a.source, j = a.target, k = b.source, l = b.target;
    const Weight w1 = a.weight, w2 = b.weight;
    const Weight residue = w1 > w2 ? w1 - w2 : w2 - w1;

    // Net weight change per (source, target) pair, in first-seen order.
    std::vector<std::pair<std::uint64_t, Weight>> deltas;
    auto bump = [&](FirmId s, FirmId t, Weight d) {
        auto key = pair_key(s, t);
        for (auto& [kk, v] : deltas)
            if (kk == key) {
                v += d;
                return;
            }
        deltas.emplace_back(key, d);
    };
    if (residue.units() > c.epsilon) {
        p.kind = SwapKind::partial;
        p.swap_amount = std::min(w1, w2);
        bump(i, j, -p.swap_amount);
        bump(k, l, -p.swap_amount);
        bump(k, j, p.swap_amount);
        bump(i, l, p.swap_amount);
    } else {
        p.kind = SwapKind::full;
        p.swap_amount = w1;
        bump(i, j, -w1);
        bump(k, l, -w2);
        bump(k, j, w1);
        bump(i, l, w2);
        // out-strength band, anchored at the empirical values
        for (FirmId f : {i, k}) {
            if (i == k) break;
            Weight next = net.out_strength(f) + (f == i ? w2 - w1 : w1 - w2);
            double emp = static_cast<double>(net.out_strength0(f).ticks());
            double v = static_cast<double>(next.ticks());
            if (v < (1.0 - c.out_strength_band) * emp || v > (1.0 + c.out_strength_band) * emp) return std::nullopt;
        }
    }

    for (const auto& [key, d] : deltas) {
        if (d.ticks() == 0) continue;
        const FirmId s = static_cast<FirmId>(key >> 32), t = static_cast<FirmId>(key & 0xffffffffu);
        LinkId existing = net.find_link(s, t);
        Weight before = existing == kNoLink ? Weight{} : net.link(existing).weight;
        Weight after = before + d;
        if (after.ticks() < 0) throw IntegrityError("swap would drive a link weight negative");
        EditOp op;
        op.source = s;
        op.target = t;
        op.link = existing;
        op.before = before;
        op.after = after;
        op.kind = after.ticks() == 0 ? EditOp::Kind::remove
                  : before.ticks() == 0 ? EditOp::Kind::add
                                        : EditOp::Kind::reweight;
        p.ops.push_back(op);
    }
    return p;
}

inline void apply(ScNetwork& net, SwapProposal& p) {
    if (p.applied || net.version() != p.base_version) throw IntegrityError("stale swap proposal");
    for (auto& op : p.ops) {
        switch (op.kind) {
            case EditOp::Kind::add: op.link = net.add_link(op.source, op.target, op.after); break;
            case EditOp::Kind::remove:
                if (net.link(op.link).weight != op.before) throw IntegrityError("stale swap proposal");
                net.remove_link(op.link);
                break;
            case EditOp::Kind::reweight:
                if (net.link(op.link).weight != op.before) throw IntegrityError("stale swap proposal");
                net.set_weight(op.link, op.after);
                break;
        }
    }
    p.applied = true;
    p.applied_version = net.version();
}

inline void revert(ScNetwork& net, SwapProposal& p) {
    if (!p.applied || net.version() != p.applied_version) throw IntegrityError("revert of a stale or unapplied swap");
    for (auto it = p.ops.rbegin(); it != p.ops.rend(); ++it) {
        switch (it->kind) {
            case EditOp::Kind::add:
                if (it->link != net.link_slots() - 1) throw IntegrityError("revert out of order");
                net.drop_last_slot();
                it->link = kNoLink;
                break;
            case EditOp::Kind::remove: net.restore_link(it->link); break;
            case EditOp::Kind::reweight: net.set_weight(it->link, it->before); break;
        }
    }
    p.applied = false;
    p.base_version = net.version();
}

/// One rewiring event: sample pairs until a swap satisfies the constraints.
inline SwapProposal rewire(const ScNetwork& net, const SwapConstraints& c, Rng& rng) {
    std::size_t budget = c.resample_budget ? c.resample_budget : 10 * net.link_count();
    for (std::size_t attempt = 0; attempt < budget; ++attempt) {
        auto [l1, l2] = find_two_links(net, rng, budget);
        if (auto p = propose_swap(net, l1, l2, c)) return std::move(*p);
    }
    throw ExhaustionError("no swap satisfied the out-strength band in " + std::to_string(budget) + " attempts");
}

/// Re-executes an edit script by (source, target) pair rather than by link
/// handle, so a move log can be replayed onto an independently built copy.
inline void replay_ops(ScNetwork& net, std::span<const EditOp> ops) {
    for (const auto& op : ops) {
        LinkId id = net.find_link(op.source, op.target);
        Weight current = id == kNoLink ? Weight{} : net.link(id).weight;
        if (current != op.before) throw IntegrityError("move log does not match network state");
        if (op.kind == EditOp::Kind::add)
            net.add_link(op.source, op.target, op.after);
        else if (op.kind == EditOp::Kind::remove)
            net.remove_link(id);
        else
            net.set_weight(id, op.after);
    }
}

/// Checks the constraints every accepted swap must keep: exact per-product
/// in-strengths, conserved total weight, out-strengths inside the band
/// (exactly preserved in unweighted networks), no self-loops, consistent
/// indexes. Throws IntegrityError on the first violation.
inline void verify_swap_invariants(const ScNetwork& net, const SwapConstraints& c, Weight expected_total) {
    net.check_integrity();
    if (net.total_weight() != expected_total) throw IntegrityError("total weight not conserved");
    std::vector<std::vector<std::pair<ProductId, Weight>>> inputs(net.firm_count());
    for (LinkId id : net.alive_links()) {
        const auto& l = net.link(id);
        auto& v = inputs[l.target];
        ProductId p = net.product_of(l.source);
        auto it = std::find_if(v.begin(), v.end(), [&](const auto& e) { return e.first == p; });
        if (it == v.end())
            v.emplace_back(p, l.weight);
        else
            it->second += l.weight;
    }
    for (FirmId f = 0; f < net.firm_count(); ++f) {
        auto& v = inputs[f];
        std::sort(v.begin(), v.end());
        if (v != net.firm(f).in_strength0) throw IntegrityError("per-product in-strength changed for firm " + net.firm(f).name);
        double emp = static_cast<double>(net.out_strength0(f).ticks());
        double cur = static_cast<double>(net.out_strength(f).ticks());
        if (!net.weighted()) {
            if (net.out_strength(f) != net.out_strength0(f)) throw IntegrityError("out-degree changed for firm " + net.firm(f).name);
        } else if (cur < (1.0 - c.out_strength_band) * emp || cur > (1.0 + c.out_strength_band) * emp) {
            throw IntegrityError("out-strength left its band for firm " + net.firm(f).name);
        }
    }
}

// -- move-log serialization ------------------------------------------------

inline nlohmann::json to_json(const ScNetwork& net, const SwapProposal& p) {
    auto link = [&](const LinkSpec& l) {
        return nlohmann::json{{"source", net.firm(l.source).name},
                              {"target", net.firm(l.target).name},
                              {"weight", l.weight.to_string()}};
    };
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& op : p.ops) {
        const char* kind = op.kind == EditOp::Kind::add ? "add" : op.kind == EditOp::Kind::remove ? "remove" : "reweight";
        ops.push_back({{"op", kind},
                       {"source", net.firm(op.source).name},
                       {"target", net.firm(op.target).name},
                       {"before", op.before.to_string()},
                       {"after", op.after.to_string()}});
    }
    return {{"kind", to_string(p.kind)},
            {"swap_amount", p.swap_amount.to_string()},
            {"link1", link(p.first)},
            {"link2", link(p.second)},
            {"ops", ops}};
}

/// Parses the "ops" array of a move-log entry against `net`'s firm names.
inline std::vector<EditOp> ops_from_json(const ScNetwork& net, const nlohmann::json& entry) {
    std::unordered_map<std::string, FirmId> ids;
    for (FirmId f = 0; f < net.firm_count(); ++f) ids.emplace(net.firm(f).name, f);
    auto firm = [&](const nlohmann::json& v) {
        auto it = ids.find(v.get<std::string>());
        if (it == ids.end()) throw IntegrityError("move log names unknown firm '" + v.get<std::string>() + "'");
        return it->second;
    };
    auto weight = [](const nlohmann::json& v) {
        Weight w;
        if (!Weight::parse(v.get<std::string>(), w)) throw ParseError("bad weight in move log");
        return w;
    };
    std::vector<EditOp> ops;
    for (const auto& o : entry.at("ops")) {
        EditOp op;
        const auto kind = o.at("op").get<std::string>();
        op.kind = kind == "add" ? EditOp::Kind::add : kind == "remove" ? EditOp::Kind::remove : EditOp::Kind::reweight;
        op.source = firm(o.at("source"));
        op.target = firm(o.at("target"));
        op.before = weight(o.at("before"));
        op.after = weight(o.at("after"));
        ops.push_back(op);
    }
    return ops;
}

}  // namespace scnrisk

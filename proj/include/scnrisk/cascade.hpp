#pragma once

// Shock cascades and the Economic Systemic Risk Index (ESRI).
//
// A failed firm is pinned at production level h = 0 and the loss spreads in
// synchronous rounds:
//   downstream  customers lose the unreplaceable part of the missing supply
//               and rescale through their GLPF;
//   upstream    suppliers scale down with the demand of their customers.
// Each firm keeps the minimum of its previous level and both responses, so h
// never increases and the iteration terminates.

#include "parallel.hpp"
#include "production.hpp"

#include <functional>
#include <numeric>

namespace scnrisk {

/// Per-firm replaceability proxy: the firm's share of the total output of
/// its product. Degrees stand in for strengths in unweighted networks, which
/// falls out of unit link weights.
struct MarketShares {
    std::vector<double> m;
};

/// Shares from the empirical out-strengths (default) or, with
/// `use_current`, from the network's present out-strengths.
inline MarketShares market_shares(const ScNetwork& net, bool use_current = false) {
    MarketShares shares;
    shares.m.assign(net.firm_count(), 0.0);
    for (ProductId p = 0; p < net.product_count(); ++p) {
        auto producers = net.firms_of_product(p);
        double total = 0.0;
        for (FirmId f : producers) total += (use_current ? net.out_strength(f) : net.out_strength0(f)).units();
        for (FirmId f : producers) {
            double s = (use_current ? net.out_strength(f) : net.out_strength0(f)).units();
            if (total > 0.0)
                shares.m[f] = s / total;
            else
                shares.m[f] = producers.size() == 1 ? 1.0 : 0.0;
        }
    }
    return shares;
}

struct CascadeConfig {
    double tol = 1e-6;
    int t_max = 1000;

    void validate() const {
        if (!(tol > 0.0)) throw ConfigError("cascade tol must be positive");
        if (t_max < 1) throw ConfigError("cascade t_max must be at least 1");
    }
};

struct CascadeState {
    std::vector<double> h;
    int t = 0;
    bool converged = false;
    double last_delta = 0.0;  // largest change in the final round
};

/// Called after every synchronous round with the round number and the levels.
using CascadeObserver = std::function<void(int, std::span<const double>)>;

struct RiskProfile {
    std::vector<double> esri;
    double mean = 0.0;
    std::size_t unconverged = 0;  // cascades that hit t_max
    int max_rounds = 0;

    /// Firm ids ordered by decreasing ESRI (ties by id).
    std::vector<FirmId> ranking() const {
        std::vector<FirmId> order(esri.size());
        std::iota(order.begin(), order.end(), FirmId{0});
        std::stable_sort(order.begin(), order.end(), [&](FirmId a, FirmId b) { return esri[a] > esri[b]; });
        return order;
    }
};

/// Read-only, flattened view of a network plus its production model, built
/// once per network state and shared by every cascade run on it.
class CascadeEngine {
public:
    CascadeEngine(const ScNetwork& net, const ProductionModel& model, const MarketShares& shares) {
        const std::size_t n = net.firm_count();
        if (model.firms.size() != n || shares.m.size() != n)
            throw IntegrityError("production model / market shares do not match the network");

        gamma_.resize(n);
        has_linear_.resize(n);
        ne_base_.assign(n, 0.0);
        up_has_sales_.assign(n, 0);
        weight_.resize(n);
        slot_begin_.assign(n + 1, 0);
        ne_begin_.assign(n + 1, 0);
        up_begin_.assign(n + 1, 0);
        nb_begin_.assign(n + 1, 0);

        std::vector<double> s_out(n);
        double total_out = 0.0;
        for (FirmId i = 0; i < n; ++i) {
            s_out[i] = net.out_strength(i).units();
            total_out += s_out[i];
        }
        for (FirmId i = 0; i < n; ++i)
            weight_[i] = total_out > 0.0 ? s_out[i] / total_out : 1.0 / static_cast<double>(n);

        // Delivered supply w * (1 - m * (1 - h)) is affine in h; every input
        // sum is stored as base + sum(coef * h) normalized by its reference.
        std::vector<std::vector<Term>> by_slot;
        std::vector<Term> ne_terms;
        for (FirmId i = 0; i < n; ++i) {
            const auto& p = model.firms[i];
            gamma_[i] = p.gamma_ne;
            has_linear_[i] = p.has_linear_branch();

            by_slot.assign(p.essential.size(), {});
            std::vector<double> slot_base(p.essential.size(), 0.0);
            ne_terms.clear();
            double ne_base = 0.0;
            for (LinkId id : net.in_links(i)) {
                const auto& l = net.link(id);
                ProductId k = net.product_of(l.source);
                const double w = l.weight.units(), m = shares.m[l.source];
                bool placed = false;
                for (std::size_t e = 0; e < p.essential.size(); ++e)
                    if (p.essential[e].product == k) {
                        slot_base[e] += w * (1.0 - m) / p.essential[e].pi0;
                        by_slot[e].push_back({l.source, w * m / p.essential[e].pi0});
                        placed = true;
                        break;
                    }
                if (placed || !has_linear_[i]) continue;
                for (const auto& ne : p.non_essential)
                    if (ne.product == k) {
                        ne_base += w * (1.0 - m) / p.ne_pi0;
                        ne_terms.push_back({l.source, w * m / p.ne_pi0});
                        break;
                    }
            }
            for (std::size_t e = 0; e < by_slot.size(); ++e) {
                slots_.push_back({slot_base[e], terms_.size(), terms_.size() + by_slot[e].size()});
                terms_.insert(terms_.end(), by_slot[e].begin(), by_slot[e].end());
            }
            slot_begin_[i + 1] = slots_.size();
            ne_base_[i] = ne_base;
            ne_terms_.insert(ne_terms_.end(), ne_terms.begin(), ne_terms.end());
            ne_begin_[i + 1] = ne_terms_.size();

            if (s_out[i] > 0.0) {
                up_has_sales_[i] = 1;
                for (LinkId id : net.out_links(i)) {
                    const auto& l = net.link(id);
                    up_terms_.push_back({l.target, l.weight.units() / s_out[i]});
                }
            }
            up_begin_[i + 1] = up_terms_.size();

            for (LinkId id : net.out_links(i)) neighbors_.push_back(net.link(id).target);
            for (LinkId id : net.in_links(i)) neighbors_.push_back(net.link(id).source);
            nb_begin_[i + 1] = neighbors_.size();
        }
    }

    std::size_t firm_count() const { return weight_.size(); }

    /// Aggregation weight of a firm: its share of total current output.
    double output_weight(FirmId f) const { return weight_[f]; }

    CascadeState run(FirmId shocked, const CascadeConfig& cfg, const CascadeObserver& observer = {}) const {
        const std::size_t n = firm_count();
        if (shocked >= n) throw IntegrityError("shocked firm out of range");
        CascadeState st;
        st.h.assign(n, 1.0);
        st.h[shocked] = 0.0;

        std::vector<std::uint32_t> mark(n, 0);
        std::uint32_t epoch = 0;
        std::vector<FirmId> changed{shocked};
        std::vector<FirmId> frontier;
        std::vector<double> next;
        std::vector<FirmId> everyone(n);
        std::iota(everyone.begin(), everyone.end(), FirmId{0});

        while (st.t < cfg.t_max) {
            ++st.t;
            // Only firms adjacent to a change can move; everyone else would
            // recompute exactly the value they already hold. Once the change
            // set is large a plain sweep is cheaper than collecting neighbors.
            const std::vector<FirmId>* update = &everyone;
            if (changed.size() * 8 < n) {
                ++epoch;
                frontier.clear();
                for (FirmId c : changed)
                    for (std::size_t e = nb_begin_[c]; e < nb_begin_[c + 1]; ++e) {
                        FirmId f = neighbors_[e];
                        if (mark[f] == epoch) continue;
                        mark[f] = epoch;
                        frontier.push_back(f);
                    }
                update = &frontier;
            }
            next.resize(update->size());
            for (std::size_t k = 0; k < update->size(); ++k) {
                FirmId i = (*update)[k];
                next[k] = i == shocked ? 0.0 : std::min(st.h[i], std::min(downstream(i, st.h), upstream(i, st.h)));
            }
            changed.clear();
            double max_delta = 0.0;
            for (std::size_t k = 0; k < update->size(); ++k) {
                FirmId i = (*update)[k];
                double d = st.h[i] - next[k];
                if (d > 0.0) {
                    st.h[i] = next[k];
                    changed.push_back(i);
                    max_delta = std::max(max_delta, d);
                }
            }
            st.last_delta = max_delta;
            if (observer) observer(st.t, st.h);
            if (max_delta < cfg.tol) {
                st.converged = true;
                break;
            }
        }
        return st;
    }

    /// Total output lost, as a fraction of network output, given final levels.
    double loss(std::span<const double> h) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) sum += weight_[i] * (1.0 - h[i]);
        return sum;
    }

    double esri(FirmId firm, const CascadeConfig& cfg) const { return loss(run(firm, cfg).h); }

    RiskProfile risk_profile(const CascadeConfig& cfg, unsigned workers = 1) const {
        const std::size_t n = firm_count();
        RiskProfile prof;
        prof.esri.assign(n, 0.0);
        std::vector<int> rounds(n, 0);
        std::vector<char> ok(n, 1);
        parallel_for(n, workers, [&](std::size_t j, unsigned) {
            auto st = run(static_cast<FirmId>(j), cfg);
            prof.esri[j] = loss(st.h);
            rounds[j] = st.t;
            ok[j] = st.converged;
        });
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sum += prof.esri[j];
            if (!ok[j]) ++prof.unconverged;
            prof.max_rounds = std::max(prof.max_rounds, rounds[j]);
        }
        prof.mean = n ? sum / static_cast<double>(n) : 0.0;
        return prof;
    }

private:
    struct Term {
        FirmId firm;
        double coef;
    };
    struct Slot {
        double base;
        std::size_t begin, end;
    };

    static double affine(double base, const Term* t, const Term* end, const std::vector<double>& h) {
        for (; t != end; ++t) base += t->coef * h[t->firm];
        return base;
    }

    double downstream(FirmId i, const std::vector<double>& h) const {
        double h_down = 1.0;
        for (std::size_t s = slot_begin_[i]; s < slot_begin_[i + 1]; ++s) {
            const auto& slot = slots_[s];
            h_down = std::min(h_down, affine(slot.base, terms_.data() + slot.begin, terms_.data() + slot.end, h));
        }
        if (has_linear_[i]) {
            double ratio = affine(ne_base_[i], ne_terms_.data() + ne_begin_[i], ne_terms_.data() + ne_begin_[i + 1], h);
            h_down = std::min(h_down, (1.0 - gamma_[i]) + gamma_[i] * ratio);
        }
        return std::clamp(h_down, 0.0, 1.0);
    }

    double upstream(FirmId i, const std::vector<double>& h) const {
        if (!up_has_sales_[i]) return 1.0;
        return affine(0.0, up_terms_.data() + up_begin_[i], up_terms_.data() + up_begin_[i + 1], h);
    }

    std::vector<double> gamma_;
    std::vector<char> has_linear_;
    std::vector<double> ne_base_;
    std::vector<char> up_has_sales_;
    std::vector<double> weight_;
    std::vector<std::size_t> slot_begin_, ne_begin_, up_begin_, nb_begin_;
    std::vector<Slot> slots_;
    std::vector<Term> terms_;
    std::vector<Term> ne_terms_;
    std::vector<Term> up_terms_;
    std::vector<FirmId> neighbors_;
};

inline CascadeState run_cascade(const ScNetwork& net, const ProductionModel& model, const MarketShares& shares,
                                FirmId shocked, const CascadeConfig& cfg = {}) {
    return CascadeEngine(net, model, shares).run(shocked, cfg);
}

inline double esri(const ScNetwork& net, const ProductionModel& model, const MarketShares& shares, FirmId firm,
                   const CascadeConfig& cfg = {}) {
    return CascadeEngine(net, model, shares).esri(firm, cfg);
}

inline RiskProfile risk_profile(const ScNetwork& net, const ProductionModel& model, const MarketShares& shares,
                                const CascadeConfig& cfg = {}, unsigned workers = 1) {
    cfg.validate();
    return CascadeEngine(net, model, shares).risk_profile(cfg, workers);
}

}  // namespace scnrisk

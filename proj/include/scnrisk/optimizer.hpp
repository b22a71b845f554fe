#pragma once

// Metropolis-Hastings minimization of the mean ESRI over swap moves.
// A move from configuration a to b is accepted with probability
// min(1, exp(-beta * (<ESRI>_b - <ESRI>_a))); beta = 0 accepts everything
// (configuration-model baseline) and a linearly growing beta anneals.

#include "cascade.hpp"
#include "rewiring.hpp"

#include <cmath>
#include <sstream>

namespace scnrisk {

struct AnnealSchedule {
    enum class Kind { fixed, linear };
    Kind kind = Kind::fixed;
    double beta = 0.0;  // fixed value, or beta_max for linear
    std::size_t total_steps = 1;

    static AnnealSchedule fixed(double beta) { return {Kind::fixed, beta, 1}; }
    static AnnealSchedule linear(double beta_max, std::size_t total_steps) {
        return {Kind::linear, beta_max, total_steps};
    }

    double at(std::size_t step) const {
        if (kind == Kind::fixed) return beta;
        return beta * static_cast<double>(step) / static_cast<double>(total_steps);
    }

    void validate() const {
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be a finite non-negative number");
        if (kind == Kind::linear && total_steps == 0) throw ConfigError("linear schedule needs a positive step count");
    }

    /// "0", "fixed:<beta>" or "linear:<beta_max>:<steps>".
    static AnnealSchedule parse(const std::string& s) {
        auto number = [&](const std::string& v) {
            std::size_t used = 0;
            double d = 0;
            try {
                d = std::stod(v, &used);
            } catch (...) {
                used = 0;
            }
            if (used != v.size() || v.empty()) throw ConfigError("bad beta schedule '" + s + "'");
            return d;
        };
        AnnealSchedule out;
        if (s.rfind("fixed:", 0) == 0) {
            out = fixed(number(s.substr(6)));
        } else if (s.rfind("linear:", 0) == 0) {
            auto rest = s.substr(7);
            auto colon = rest.find(':');
            if (colon == std::string::npos) throw ConfigError("bad beta schedule '" + s + "'");
            double steps = number(rest.substr(colon + 1));
            if (steps < 1 || steps != std::floor(steps)) throw ConfigError("bad beta schedule '" + s + "'");
            out = linear(number(rest.substr(0, colon)), static_cast<std::size_t>(steps));
        } else {
            out = fixed(number(s));
        }
        out.validate();
        return out;
    }

    std::string to_string() const {
        std::ostringstream os;
        os.precision(17);
        if (kind == Kind::fixed)
            os << "fixed:" << beta;
        else
            os << "linear:" << beta << ':' << total_steps;
        return os.str();
    }
};

inline double acceptance_probability(double beta, double delta_e) {
    if (delta_e <= 0.0) return 1.0;
    return std::exp(-beta * delta_e);
}

/// Metropolis decision. Always consumes exactly one uniform draw.
inline bool mh_accept(double beta, double delta_e, Rng& rng) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return delta_e <= 0.0 || u < acceptance_probability(beta, delta_e);
}

/// Mean-ESRI objective over a fixed production model. Shares stay at their
/// empirical values unless `recompute_shares` is set.
class RiskObjective {
public:
    RiskObjective(const ScNetwork& empirical, ProductionModel model, CascadeConfig cascade, unsigned workers,
                  bool recompute_shares = false)
        : model_(std::move(model)),
          shares_(market_shares(empirical)),
          cascade_(cascade),
          workers_(workers),
          recompute_shares_(recompute_shares) {
        cascade_.validate();
    }

    RiskProfile profile(const ScNetwork& net) const {
        if (recompute_shares_) return CascadeEngine(net, model_, market_shares(net, true)).risk_profile(cascade_, workers_);
        return CascadeEngine(net, model_, shares_).risk_profile(cascade_, workers_);
    }

    const ProductionModel& model() const { return model_; }
    const MarketShares& shares() const { return shares_; }
    const CascadeConfig& cascade() const { return cascade_; }

private:
    ProductionModel model_;
    MarketShares shares_;
    CascadeConfig cascade_;
    unsigned workers_;
    bool recompute_shares_;
};

struct MhStepResult {
    bool accepted = false;
    double mean = 0.0;  // mean ESRI of the configuration the chain sits in afterwards
    double delta_e = 0.0;
    std::size_t unconverged = 0;
    SwapProposal proposal;
};

/// One Metropolis-Hastings step. On rejection the network is restored.
/// With `need_mean` unset and beta = 0 the decision cannot depend on the
/// energy, so the objective is not evaluated and `mean` comes back NaN.
inline MhStepResult mh_step(ScNetwork& net, const RiskObjective& objective, double current_mean, double beta,
                            const SwapConstraints& constraints, Rng& rng, bool need_mean = true) {
    MhStepResult r;
    const bool lazy = beta == 0.0 && !need_mean;
    if (!lazy && std::isnan(current_mean)) current_mean = objective.profile(net).mean;
    r.proposal = rewire(net, constraints, rng);
    apply(net, r.proposal);
    if (lazy) {
        mh_accept(beta, 0.0, rng);
        r.accepted = true;
        r.mean = r.delta_e = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    double proposed = current_mean;
    if (!r.proposal.ops.empty()) {
        auto prof = objective.profile(net);
        proposed = prof.mean;
        r.unconverged = prof.unconverged;
    }
    r.delta_e = proposed - current_mean;
    r.accepted = mh_accept(beta, r.delta_e, rng);
    if (r.accepted) {
        r.mean = proposed;
    } else {
        revert(net, r.proposal);
        r.mean = current_mean;
    }
    return r;
}

struct RunConfig {
    std::size_t steps = 1;
    AnnealSchedule schedule;
    SwapConstraints constraints;
    CascadeConfig cascade;
    std::uint64_t seed = 1;
    std::size_t record_every = 1;
    std::size_t snapshot_every = 0;  // 0: no periodic snapshots
    double gamma_ne = 0.5;
    bool recompute_shares = false;
    unsigned workers = 1;

    void validate() const {
        if (steps < 1) throw ConfigError("steps must be at least 1");
        if (record_every < 1) throw ConfigError("record_every must be at least 1");
        schedule.validate();
        constraints.validate();
        cascade.validate();
    }
};

struct TrajectoryRecord {
    std::size_t step = 0;
    double beta = 0.0;
    double mean_esri = 0.0;
    bool accepted = false;
    std::string kind;  // "initial", "full" or "partial"
    std::size_t link_count = 0;
    std::size_t unconverged = 0;
};

/// Optional streaming callbacks; each fires in step order on the chain thread.
struct RunHooks {
    std::function<void(const TrajectoryRecord&)> on_record;
    std::function<void(std::size_t step, const ScNetwork&, const SwapProposal&)> on_accept;
    std::function<void(std::size_t step, const ScNetwork&)> on_snapshot;
};

struct RunResult {
    ScNetwork final_network;
    std::vector<TrajectoryRecord> trajectory;
    RiskProfile initial_profile;
    RiskProfile final_profile;
    NetworkSnapshot best;
    double best_mean = 0.0;
    std::size_t best_step = 0;
    std::size_t accepted = 0;
};

/// Runs cfg.steps Metropolis-Hastings decisions starting from `net`.
/// Deterministic for a given seed, network and model.
inline RunResult run(ScNetwork net, const ProductionModel& model, const RunConfig& cfg, const RunHooks& hooks = {}) {
    cfg.validate();
    RiskObjective objective(net, model, cfg.cascade, cfg.workers, cfg.recompute_shares);
    Rng rng(cfg.seed);
    const Weight total = net.total_weight();

    RunResult res;
    res.initial_profile = objective.profile(net);
    double mean = res.initial_profile.mean;
    res.best = snapshot(net);
    res.best_mean = mean;

    auto record = [&](const TrajectoryRecord& r) {
        res.trajectory.push_back(r);
        if (hooks.on_record) hooks.on_record(r);
    };
    record({0, cfg.schedule.at(0), mean, true, "initial", net.link_count(), res.initial_profile.unconverged});
    if (hooks.on_snapshot && cfg.snapshot_every) hooks.on_snapshot(0, net);

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const double beta = cfg.schedule.at(step);
        const bool recorded = step % cfg.record_every == 0 || step == cfg.steps;
        auto r = mh_step(net, objective, mean, beta, cfg.constraints, rng, recorded || cfg.schedule.at(step + 1) > 0.0);
        mean = r.mean;
        if (r.accepted) {
            ++res.accepted;
            if (hooks.on_accept) hooks.on_accept(step, net, r.proposal);
            if (!std::isnan(mean) && mean < res.best_mean) {
                res.best_mean = mean;
                res.best_step = step;
                res.best = snapshot(net);
            }
        }
        if (recorded)
            record({step, beta, mean, r.accepted, to_string(r.proposal.kind), net.link_count(), r.unconverged});
        if (cfg.snapshot_every && step % cfg.snapshot_every == 0) {
            verify_swap_invariants(net, cfg.constraints, total);
            if (hooks.on_snapshot) hooks.on_snapshot(step, net);
        }
    }
    res.final_profile = objective.profile(net);
    res.final_network = std::move(net);
    return res;
}

// -- profile comparison -----------------------------------------------------

struct ProfileDiff {
    std::vector<double> before;
    std::vector<double> after;
    std::vector<double> delta;            // after - before, per firm
    std::vector<FirmId> rank_before;      // firms by decreasing empirical ESRI
    std::vector<FirmId> rank_after;       // firms by decreasing post-rewiring ESRI
    double mean_delta = 0.0;

    /// Mean ESRI of the k riskiest firms (by empirical rank), before and after.
    std::pair<double, double> top_k_means(std::size_t k) const {
        k = std::min(k, rank_before.size());
        if (k == 0) return {0.0, 0.0};
        double b = 0.0, a = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
            b += before[rank_before[r]];
            a += after[rank_before[r]];
        }
        return {b / static_cast<double>(k), a / static_cast<double>(k)};
    }
};

inline ProfileDiff compare_profiles(const RiskProfile& before, const RiskProfile& after) {
    if (before.esri.size() != after.esri.size()) throw IntegrityError("profiles cover different firm sets");
    ProfileDiff d;
    d.before = before.esri;
    d.after = after.esri;
    d.delta.resize(before.esri.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < d.delta.size(); ++i) {
        d.delta[i] = after.esri[i] - before.esri[i];
        sum += d.delta[i];
    }
    d.mean_delta = d.delta.empty() ? 0.0 : sum / static_cast<double>(d.delta.size());
    d.rank_before = before.ranking();
    d.rank_after = after.ranking();
    return d;
}

}  // namespace scnrisk

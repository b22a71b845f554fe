#pragma once

// Input essentiality and the generalized Leontief production function (GLPF).
//
//   x_i = min( min_{k in ess} Pi_ik / alpha_ik ,
//              beta_bar_i + (1/alpha_i) * sum_{k in ne} Pi_ik ,
//              x0_i )
//
// Labor and capital never bind, so the capacity term x0 stands in for them.

#include "edge_list.hpp"

#include <limits>
#include <map>

namespace scnrisk {

enum class Essentiality { essential, non_essential, irrelevant };

inline char to_char(Essentiality e) {
    switch (e) {
        case Essentiality::essential: return 'E';
        case Essentiality::non_essential: return 'N';
        case Essentiality::irrelevant: return 'I';
    }
    return '?';
}

inline Essentiality parse_essentiality(std::string_view s) {
    if (s == "E") return Essentiality::essential;
    if (s == "N") return Essentiality::non_essential;
    if (s == "I") return Essentiality::irrelevant;
    throw ParseError("essentiality class must be one of E, N, I (got '" + std::string(s) + "')");
}

/// Total map (supplier nace2, buyer nace2) -> Essentiality; unknown pairs
/// fall back to the default.
class EssentialityMatrix {
public:
    explicit EssentialityMatrix(Essentiality fallback = Essentiality::essential) : default_(fallback) {}

    void set(const std::string& supplier_nace2, const std::string& buyer_nace2, Essentiality e) {
        table_[{supplier_nace2, buyer_nace2}] = e;
    }

    Essentiality lookup(const std::string& supplier_nace2, const std::string& buyer_nace2) const {
        auto it = table_.find({supplier_nace2, buyer_nace2});
        return it == table_.end() ? default_ : it->second;
    }

    Essentiality default_value() const { return default_; }
    const auto& entries() const { return table_; }

    static EssentialityMatrix load(const std::filesystem::path& path, Essentiality fallback) {
        auto lines = csv::read_lines(path);
        if (lines.empty()) throw ParseError("empty essentiality file '" + path.string() + "'", 1);
        auto header = csv::split(lines.front().second);
        if (header.size() != 3 || header[0] != "supplier_nace2" || header[1] != "buyer_nace2" || header[2] != "class")
            throw ParseError("expected header 'supplier_nace2,buyer_nace2,class'", lines.front().first);
        EssentialityMatrix m(fallback);
        for (std::size_t r = 1; r < lines.size(); ++r) {
            auto f = csv::split(lines[r].second);
            if (f.size() != 3) throw ParseError("expected 3 fields", lines[r].first);
            try {
                m.set(std::string(f[0]), std::string(f[1]), parse_essentiality(f[2]));
            } catch (const ParseError& e) {
                throw ParseError(e.what(), lines[r].first);
            }
        }
        return m;
    }

    void write(std::ostream& out) const {
        out << "supplier_nace2,buyer_nace2,class\n";
        for (const auto& [key, e] : table_) out << key.first << ',' << key.second << ',' << to_char(e) << '\n';
    }

private:
    std::map<std::pair<std::string, std::string>, Essentiality> table_;
    Essentiality default_;
};

struct InputClasses {
    std::vector<ProductId> essential;
    std::vector<ProductId> non_essential;
    std::vector<ProductId> irrelevant;
};

/// Splits the firm's empirical input products by essentiality. Products are
/// nace3 groups; the lookup happens at nace2.
inline InputClasses classify_inputs(const ScNetwork& net, const EssentialityMatrix& ess, FirmId firm) {
    InputClasses out;
    const auto buyer = net.firm(firm).sector.nace2();
    for (const auto& [product, amount] : net.firm(firm).in_strength0) {
        switch (ess.lookup(net.product_code(product).substr(0, 2), buyer)) {
            case Essentiality::essential: out.essential.push_back(product); break;
            case Essentiality::non_essential: out.non_essential.push_back(product); break;
            case Essentiality::irrelevant: out.irrelevant.push_back(product); break;
        }
    }
    return out;
}

struct EssentialInput {
    ProductId product = 0;
    double alpha = 0.0;  // input units per output unit
    double pi0 = 0.0;    // calibrated input amount
};

struct NonEssentialInput {
    ProductId product = 0;
    double pi0 = 0.0;
};

struct GlpfParams {
    double x0 = 1.0;
    double beta_bar = 1.0;
    /// Linear-branch coefficient; infinite when the branch is absent.
    double alpha_ne = std::numeric_limits<double>::infinity();
    double ne_pi0 = 0.0;
    double gamma_ne = 0.0;
    std::vector<EssentialInput> essential;
    std::vector<NonEssentialInput> non_essential;
    std::vector<ProductId> irrelevant;
    /// x0 was set to the sentinel 1 because the firm sells nothing.
    bool zero_output = false;

    bool has_linear_branch() const { return !non_essential.empty() && gamma_ne > 0.0; }
};

/// Output relative to x0, from the smallest essential fill ratio
/// (delivered / calibrated) and the pooled non-essential fill ratio.
inline double relative_output(const GlpfParams& p, double min_essential_ratio, double ne_ratio) {
    double h = std::min(1.0, min_essential_ratio);
    if (p.has_linear_branch()) h = std::min(h, (1.0 - p.gamma_ne) + p.gamma_ne * ne_ratio);
    return std::clamp(h, 0.0, 1.0);
}

/// GLPF output for explicit delivered amounts. Products absent from
/// `delivered` count as zero; irrelevant products are ignored.
inline double evaluate_glpf(const GlpfParams& p, const std::map<ProductId, double>& delivered) {
    auto amount = [&](ProductId k) {
        auto it = delivered.find(k);
        return it == delivered.end() ? 0.0 : it->second;
    };
    double out = p.x0;
    for (const auto& in : p.essential) out = std::min(out, amount(in.product) / in.alpha);
    if (p.has_linear_branch()) {
        double ne = 0.0;
        for (const auto& in : p.non_essential) ne += amount(in.product);
        out = std::min(out, p.beta_bar + ne / p.alpha_ne);
    }
    return std::clamp(out, 0.0, p.x0);
}

struct ProductionModel {
    double gamma_ne = 0.5;
    std::vector<GlpfParams> firms;
    std::size_t zero_output_firms = 0;
};

/// Calibrates every firm's GLPF so that the observed inputs yield exactly
/// the observed output (out-strength).
inline ProductionModel calibrate(const ScNetwork& net, const EssentialityMatrix& ess, double gamma_ne = 0.5) {
    if (!(gamma_ne >= 0.0 && gamma_ne <= 1.0)) throw ConfigError("gamma_ne must lie in [0,1]");
    ProductionModel model;
    model.gamma_ne = gamma_ne;
    model.firms.reserve(net.firm_count());
    for (FirmId f = 0; f < net.firm_count(); ++f) {
        GlpfParams p;
        p.gamma_ne = gamma_ne;
        double s_out = net.out_strength0(f).units();
        p.zero_output = s_out <= 0.0;
        p.x0 = p.zero_output ? 1.0 : s_out;
        if (p.zero_output && !net.firm(f).in_strength0.empty()) ++model.zero_output_firms;
        auto classes = classify_inputs(net, ess, f);
        for (ProductId k : classes.essential) {
            double pi = net.in_strength0(f, k).units();
            p.essential.push_back({k, pi / p.x0, pi});
        }
        for (ProductId k : classes.non_essential) {
            double pi = net.in_strength0(f, k).units();
            p.non_essential.push_back({k, pi});
            p.ne_pi0 += pi;
        }
        p.irrelevant = std::move(classes.irrelevant);
        if (p.has_linear_branch()) {
            p.beta_bar = p.x0 * (1.0 - gamma_ne);
            p.alpha_ne = p.ne_pi0 / (gamma_ne * p.x0);
        } else {
            p.beta_bar = p.x0;
        }
        model.firms.push_back(std::move(p));
    }
    return model;
}

}  // namespace scnrisk

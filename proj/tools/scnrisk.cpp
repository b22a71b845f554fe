// scnrisk: command-line front end.
//
//   ingest    raw edge list -> cleaned edge list
//   generate  synthetic network + essentiality matrix + provenance
//   extract   seed-sector or community subnetwork
//   esri      risk profile of a network
//   optimize  annealing / Metropolis-Hastings rewiring run
//   report    summary tables and SVG plots for a run directory
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 runtime error.

#include "scnrisk/scnrisk.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace scnrisk;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// -- small utilities ----------------------------------------------------------

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    return out;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

// -- layered settings: defaults < config file < flags ------------------------

class Settings {
public:
    explicit Settings(std::map<std::string, std::string> defaults) : values_(std::move(defaults)) {}

    /// key = value lines; '#' starts a comment. Keys use underscores.
    void merge_file(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            auto t = std::string(csv::trim(line));
            if (t.empty()) continue;
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(n) + ": expected 'key = value'");
            set(std::string(csv::trim(std::string_view(t).substr(0, eq))), std::string(csv::trim(std::string_view(t).substr(eq + 1))));
        }
    }

    void set(const std::string& key, const std::string& value) {
        if (!values_.count(key)) throw ConfigError("unknown setting '" + key + "'");
        values_[key] = value;
    }

    const std::string& str(const std::string& key) const { return values_.at(key); }

    double num(const std::string& key) const {
        const auto& v = str(key);
        std::size_t used = 0;
        double d = 0;
        try {
            d = std::stod(v, &used);
        } catch (...) {
            used = 0;
        }
        if (v.empty() || used != v.size() || !std::isfinite(d)) throw ConfigError("setting '" + key + "' is not a number: '" + v + "'");
        return d;
    }

    std::uint64_t count(const std::string& key) const {
        const auto& v = str(key);
        if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("setting '" + key + "' must be a non-negative integer: '" + v + "'");
        try {
            return std::stoull(v);
        } catch (...) {
            throw ConfigError("setting '" + key + "' is out of range");
        }
    }

    bool flag(const std::string& key) const {
        const auto& v = str(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("setting '" + key + "' must be true or false");
    }

    json to_json() const { return json(values_); }
    const auto& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Registers one string flag per setting; flags given on the command line
/// are applied over the config file after parsing.
struct FlagBinder {
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> opts;
    std::map<std::string, bool> switches;
    std::map<std::string, CLI::Option*> switch_opts;
    std::string config;

    void option(CLI::App* app, const std::string& key, const std::string& help) {
        std::string name = "--" + key;
        std::replace(name.begin(), name.end(), '_', '-');
        opts[key] = app->add_option(name, raw[key], help);
    }
    void toggle(CLI::App* app, const std::string& key, const std::string& name, bool value, const std::string& help) {
        switches[name] = value;
        switch_opts[key + "|" + name] = app->add_flag("--" + name, help);
    }
    void config_option(CLI::App* app) { app->add_option("--config", config, "key = value settings file; flags win"); }

    void apply(Settings& s) const {
        if (!config.empty()) s.merge_file(config);
        for (const auto& [key, opt] : opts)
            if (opt->count()) s.set(key, raw.at(key));
        for (const auto& [tag, opt] : switch_opts) {
            if (!opt->count()) continue;
            auto bar = tag.find('|');
            s.set(tag.substr(0, bar), switches.at(tag.substr(bar + 1)) ? "true" : "false");
        }
    }
};

// -- shared loading -------------------------------------------------------------

const std::map<std::string, std::string> kModelDefaults = {
    {"network", ""},        {"essentiality", ""}, {"default_essential", "false"}, {"weighted", "true"},
    {"min_weight", "3000"}, {"gamma_ne", "0.5"},  {"tol", "1e-6"},                {"t_max", "1000"},
};

void bind_model_flags(CLI::App* app, FlagBinder& b) {
    b.option(app, "network", "edge-list CSV");
    b.option(app, "essentiality", "essentiality CSV (supplier_nace2,buyer_nace2,class)");
    b.toggle(app, "default_essential", "default-essential", true, "treat every input as essential when no matrix is given");
    b.toggle(app, "weighted", "unweighted", false, "ignore weights (unit links)");
    b.option(app, "min_weight", "drop rows below this weight (default 3000)");
    b.option(app, "gamma_ne", "non-essential substitution share (default 0.5)");
    b.option(app, "tol", "cascade convergence tolerance (default 1e-6)");
    b.option(app, "t_max", "cascade round cap (default 1000)");
}

WeightMode mode_of(const Settings& s) { return s.flag("weighted") ? WeightMode::weighted : WeightMode::unweighted; }

ScNetwork load_network(const Settings& s) {
    if (s.str("network").empty()) throw ConfigError("--network is required");
    LoadOptions o;
    o.min_weight = s.num("min_weight");
    return load_edge_list(s.str("network"), mode_of(s), o);
}

EssentialityMatrix load_matrix(const Settings& s) {
    const auto& p = s.str("essentiality");
    if (!p.empty() && fs::exists(p)) return EssentialityMatrix::load(p, Essentiality::essential);
    if (s.flag("default_essential")) {
        if (!p.empty()) std::cerr << "warning: essentiality file '" << p << "' not found, every input treated as essential\n";
        return EssentialityMatrix(Essentiality::essential);
    }
    if (p.empty()) throw ConfigError("no essentiality matrix: pass --essentiality or --default-essential");
    throw ParseError("cannot open essentiality file '" + p + "'");
}

CascadeConfig cascade_of(const Settings& s) {
    CascadeConfig c;
    c.tol = s.num("tol");
    c.t_max = static_cast<int>(std::min<std::uint64_t>(s.count("t_max"), 1u << 30));
    c.validate();
    return c;
}

json input_digests(const Settings& s) {
    json j;
    j["network"] = {{"path", fs::absolute(s.str("network")).string()}, {"sha256", sha256_file(s.str("network"))}};
    const auto& p = s.str("essentiality");
    if (!p.empty() && fs::exists(p))
        j["essentiality"] = {{"path", fs::absolute(p).string()}, {"sha256", sha256_file(p)}};
    else
        j["essentiality"] = {{"path", ""}, {"sha256", "default-essential"}};
    return j;
}

void write_profile(const fs::path& p, const ScNetwork& net, const RiskProfile& prof) {
    auto out = open_out(p);
    out << "firm,sector,esri,rank\n";
    std::vector<std::size_t> rank(prof.esri.size());
    auto order = prof.ranking();
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
    for (FirmId f = 0; f < net.firm_count(); ++f)
        out << net.firm(f).name << ',' << net.firm(f).sector.str() << ',' << fmt(prof.esri[f]) << ',' << rank[f] << '\n';
}

struct ProfileRow {
    std::string firm;
    double esri = 0;
};

std::vector<ProfileRow> read_profile(const fs::path& p) {
    auto lines = csv::read_lines(p);
    std::vector<ProfileRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = csv::split(lines[i].second);
        if (f.size() != 4) throw ParseError("bad profile row in '" + p.string() + "'", lines[i].first);
        rows.push_back({std::string(f[0]), std::stod(std::string(f[2]))});
    }
    return rows;
}

// -- ingest ------------------------------------------------------------------

int cmd_ingest(const std::string& input, const std::string& output, bool unweighted, double min_weight) {
    LoadOptions o;
    o.min_weight = min_weight;
    auto net = load_edge_list(input, unweighted ? WeightMode::unweighted : WeightMode::weighted, o);
    write_edge_list(net, fs::path(output));
    std::cout << "firms " << net.firm_count() << "\nlinks " << net.link_count() << "\n";
    return 0;
}

// -- generate -----------------------------------------------------------------

const std::map<std::string, std::string> kSynthDefaults = {
    {"n_firms", "200"},          {"n_sectors", "20"},         {"mean_degree", "2"},
    {"degree_exponent", "2.2"},  {"weight_exponent", "2.5"},  {"reciprocity", "0.05"},
    {"essentiality_density", "0.3"}, {"buyer_sectors", "3"},  {"weighted", "true"},
    {"seed", "1"},
};

int cmd_generate(const Settings& s, const fs::path& out_dir) {
    SynthSpec spec;
    spec.n_firms = s.count("n_firms");
    spec.n_sectors = s.count("n_sectors");
    spec.mean_degree = s.num("mean_degree");
    spec.degree_exponent = s.num("degree_exponent");
    spec.weight_exponent = s.num("weight_exponent");
    spec.reciprocity_target = s.num("reciprocity");
    spec.essentiality_density = s.num("essentiality_density");
    spec.buyer_sectors = s.count("buyer_sectors");
    spec.weighted = s.flag("weighted");
    spec.seed = s.count("seed");
    auto data = generate_synthetic(spec);

    fs::create_directories(out_dir);
    write_edge_list(data.network, out_dir / "network.csv");
    {
        auto out = open_out(out_dir / "essentiality.csv");
        data.essentiality.write(out);
    }
    json prov;
    prov["tool"] = "scnrisk";
    prov["version"] = kToolVersion;
    prov["command"] = "generate";
    prov["spec"] = s.to_json();
    prov["seed"] = spec.seed;
    prov["firms"] = data.network.firm_count();
    prov["links"] = data.network.link_count();
    prov["outputs"] = {{"network.csv", sha256_file(out_dir / "network.csv")},
                       {"essentiality.csv", sha256_file(out_dir / "essentiality.csv")}};
    write_json(out_dir / "provenance.json", prov);
    std::cout << "firms " << data.network.firm_count() << "\nlinks " << data.network.link_count() << "\n";
    return 0;
}

// -- extract ------------------------------------------------------------------

int cmd_extract_seed(const Settings& s, const SeedSectorSpec& spec, const std::string& out) {
    auto net = load_network(s);
    auto sub = extract_seed_sector(net, spec);
    write_edge_list(sub, fs::path(out));
    std::cout << "firms " << sub.firm_count() << "\nlinks " << sub.link_count() << "\n";
    return 0;
}

int cmd_extract_community(const Settings& s, const CommunitySpec& spec, const std::string& out) {
    auto net = load_network(s);
    auto sub = extract_community(net, spec);
    write_edge_list(sub, fs::path(out));
    std::cout << "firms " << sub.firm_count() << "\nlinks " << sub.link_count() << "\n";
    return 0;
}

// -- esri ---------------------------------------------------------------------

int cmd_esri(const Settings& s, const fs::path& out_dir, unsigned workers) {
    auto net = load_network(s);
    auto matrix = load_matrix(s);
    auto cascade = cascade_of(s);
    auto model = calibrate(net, matrix, s.num("gamma_ne"));
    auto t0 = std::chrono::steady_clock::now();
    auto prof = risk_profile(net, model, market_shares(net), cascade, workers);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(out_dir);
    write_profile(out_dir / "profile.csv", net, prof);
    json summary;
    summary["mean_esri"] = prof.mean;
    summary["firms"] = net.firm_count();
    summary["links"] = net.link_count();
    summary["unconverged"] = prof.unconverged;
    summary["zero_output_firms"] = model.zero_output_firms;
    summary["config"] = s.to_json();
    summary["inputs"] = input_digests(s);
    summary["seconds"] = secs;
    write_json(out_dir / "summary.json", summary);
    std::cout << "mean_esri " << fmt(prof.mean) << "\n";
    if (prof.unconverged) std::cerr << "warning: " << prof.unconverged << " cascades hit t_max\n";
    return 0;
}

// -- optimize -----------------------------------------------------------------

std::map<std::string, std::string> optimize_defaults() {
    auto d = kModelDefaults;
    d.insert({{"beta", "0"},
              {"steps", "1000"},
              {"seed", "1"},
              {"record_every", "1"},
              {"snapshot_every", "0"},
              {"epsilon", "3000"},
              {"band", "0.2"},
              {"recompute_shares", "false"}});
    return d;
}

json beta_curve(const AnnealSchedule& s, std::size_t steps) {
    json rows = json::array();
    for (int q = 0; q <= 10; ++q) {
        std::size_t step = steps * static_cast<std::size_t>(q) / 10;
        rows.push_back({{"step", step}, {"beta", s.at(step)}});
    }
    return rows;
}

int cmd_optimize(const Settings& s, const fs::path& out_dir, unsigned workers, const json* replay_inputs) {
    auto start = std::chrono::steady_clock::now();
    if (replay_inputs) {
        for (const char* key : {"network", "essentiality"}) {
            const auto& rec = replay_inputs->at(key);
            if (rec.at("path").get<std::string>().empty()) continue;
            if (sha256_file(rec.at("path").get<std::string>()) != rec.at("sha256").get<std::string>())
                throw IntegrityError(std::string("input '") + key + "' changed since the recorded run");
        }
    }
    auto net = load_network(s);
    auto matrix = load_matrix(s);

    RunConfig cfg;
    cfg.steps = s.count("steps");
    cfg.schedule = AnnealSchedule::parse(s.str("beta"));
    cfg.seed = s.count("seed");
    cfg.record_every = s.count("record_every");
    cfg.snapshot_every = s.count("snapshot_every");
    cfg.constraints.epsilon = s.num("epsilon");
    cfg.constraints.out_strength_band = s.num("band");
    cfg.cascade = cascade_of(s);
    cfg.gamma_ne = s.num("gamma_ne");
    cfg.recompute_shares = s.flag("recompute_shares");
    cfg.workers = workers;
    cfg.validate();
    auto model = calibrate(net, matrix, cfg.gamma_ne);

    fs::create_directories(out_dir / "snapshots");
    write_edge_list(net, out_dir / "initial.csv");

    auto traj = open_out(out_dir / "trajectory.csv");
    traj << "step,beta,mean_esri,accepted,kind,link_count\n";
    auto moves = open_out(out_dir / "moves.jsonl");
    json snapshots = json::array();

    RunHooks hooks;
    hooks.on_record = [&](const TrajectoryRecord& r) {
        traj << r.step << ',' << fmt(r.beta) << ',' << fmt(r.mean_esri) << ',' << (r.accepted ? 1 : 0) << ',' << r.kind
             << ',' << r.link_count << '\n';
    };
    hooks.on_accept = [&](std::size_t step, const ScNetwork& n, const SwapProposal& p) {
        auto j = to_json(n, p);
        j["step"] = step;
        moves << j.dump() << '\n';
    };
    hooks.on_snapshot = [&](std::size_t step, const ScNetwork& n) {
        char name[48];
        std::snprintf(name, sizeof name, "step_%09zu.csv", step);
        write_edge_list(n, out_dir / "snapshots" / name);
        snapshots.push_back({{"step", step}, {"file", std::string("snapshots/") + name}});
    };

    auto res = run(net, model, cfg, hooks);
    traj.close();
    moves.close();

    write_edge_list(res.final_network, out_dir / "final.csv");
    write_edge_list(restore(res.best), out_dir / "best.csv");
    write_profile(out_dir / "profile_initial.csv", net, res.initial_profile);
    write_profile(out_dir / "profile_final.csv", res.final_network, res.final_profile);

    const double rel = res.initial_profile.mean > 0 ? res.final_profile.mean / res.initial_profile.mean - 1.0 : 0.0;
    json m;
    m["tool"] = "scnrisk";
    m["version"] = kToolVersion;
    m["command"] = "optimize";
    m["config"] = s.to_json();
    m["schedule"] = cfg.schedule.to_string();
    m["beta_curve"] = beta_curve(cfg.schedule, cfg.steps);
    m["seed"] = cfg.seed;
    m["inputs"] = replay_inputs ? *replay_inputs : input_digests(s);
    m["snapshots"] = snapshots;
    m["results"] = {{"initial_mean_esri", res.initial_profile.mean},
                    {"final_mean_esri", res.final_profile.mean},
                    {"relative_change", rel},
                    {"best_mean_esri", res.best_mean},
                    {"best_step", res.best_step},
                    {"accepted", res.accepted},
                    {"acceptance_rate", static_cast<double>(res.accepted) / static_cast<double>(cfg.steps)},
                    {"initial_links", net.link_count()},
                    {"final_links", res.final_network.link_count()},
                    {"unconverged_final", res.final_profile.unconverged}};
    m["outputs"] = {{"trajectory.csv", sha256_file(out_dir / "trajectory.csv")},
                    {"moves.jsonl", sha256_file(out_dir / "moves.jsonl")},
                    {"final.csv", sha256_file(out_dir / "final.csv")}};
    m["timings"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
                    {"workers", workers}};
    write_json(out_dir / "manifest.json", m);

    std::cout << "initial_mean_esri " << fmt(res.initial_profile.mean) << "\nfinal_mean_esri "
              << fmt(res.final_profile.mean) << "\nrelative_change " << fmt(rel) << "\nacceptance_rate "
              << fmt(static_cast<double>(res.accepted) / static_cast<double>(cfg.steps)) << "\n";
    return 0;
}

// -- report -------------------------------------------------------------------

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string colour = "#1f77b4";
    bool points = false;
};

/// Minimal SVG line/scatter chart.
std::string svg_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series, bool log_x = false) {
    const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto tx = [&](double x) { return log_x ? std::log10(std::max(x, 1e-12)) : x; };
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\">" << ylabel << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        double yv = y0 + (y1 - y0) * k / 4, xv = x0 + (x1 - x0) * k / 4;
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
        double label = log_x ? std::pow(10.0, xv) : xv;
        os << "<text x=\"" << L + (xv - x0) / (x1 - x0) * (W - L - R) << "\" y=\"" << H - B + 16
           << "\" text-anchor=\"middle\">" << label << "</text>\n";
    }
    double legend_y = T + 4;
    for (const auto& s : series) {
        if (s.points) {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2\" fill=\"" << s.colour
                   << "\" fill-opacity=\"0.6\"/>\n";
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            os << "\"/>\n";
        }
        if (!s.label.empty()) {
            os << "<rect x=\"" << W - R - 150 << "\" y=\"" << legend_y << "\" width=\"10\" height=\"10\" fill=\"" << s.colour << "\"/>\n";
            os << "<text x=\"" << W - R - 134 << "\" y=\"" << legend_y + 9 << "\">" << s.label << "</text>\n";
            legend_y += 16;
        }
    }
    os << "</svg>\n";
    return os.str();
}

int cmd_report(const fs::path& run_dir, const std::string& null_run, fs::path out_dir) {
    const std::vector<std::string> required = {"manifest.json", "trajectory.csv", "initial.csv", "final.csv",
                                               "profile_initial.csv", "profile_final.csv"};
    std::vector<std::string> missing;
    for (const auto& f : required)
        if (!fs::exists(run_dir / f)) missing.push_back(f);
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw IntegrityError("run directory '" + run_dir.string() + "' is missing: " + list);
    }
    if (out_dir.empty()) out_dir = run_dir / "report";
    fs::create_directories(out_dir);

    json manifest;
    {
        std::ifstream in(run_dir / "manifest.json");
        try {
            manifest = json::parse(in);
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad manifest: ") + e.what());
        }
    }
    const auto& cfg = manifest.at("config");
    const WeightMode mode = cfg.at("weighted").get<std::string>() == "false" ? WeightMode::unweighted : WeightMode::weighted;
    LoadOptions raw;
    raw.min_weight = 0.0;

    // Table-1 style summary, one row per artifact
    struct Artifact {
        std::string name;
        fs::path file;
        double mean;
    };
    const auto& results = manifest.at("results");
    std::vector<Artifact> artifacts = {{"empirical", run_dir / "initial.csv", results.at("initial_mean_esri").get<double>()},
                                       {"final", run_dir / "final.csv", results.at("final_mean_esri").get<double>()}};
    if (fs::exists(run_dir / "best.csv")) artifacts.push_back({"best", run_dir / "best.csv", results.at("best_mean_esri").get<double>()});
    if (!null_run.empty()) {
        json nm;
        std::ifstream in(fs::path(null_run) / "manifest.json");
        if (!in || !fs::exists(fs::path(null_run) / "final.csv"))
            throw IntegrityError("null-model run '" + null_run + "' lacks manifest.json or final.csv");
        nm = json::parse(in);
        artifacts.push_back({"configuration_model", fs::path(null_run) / "final.csv", nm.at("results").at("final_mean_esri").get<double>()});
    }
    const double base = artifacts.front().mean;
    json table = json::array();
    {
        auto out = open_out(out_dir / "table1.csv");
        bool header = false;
        for (const auto& a : artifacts) {
            auto cols = metric_columns(compute_metrics(load_edge_list(a.file, mode, raw)));
            cols.emplace_back("mean_esri", a.mean);
            cols.emplace_back("delta_mean_esri_pct", base > 0 ? 100.0 * (a.mean / base - 1.0) : 0.0);
            if (!header) {
                out << "artifact";
                for (const auto& [k, v] : cols) out << ',' << k;
                out << '\n';
                header = true;
            }
            out << a.name;
            json row;
            row["artifact"] = a.name;
            for (const auto& [k, v] : cols) {
                out << ',' << fmt(v);
                row[k] = v;
            }
            out << '\n';
            table.push_back(row);
        }
    }
    write_json(out_dir / "table1.json", table);

    // metrics over stored snapshots
    std::vector<SnapshotRef> snaps;
    if (manifest.contains("snapshots"))
        for (const auto& s : manifest.at("snapshots"))
            snaps.push_back({s.at("step").get<std::size_t>(), run_dir / s.at("file").get<std::string>()});
    {
        auto out = open_out(out_dir / "metrics_trajectory.csv");
        out << "step,metric,value\n";
        for (const auto& [step, name, value] : metrics_trajectory(snaps, mode)) out << step << ',' << name << ',' << fmt(value) << '\n';
    }

    // trajectory plot
    Series traj{"mean ESRI", {}, {}};
    {
        auto lines = csv::read_lines(run_dir / "trajectory.csv");
        for (std::size_t i = 1; i < lines.size(); ++i) {
            auto f = csv::split(lines[i].second);
            if (f.size() != 6) throw ParseError("bad trajectory row", lines[i].first);
            traj.x.push_back(std::stod(std::string(f[0])));
            traj.y.push_back(std::stod(std::string(f[2])));
        }
    }
    open_out(out_dir / "trajectory.svg") << svg_chart("Mean ESRI during rewiring", "step", "mean ESRI", {traj});

    // before/after profiles
    auto before = read_profile(run_dir / "profile_initial.csv");
    auto after = read_profile(run_dir / "profile_final.csv");
    if (before.size() != after.size()) throw IntegrityError("initial and final profiles cover different firms");
    RiskProfile pb, pa;
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (before[i].firm != after[i].firm) throw IntegrityError("profile firm order differs");
        pb.esri.push_back(before[i].esri);
        pa.esri.push_back(after[i].esri);
    }
    auto diff = compare_profiles(pb, pa);
    {
        auto out = open_out(out_dir / "profile_diff.csv");
        out << "firm,esri_before,esri_after,delta,rank_before,rank_after\n";
        std::vector<std::size_t> rb(diff.before.size()), ra(diff.before.size());
        for (std::size_t r = 0; r < diff.rank_before.size(); ++r) {
            rb[diff.rank_before[r]] = r + 1;
            ra[diff.rank_after[r]] = r + 1;
        }
        for (std::size_t i = 0; i < diff.before.size(); ++i)
            out << before[i].firm << ',' << fmt(diff.before[i]) << ',' << fmt(diff.after[i]) << ',' << fmt(diff.delta[i]) << ','
                << rb[i] << ',' << ra[i] << '\n';
    }
    Series by_emp_before{"before (empirical order)", {}, {}, "#1f77b4"}, by_emp_after{"after (empirical order)", {}, {}, "#d62728"};
    Series own_before{"before (own order)", {}, {}, "#1f77b4"}, own_after{"after (own order)", {}, {}, "#d62728"};
    for (std::size_t r = 0; r < diff.rank_before.size(); ++r) {
        by_emp_before.x.push_back(static_cast<double>(r + 1));
        by_emp_before.y.push_back(diff.before[diff.rank_before[r]]);
        by_emp_after.x.push_back(static_cast<double>(r + 1));
        by_emp_after.y.push_back(diff.after[diff.rank_before[r]]);
        own_before.x.push_back(static_cast<double>(r + 1));
        own_before.y.push_back(diff.before[diff.rank_before[r]]);
        own_after.x.push_back(static_cast<double>(r + 1));
        own_after.y.push_back(diff.after[diff.rank_after[r]]);
    }
    by_emp_after.points = true;
    open_out(out_dir / "rank_profile.svg") << svg_chart("ESRI by empirical rank", "rank", "ESRI", {by_emp_before, by_emp_after}, true);
    open_out(out_dir / "rank_profile_own.svg") << svg_chart("ESRI by own rank", "rank", "ESRI", {own_before, own_after}, true);

    // degree vs ESRI
    auto initial = load_edge_list(run_dir / "initial.csv", mode, raw);
    Series scatter{"", {}, {}, "#2ca02c", true};
    for (std::size_t i = 0; i < before.size(); ++i) {
        auto f = initial.find_firm(before[i].firm);
        if (!f) continue;
        scatter.x.push_back(static_cast<double>(initial.in_links(*f).size() + initial.out_links(*f).size()));
        scatter.y.push_back(before[i].esri);
    }
    open_out(out_dir / "degree_esri.svg") << svg_chart("Total degree vs ESRI", "total degree", "ESRI", {scatter}, true);

    auto [tb, ta] = diff.top_k_means(10);
    json summary = {{"mean_delta_profiles", diff.mean_delta},
                    {"mean_delta_trajectory", traj.y.empty() ? 0.0 : traj.y.back() - traj.y.front()},
                    {"top10_mean_before", tb},
                    {"top10_mean_after", ta}};
    write_json(out_dir / "summary.json", summary);
    std::cout << "mean_delta " << fmt(diff.mean_delta) << "\ntop10_before " << fmt(tb) << "\ntop10_after " << fmt(ta) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Economic systemic risk in supply-chain networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "clean a raw edge list (weight filter, self-loops, merging)");
    std::string in_path, out_path;
    bool unweighted = false;
    double min_weight = 3000.0;
    ingest->add_option("--input", in_path, "raw edge-list CSV")->required();
    ingest->add_option("--out", out_path, "cleaned edge-list CSV")->required();
    ingest->add_flag("--unweighted", unweighted, "ignore weights");
    ingest->add_option("--min-weight", min_weight, "drop rows below this weight");

    // generate
    auto* generate = app.add_subcommand("generate", "synthetic network, essentiality matrix and provenance");
    FlagBinder gen_flags;
    std::string gen_out;
    gen_flags.config_option(generate);
    for (const auto& [key, v] : kSynthDefaults)
        if (key != "weighted") gen_flags.option(generate, key, "default " + v);
    gen_flags.toggle(generate, "weighted", "unweighted", false, "unit weights");
    generate->add_option("--out", gen_out, "output directory")->required();

    // extract
    auto* extract = app.add_subcommand("extract", "subnetwork extraction");
    extract->require_subcommand(1);
    auto* seed = extract->add_subcommand("seed", "seed sector plus its overrepresented Tier-1 groups");
    auto* community = extract->add_subcommand("community", "CNM community closest to a target size");
    FlagBinder seed_flags, comm_flags;
    SeedSectorSpec seed_spec;
    CommunitySpec comm_spec;
    std::string seed_out, comm_out;
    for (auto [sub, flags] : {std::pair{seed, &seed_flags}, std::pair{community, &comm_flags}}) {
        flags->option(sub, "network", "edge-list CSV");
        flags->toggle(sub, "weighted", "unweighted", false, "ignore weights");
        flags->option(sub, "min_weight", "drop rows below this weight");
    }
    seed->add_option("--seed-code", seed_spec.seed_code, "sector code prefix of the seed firms")->required();
    seed->add_option("--supplier-groups", seed_spec.n_supplier_groups, "default 16");
    seed->add_option("--customer-groups", seed_spec.n_customer_groups, "default 8");
    seed->add_option("--min-group-size", seed_spec.min_group_size, "default 5");
    seed->add_option("--out", seed_out)->required();
    community->add_option("--section", comm_spec.section_filter, "NACE section letter or division list (default C)");
    community->add_option("--target-size", comm_spec.target_size, "default 1000");
    community->add_option("--out", comm_out)->required();

    // esri
    auto* esri_cmd = app.add_subcommand("esri", "risk profile of a network");
    FlagBinder esri_flags;
    std::string esri_out;
    std::string esri_workers;
    esri_flags.config_option(esri_cmd);
    bind_model_flags(esri_cmd, esri_flags);
    esri_cmd->add_option("--out", esri_out, "output directory")->required();
    esri_cmd->add_option("--workers", esri_workers, "cascade threads (default $SCNRISK_WORKERS or all cores)");

    // optimize
    auto* optimize = app.add_subcommand("optimize", "Metropolis-Hastings / annealing rewiring");
    FlagBinder opt_flags;
    std::string opt_out, opt_workers, replay;
    opt_flags.config_option(optimize);
    bind_model_flags(optimize, opt_flags);
    opt_flags.option(optimize, "beta", "0, fixed:<b> or linear:<b_max>:<steps>");
    opt_flags.option(optimize, "steps", "Metropolis-Hastings decisions (default 1000)");
    opt_flags.option(optimize, "seed", "chain seed (default 1)");
    opt_flags.option(optimize, "record_every", "trajectory stride (default 1)");
    opt_flags.option(optimize, "snapshot_every", "snapshot stride, 0 = none (default 0)");
    opt_flags.option(optimize, "epsilon", "full-swap weight tolerance (default 3000)");
    opt_flags.option(optimize, "band", "out-strength band (default 0.2)");
    opt_flags.toggle(optimize, "recompute_shares", "recompute-shares", true, "recompute market shares after each swap");
    optimize->add_option("--out", opt_out, "run directory")->required();
    optimize->add_option("--workers", opt_workers, "cascade threads (default $SCNRISK_WORKERS or all cores)");
    optimize->add_option("--replay", replay, "rerun the configuration recorded in a manifest");

    // report
    auto* report = app.add_subcommand("report", "tables and plots for a run directory");
    std::string run_dir, null_run, report_out;
    report->add_option("--run", run_dir, "run directory written by optimize")->required();
    report->add_option("--null-run", null_run, "beta = 0 run used as the configuration-model row");
    report->add_option("--out", report_out, "output directory (default <run>/report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto workers_from = [](const std::string& flag) -> unsigned {
        if (flag.empty()) return default_workers();
        if (flag.find_first_not_of("0123456789") != std::string::npos || std::stoul(flag) < 1)
            throw ConfigError("--workers must be a positive integer");
        return static_cast<unsigned>(std::stoul(flag));
    };

    try {
        if (*ingest) return cmd_ingest(in_path, out_path, unweighted, min_weight);
        if (*generate) {
            Settings s(kSynthDefaults);
            gen_flags.apply(s);
            return cmd_generate(s, gen_out);
        }
        if (*seed) {
            Settings s(kModelDefaults);
            seed_flags.apply(s);
            return cmd_extract_seed(s, seed_spec, seed_out);
        }
        if (*community) {
            Settings s(kModelDefaults);
            comm_flags.apply(s);
            return cmd_extract_community(s, comm_spec, comm_out);
        }
        if (*esri_cmd) {
            Settings s(kModelDefaults);
            esri_flags.apply(s);
            return cmd_esri(s, esri_out, workers_from(esri_workers));
        }
        if (*optimize) {
            Settings s(optimize_defaults());
            if (!replay.empty()) {
                std::ifstream in(replay);
                if (!in) throw ConfigError("cannot open manifest '" + replay + "'");
                json m;
                try {
                    m = json::parse(in);
                } catch (const json::exception& e) {
                    throw ParseError(std::string("bad manifest: ") + e.what());
                }
                for (const auto& [k, v] : m.at("config").items()) s.set(k, v.get<std::string>());
                const json inputs = m.at("inputs");
                return cmd_optimize(s, opt_out, workers_from(opt_workers), &inputs);
            }
            opt_flags.apply(s);
            // absolute input paths keep the manifest replayable from any directory
            for (const char* key : {"network", "essentiality"})
                if (!s.str(key).empty()) s.set(key, fs::absolute(s.str(key)).lexically_normal().string());
            return cmd_optimize(s, opt_out, workers_from(opt_workers), nullptr);
        }
        if (*report) return cmd_report(run_dir, null_run, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const IntegrityError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

#include "support.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

using namespace scnrisk;
using namespace testing_support;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult cli(const TempDir& dir, const std::string& args) {
    auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    std::string cmd = std::string("SCNRISK_WORKERS=2 ") + SCNRISK_CLI_PATH + " " + args + " > " + out.string() + " 2> " + err.string();
    int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

void write_synthetic(const TempDir& dir, std::size_t n, std::uint64_t seed = 1) {
    SynthSpec spec;
    spec.n_firms = n;
    spec.n_sectors = 4;
    spec.seed = seed;
    auto d = generate_synthetic(spec);
    write_edge_list(d.network, dir / "net.csv");
    std::ofstream ess(dir / "ess.csv");
    d.essentiality.write(ess);
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, ExitCodes) {
    TempDir dir;
    write_synthetic(dir, 20);
    EXPECT_EQ(cli(dir, "").code, 2);
    EXPECT_EQ(cli(dir, "--help").code, 0);
    EXPECT_EQ(cli(dir, "optimize --network " + q(dir / "net.csv") + " --default-essential --steps abc --out " + q(dir / "r")).code, 2);
    EXPECT_EQ(cli(dir, "optimize --network " + q(dir / "net.csv") + " --default-essential --beta linear:5 --out " + q(dir / "r")).code, 2);
    EXPECT_EQ(cli(dir, "esri --network " + q(dir / "nope.csv") + " --default-essential --out " + q(dir / "r")).code, 3);
    write_file(dir / "bad.csv", "source,target,source_nace3,target_nace3,weight\nA,B,101\n");
    auto bad = cli(dir, "esri --network " + q(dir / "bad.csv") + " --default-essential --out " + q(dir / "r"));
    EXPECT_EQ(bad.code, 3);
    EXPECT_NE(bad.err.find("line 2"), std::string::npos);
    write_file(dir / "cfg.txt", "no_such_key = 1\n");
    EXPECT_EQ(cli(dir, "esri --config " + q(dir / "cfg.txt") + " --network " + q(dir / "net.csv") + " --default-essential --out " + q(dir / "r")).code, 2);
}

TEST(Cli, EsriOnTwoFirms) {
    TempDir dir;
    write_file(dir / "two.csv", "source,target,source_nace3,target_nace3,weight\nA,B,101,201,5000\nB,A,201,101,4000\n");
    auto r = cli(dir, "esri --network " + q(dir / "two.csv") + " --default-essential --out " + q(dir / "out"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("mean_esri 1\n"), std::string::npos);
    auto profile = read_file(dir / "out" / "profile.csv");
    EXPECT_EQ(count_lines(profile), 3u);
    EXPECT_EQ(profile.substr(0, profile.find('\n')), "firm,sector,esri,rank");
    auto summary = nlohmann::json::parse(read_file(dir / "out" / "summary.json"));
    EXPECT_DOUBLE_EQ(summary["mean_esri"].get<double>(), 1.0);
}

TEST(Cli, MissingMatrixFallsBackOnlyWhenAsked) {
    TempDir dir;
    write_file(dir / "two.csv", "source,target,source_nace3,target_nace3,weight\nA,B,101,201,5000\nB,A,201,101,4000\n");
    auto with = cli(dir, "esri --network " + q(dir / "two.csv") + " --essentiality " + q(dir / "missing.csv") +
                             " --default-essential --out " + q(dir / "a"));
    EXPECT_EQ(with.code, 0);
    EXPECT_NE(with.err.find("warning"), std::string::npos);
    auto without = cli(dir, "esri --network " + q(dir / "two.csv") + " --essentiality " + q(dir / "missing.csv") + " --out " + q(dir / "b"));
    EXPECT_EQ(without.code, 3);
    EXPECT_EQ(cli(dir, "esri --network " + q(dir / "two.csv") + " --out " + q(dir / "c")).code, 2);
}

TEST(Cli, EsriMeanMatchesOracle) {
    TempDir dir;
    write_synthetic(dir, 20, 4);
    auto r = cli(dir, "esri --network " + q(dir / "net.csv") + " --essentiality " + q(dir / "ess.csv") + " --out " + q(dir / "out"));
    ASSERT_EQ(r.code, 0) << r.err;
    double mean = nlohmann::json::parse(read_file(dir / "out" / "summary.json"))["mean_esri"].get<double>();

    auto net = load_edge_list(dir / "net.csv", WeightMode::weighted);
    auto m = EssentialityMatrix::load(dir / "ess.csv", Essentiality::essential);
    auto sectors = sectors_of(net);
    auto links = raw_links(net);
    double sum = 0;
    for (std::size_t j = 0; j < sectors.size(); ++j) sum += oracle_cascade(sectors, links, class_from(m), 0.5, static_cast<int>(j)).esri;
    EXPECT_NEAR(mean, sum / static_cast<double>(sectors.size()), 1e-9);
}

TEST(Cli, ZeroBetaAcceptsEverything) {
    TempDir dir;
    write_synthetic(dir, 30);
    auto r = cli(dir, "optimize --network " + q(dir / "net.csv") + " --essentiality " + q(dir / "ess.csv") +
                          " --beta 0 --steps 200 --record-every 10 --out " + q(dir / "run"));
    ASSERT_EQ(r.code, 0) << r.err;
    auto m = nlohmann::json::parse(read_file(dir / "run" / "manifest.json"));
    EXPECT_DOUBLE_EQ(m["results"]["acceptance_rate"].get<double>(), 1.0);
    auto traj = read_file(dir / "run" / "trajectory.csv");
    EXPECT_EQ(count_lines(traj), 22u);
    EXPECT_EQ(count_lines(read_file(dir / "run" / "moves.jsonl")), 200u);
}

TEST(Cli, SameSeedSameFilesAndReplay) {
    TempDir dir;
    write_synthetic(dir, 30);
    const std::string base = "optimize --network " + q(dir / "net.csv") + " --essentiality " + q(dir / "ess.csv") +
                             " --beta linear:400:150 --steps 150 --seed 9 --snapshot-every 50 --out ";
    ASSERT_EQ(cli(dir, base + q(dir / "a")).code, 0);
    ASSERT_EQ(cli(dir, base + q(dir / "b")).code, 0);
    for (const char* f : {"trajectory.csv", "moves.jsonl", "final.csv", "best.csv", "profile_final.csv"})
        EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;

    auto r = cli(dir, "optimize --replay " + q(dir / "a" / "manifest.json") + " --out " + q(dir / "c"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_file(dir / "a" / "trajectory.csv"), read_file(dir / "c" / "trajectory.csv"));

    auto m = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
    EXPECT_EQ(m["schedule"], "linear:400:150");
    EXPECT_DOUBLE_EQ(m["beta_curve"][5]["beta"].get<double>(), 200.0);
    EXPECT_EQ(m["snapshots"].size(), 4u);

    // a changed input is refused on replay
    write_file(dir / "net.csv", read_file(dir / "net.csv") + "\n");
    EXPECT_EQ(cli(dir, "optimize --replay " + q(dir / "a" / "manifest.json") + " --out " + q(dir / "d")).code, 3);
}

TEST(Cli, ConfigFileWithFlagOverride) {
    TempDir dir;
    write_synthetic(dir, 20);
    write_file(dir / "run.cfg", "# test\nsteps = 5\nbeta = fixed:10\nrecord_every = 1\n");
    auto r = cli(dir, "optimize --config " + q(dir / "run.cfg") + " --steps 7 --network " + q(dir / "net.csv") +
                          " --essentiality " + q(dir / "ess.csv") + " --out " + q(dir / "run"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(read_file(dir / "run" / "trajectory.csv")), 9u);
    auto m = nlohmann::json::parse(read_file(dir / "run" / "manifest.json"));
    EXPECT_EQ(m["config"]["beta"], "fixed:10");
    EXPECT_EQ(m["config"]["steps"], "7");
}

TEST(Cli, ReportTablesAndConsistency) {
    TempDir dir;
    write_synthetic(dir, 30);
    const std::string common = " --network " + q(dir / "net.csv") + " --essentiality " + q(dir / "ess.csv");
    ASSERT_EQ(cli(dir, "optimize" + common + " --beta linear:2000:200 --steps 200 --snapshot-every 100 --out " + q(dir / "run")).code, 0);
    ASSERT_EQ(cli(dir, "optimize" + common + " --beta 0 --steps 200 --out " + q(dir / "null")).code, 0);
    auto r = cli(dir, "report --run " + q(dir / "run") + " --null-run " + q(dir / "null"));
    ASSERT_EQ(r.code, 0) << r.err;
    auto table = read_file(dir / "run" / "report" / "table1.csv");
    EXPECT_EQ(count_lines(table), 5u);  // header, empirical, final, best, configuration model
    EXPECT_EQ(table.substr(0, table.find('\n')),
              "artifact,N,L,mean_k_tot,mean_k_tot_nn,clustering,diameter,avg_shortest_path,scc1,scc2,scc3,largest_wcc,"
              "reciprocity,mean_esri,delta_mean_esri_pct");
    auto summary = nlohmann::json::parse(read_file(dir / "run" / "report" / "summary.json"));
    EXPECT_NEAR(summary["mean_delta_profiles"].get<double>(), summary["mean_delta_trajectory"].get<double>(), 1e-12);
    for (const char* f : {"trajectory.svg", "rank_profile.svg", "rank_profile_own.svg", "degree_esri.svg", "metrics_trajectory.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir / "run" / "report" / f)) << f;
    auto mt = read_file(dir / "run" / "report" / "metrics_trajectory.csv");
    EXPECT_NE(mt.find("\n200,N,"), std::string::npos);

    std::filesystem::create_directories(dir / "empty");
    auto e = cli(dir, "report --run " + q(dir / "empty"));
    EXPECT_EQ(e.code, 3);
    EXPECT_NE(e.err.find("manifest.json"), std::string::npos);
}

TEST(Cli, GenerateIngestExtract) {
    TempDir dir;
    auto g1 = cli(dir, "generate --n-firms 60 --seed 3 --out " + q(dir / "g1"));
    ASSERT_EQ(g1.code, 0) << g1.err;
    ASSERT_EQ(cli(dir, "generate --n-firms 60 --seed 3 --out " + q(dir / "g2")).code, 0);
    EXPECT_EQ(read_file(dir / "g1" / "network.csv"), read_file(dir / "g2" / "network.csv"));
    EXPECT_EQ(read_file(dir / "g1" / "essentiality.csv"), read_file(dir / "g2" / "essentiality.csv"));
    auto prov = nlohmann::json::parse(read_file(dir / "g1" / "provenance.json"));
    EXPECT_EQ(prov["seed"], 3);
    EXPECT_EQ(prov["spec"]["n_firms"], "60");
    EXPECT_EQ(cli(dir, "generate --n-firms 3 --n-sectors 5 --out " + q(dir / "g3")).code, 2);

    write_file(dir / "raw.csv", "source,target,source_nace3,target_nace3,weight\nA,B,101,201,2999\nB,C,201,301,3000\nC,C,301,301,9000\n");
    auto in = cli(dir, "ingest --input " + q(dir / "raw.csv") + " --out " + q(dir / "clean.csv"));
    ASSERT_EQ(in.code, 0);
    EXPECT_EQ(read_file(dir / "clean.csv"), "source,target,source_nace3,target_nace3,weight\nB,C,201,301,3000.00\n");

    auto ex = cli(dir, "extract community --network " + q(dir / "g1" / "network.csv") + " --target-size 10 --out " + q(dir / "comm.csv"));
    ASSERT_EQ(ex.code, 0) << ex.err;
    EXPECT_GT(load_edge_list(dir / "comm.csv", WeightMode::weighted).firm_count(), 0u);
    EXPECT_EQ(cli(dir, "extract seed --network " + q(dir / "g1" / "network.csv") + " --seed-code 99 --out " + q(dir / "s.csv")).code, 3);
}

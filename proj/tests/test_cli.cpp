#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mixlab/cli.hpp"
#include "mixlab/error.hpp"
#include "oracles.hpp"

using namespace mixlab;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mixlab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, SpectralGapOfCycle) {
    auto r = cli({"spectral", "--chain", "cycle:8", "--lazy", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = Json::parse(r.out);
    // Lazy cycle: eigenvalues (1 + cos(2 pi k / n)) / 2.
    const double gap = (1.0 - std::cos(2.0 * std::numbers::pi / 8.0)) / 2.0;
    EXPECT_NEAR(j["gap"].get<double>(), gap, 1e-12);
    EXPECT_NEAR(j["t_rel"].get<double>(), 1.0 / gap, 1e-9);
}

TEST(Cli, TStarOnCompleteGraphMatchesOracle) {
    auto r = cli({"coverage", "tstar", "--chain", "complete:6"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = Json::parse(r.out);
    EXPECT_EQ(j["t_star"].get<std::size_t>(), oracle::complete_graph_tstar(6, 2.0, 1.0));
    EXPECT_TRUE(j["exact"].get<bool>());
}

TEST(Cli, HittingMatrixMatchesCycleFormula) {
    auto r = cli({"hitting", "--chain", "cycle:5"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = Json::parse(r.out);
    for (std::size_t x = 0; x < 5; ++x) {
        for (std::size_t y = 0; y < 5; ++y) {
            EXPECT_NEAR(j["expected_hitting"][x][y].get<double>(), oracle::cycle_hitting_time(5, x, y), 1e-9);
        }
    }
}

TEST(Cli, SeriesCsvHasHeaderAndRows) {
    auto r = cli({"metrics", "series", "--chain", "complete:4", "--tmax", "5", "--csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "t,tv,l2,sep,entropy");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    EXPECT_EQ(rows, 6);
}

TEST(Cli, ConfigRoundTripReproducesRun) {
    const auto path = std::filesystem::temp_directory_path() / "mixlab_cli_config.json";
    auto dumped = cli({"--dump-config", "coverage", "mgf", "--chain", "cycle:6", "--lazy", "0.5", "--mode", "mc",
                       "--replicates", "3000", "--seed", "11", "--tmax", "6"});
    ASSERT_EQ(dumped.code, 0) << dumped.err;
    {
        std::ofstream f(path);
        f << dumped.out;
    }
    auto direct = cli({"coverage", "mgf", "--chain", "cycle:6", "--lazy", "0.5", "--mode", "mc", "--replicates",
                       "3000", "--seed", "11", "--tmax", "6"});
    auto replay = cli({"--config", path.string()});
    ASSERT_EQ(direct.code, 0) << direct.err;
    ASSERT_EQ(replay.code, 0) << replay.err;
    EXPECT_EQ(direct.out, replay.out);

    auto cfg = run_config_from_json(Json::parse(dumped.out));
    EXPECT_EQ(run_config_to_json(cfg).dump(), Json::parse(dumped.out).dump());
    std::filesystem::remove(path);
}

TEST(Cli, ConfigValuesOverrideFlags) {
    const auto path = std::filesystem::temp_directory_path() / "mixlab_cli_override.json";
    {
        std::ofstream f(path);
        f << R"({"chain": "complete:5"})";
    }
    auto r = cli({"coverage", "tstar", "--chain", "complete:9", "--config", path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(Json::parse(r.out)["t_star"].get<std::size_t>(), oracle::complete_graph_tstar(5, 2.0, 1.0));
    std::filesystem::remove(path);
}

TEST(Cli, MonteCarloOutputIndependentOfThreads) {
    auto a = cli({"coverage", "mgf", "--chain", "cycle:7", "--mode", "mc", "--replicates", "4000", "--threads", "1",
                  "--csv"});
    auto b = cli({"coverage", "mgf", "--chain", "cycle:7", "--mode", "mc", "--replicates", "4000", "--threads", "3",
                  "--csv"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ChainFileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "mixlab_cli_chain.json";
    auto built = cli({"build", "--chain", "hypercube:3", "--lazy", "0.5", "--out", path.string()});
    ASSERT_EQ(built.code, 0) << built.err;
    auto from_file = cli({"spectral", "--chain", path.string()});
    auto from_spec = cli({"spectral", "--chain", "hypercube:3", "--lazy", "0.5"});
    ASSERT_EQ(from_file.code, 0) << from_file.err;
    EXPECT_NEAR(Json::parse(from_file.out)["gap"].get<double>(), Json::parse(from_spec.out)["gap"].get<double>(),
                1e-12);
    std::filesystem::remove(path);
}

TEST(Cli, UsageAndInputErrorsExitTwo) {
    EXPECT_EQ(cli({"nonsense"}).code, 2);
    EXPECT_EQ(cli({"spectral", "--no-such-flag"}).code, 2);
    EXPECT_EQ(cli({"spectral"}).code, 2);
    EXPECT_EQ(cli({"spectral", "--chain", "cycle:x"}).code, 2);
    EXPECT_EQ(cli({"spectral", "--chain", "/no/such/file.json"}).code, 2);
    EXPECT_EQ(cli({"coverage", "tstar", "--chain", "cycle:5", "--mode", "fast"}).code, 2);
    EXPECT_EQ(cli({"verify", "no-such-experiment"}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, VerifyGoldenCompareAndMismatch) {
    const auto dir = std::filesystem::temp_directory_path() / "mixlab_cli_goldens";
    std::filesystem::remove_all(dir);
    unsetenv("MIXLAB_CACHE_DIR");
    auto missing = cli({"verify", "example-separation", "--golden", "compare", "--golden-dir", dir.string()});
    EXPECT_EQ(missing.code == 1 || missing.code == 0, true);
    EXPECT_NE(missing.err.find("golden missing"), std::string::npos);

    auto frozen = cli({"verify", "example-separation", "--golden", "freeze", "--golden-dir", dir.string()});
    const auto file = dir / "example-separation.json";
    ASSERT_TRUE(std::filesystem::exists(file)) << frozen.err;
    auto same = cli({"verify", "example-separation", "--golden", "compare", "--golden-dir", dir.string()});
    EXPECT_EQ(same.err.find("golden"), std::string::npos);

    Json golden = Json::parse(std::ifstream(file));
    golden["rows"][0]["tau_tv"] = 12345;
    std::ofstream(file) << golden.dump(2);
    auto changed = cli({"verify", "example-separation", "--golden", "compare", "--golden-dir", dir.string()});
    EXPECT_EQ(changed.code, 1);
    EXPECT_NE(changed.err.find("golden mismatch"), std::string::npos);
    std::filesystem::remove_all(dir);
}

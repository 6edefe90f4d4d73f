#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mixlab/error.hpp"
#include "mixlab/verify.hpp"
#include "oracles.hpp"

using namespace mixlab;

TEST(CouponOracle, ExactIntegersMatchFloatingScan) {
    const std::vector<std::size_t> expected{2, 5, 8, 10, 14, 17, 20, 24};
    for (std::size_t n = 3; n <= 10; ++n) EXPECT_EQ(complete_graph_tstar_exact(n, 2, 2), expected[n - 3]);
    // Away from exact ties the floating inclusion-exclusion scan agrees.
    for (std::size_t n = 4; n <= 10; ++n) {
        EXPECT_EQ(complete_graph_tstar_exact(n, 3, 2), oracle::complete_graph_tstar(n, 3.0, 1.0)) << n;
    }
    EXPECT_THROW(complete_graph_tstar_exact(60, 2, 2), Error);
}

TEST(InequalitySuite, EmptySetIsVacuous) {
    auto r = run_inequality_suite({});
    EXPECT_TRUE(r.passed());
    ASSERT_EQ(r.warnings.size(), 1u);
}

TEST(InequalitySuite, CorruptedKernelIsRejected) {
    SparseRows rows{{{0, 0.5}, {1, 0.4}}, {{0, 0.5}, {1, 0.5}}};
    try {
        MarkovChain bad(rows, {0.5, 0.5}, true, 0.0);
        FAIL() << "corrupted kernel accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Validation);
    }
}

TEST(InequalitySuite, SmallSetPasses) {
    std::vector<NamedChain> chains{{"cycle:5", build_cycle(5, 0.5)}, {"complete:4", build_complete(4, false)}};
    InequalityOptions opts;
    opts.t_max = 40;
    opts.functions = 5;
    opts.excursion.trials = 2000;
    auto r = run_inequality_suite(chains, opts);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.rows.size(), 2u);
}

TEST(L2Scaling, SingleRungHasUnitSpread) {
    L2ScalingOptions opts;
    opts.sizes = {3};
    auto r = run_l2_scaling(opts);
    EXPECT_DOUBLE_EQ(r.summary["ratio_spread"].get<double>(), 1.0);
    EXPECT_TRUE(r.passed());
}

TEST(L2Scaling, CycleFamilyIsFlaggedInadmissible) {
    L2ScalingOptions opts;
    opts.builder = "cycle";
    opts.sizes = {4, 8, 12};
    auto r = run_l2_scaling(opts);
    EXPECT_FALSE(r.summary["admissible"].get<bool>());
    EXPECT_FALSE(r.passed());
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Reports, DeterministicAcrossThreadCounts) {
    L2ScalingOptions opts;
    opts.sizes = {2, 3, 5};
    opts.exact_cap = 4;
    opts.replicates = 3000;
    opts.threads = 1;
    auto a = run_l2_scaling(opts);
    opts.threads = 4;
    auto b = run_l2_scaling(opts);
    EXPECT_EQ(a.to_json(false).dump(), b.to_json(false).dump());
}

TEST(Reports, JsonRoundTripAndCsv) {
    ExperimentReport r;
    r.id = "demo";
    r.rows.push_back({{"a", 1}, {"b", "x,y"}});
    r.rows.push_back({{"a", 2}, {"c", nullptr}});
    r.check("ok", "a claim", true, "detail");
    auto back = report_from_json(r.to_json());
    EXPECT_EQ(back.to_json().dump(), r.to_json().dump());
    EXPECT_EQ(r.rows_csv(), "a,b,c\n1,\"x,y\",\n2,,\n");
    Json bad = r.to_json();
    bad["schema_version"] = 99;
    EXPECT_THROW(report_from_json(bad), Error);
}

TEST(Goldens, FreezeThenCompare) {
    const auto dir = std::filesystem::temp_directory_path() / "mixlab_golden_test";
    std::filesystem::remove_all(dir);
    ExampleOptions opts;
    opts.n = 4;
    opts.m_list = {2, 3};
    auto r = run_example_separation(opts);
    EXPECT_FALSE(compare_golden(r, dir / "example.json").found);
    freeze_golden(r, dir / "example.json");
    auto same = compare_golden(r, dir / "example.json");
    EXPECT_TRUE(same.found);
    EXPECT_TRUE(same.matches);
    r.rows[0]["tau_2"] = 999;
    auto changed = compare_golden(r, dir / "example.json");
    EXPECT_FALSE(changed.matches);
    ASSERT_FALSE(changed.differences.empty());
    EXPECT_NE(changed.differences.front().find("tau_2"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Goldens, CacheDirectoryOverride) {
    unsetenv("MIXLAB_CACHE_DIR");
    EXPECT_EQ(golden_dir("fallback"), std::filesystem::path("fallback"));
    setenv("MIXLAB_CACHE_DIR", "/tmp/elsewhere", 1);
    EXPECT_EQ(golden_dir("fallback"), std::filesystem::path("/tmp/elsewhere"));
    unsetenv("MIXLAB_CACHE_DIR");
}

TEST(Jobs, ResultsKeepJobOrder) {
    std::vector<std::function<ExperimentReport()>> jobs;
    for (int i = 0; i < 6; ++i) {
        jobs.push_back([i] {
            ExperimentReport r;
            r.id = "job" + std::to_string(i);
            return r;
        });
    }
    auto out = run_jobs(jobs, 3);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(out[i].id, "job" + std::to_string(i));
}

TEST(TorusRemark, SmallRunCrossChecksCoverTime) {
    TorusRemarkOptions opts;
    opts.sides = {3};
    opts.replicates = 4000;
    auto r = run_torus_entropy_remark(opts);
    EXPECT_TRUE(r.passed());
    EXPECT_FALSE(r.rows[0]["cover_exact"].is_null());
    opts.m = 1;
    auto degenerate = run_torus_entropy_remark(opts);
    auto base_ent = mixing_times(build_torus2d(3, 0.5)).tau_ent;
    EXPECT_EQ(degenerate.rows[0]["tau_ent_wreath"].get<std::size_t>(), base_ent);
}

#include <gtest/gtest.h>

#include <cmath>

#include "mixlab/error.hpp"
#include "mixlab/lamplighter.hpp"

using namespace mixlab;

namespace {

double max_metric_gap(const DistanceProfile& a, const DistanceProfile& b) {
    double gap = 0.0;
    for (Metric m : kAllMetrics) gap = std::max(gap, std::abs(a.get(m) - b.get(m)));
    return gap;
}

}  // namespace

TEST(Wreath, SingleStateBaseMixesInOneStep) {
    auto base = from_dense({{1.0}});
    auto w = build_wreath(base, {2, LampConvention::BothEndpoints});
    EXPECT_EQ(w.explicit_chain().size(), 2u);
    auto p = distances_at(w.explicit_chain(), 0, 1);
    EXPECT_NEAR(p.tv, 0.0, 1e-15);
    auto r = reduced_distances(base, {2, LampConvention::BothEndpoints}, 0, 1);
    EXPECT_NEAR(max_metric_gap(p, r), 0.0, 1e-15);
}

TEST(Wreath, TwoStateBaseHasEightUniformStates) {
    auto w = build_wreath(build_complete(2, false), {2, LampConvention::BothEndpoints});
    ASSERT_EQ(w.explicit_chain().size(), 8u);
    for (double p : w.explicit_chain().stationary()) EXPECT_NEAR(p, 0.125, 1e-15);
    EXPECT_TRUE(w.explicit_chain().reversible());
}

TEST(Wreath, StateCountAndIndexing) {
    WreathChain w(build_cycle(4, 0.0), {3, LampConvention::BothEndpoints});
    EXPECT_EQ(*w.state_count(), 81u * 4u);
    EXPECT_EQ(w.state_index({0, 0, 0, 0}, 2), 2u);
    EXPECT_EQ(w.state_index({1, 0, 0, 0}, 0), 4u);
    EXPECT_EQ(w.state_index({0, 2, 0, 0}, 1), 2u * 3u * 4u + 1u);
    EXPECT_THROW(w.explicit_chain(), Error);
    EXPECT_THROW(w.state_index({3, 0, 0, 0}, 0), Error);
}

TEST(Wreath, CapacityErrorPointsToReduction) {
    try {
        build_wreath(build_cycle(10, 0.5), {4, LampConvention::BothEndpoints});
        FAIL() << "expected a capacity error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Capacity);
        EXPECT_NE(std::string(e.what()).find("reduced_distances"), std::string::npos);
    }
}

TEST(Wreath, ExplicitChainsValidateForEveryConvention) {
    for (auto c : {LampConvention::BothEndpoints, LampConvention::RandomizeThenMove,
                   LampConvention::MoveThenRandomize}) {
        auto w = build_wreath(build_cycle(4, 0.0), {2, c});
        EXPECT_EQ(w.explicit_chain().size(), 64u);
        EXPECT_TRUE(w.explicit_chain().has_uniform_stationary(1e-12));
    }
}

TEST(Reduction, TimeZeroIsAPointMass) {
    for (std::size_t m : {2u, 3u, 5u}) {
        auto p = reduced_distances(build_cycle(5, 0.5), {m, LampConvention::BothEndpoints}, 2, 0);
        const double states = std::pow(static_cast<double>(m), 5.0) * 5.0;
        EXPECT_NEAR(p.tv, 1.0 - 1.0 / states, 1e-12);
        EXPECT_NEAR(p.sep, 1.0, 1e-12);
        EXPECT_NEAR(p.entropy, std::log(states), 1e-10);
        EXPECT_NEAR(p.l2, std::sqrt(states - 1.0), 1e-9 * std::sqrt(states));
    }
}

TEST(Reduction, MatchesExplicitChain) {
    struct Case {
        MarkovChain base;
        std::size_t m;
        LampConvention convention;
        std::size_t start;
    };
    std::vector<Case> cases{
        {build_cycle(3, 0.0), 2, LampConvention::BothEndpoints, 0},
        {build_cycle(4, 0.0), 2, LampConvention::BothEndpoints, 1},
        {build_cycle(4, 0.0), 3, LampConvention::BothEndpoints, 3},
        {build_cycle(3, 0.0), 4, LampConvention::BothEndpoints, 2},
        {build_cycle(4, 0.5), 2, LampConvention::RandomizeThenMove, 0},
        {build_cycle(4, 0.25), 3, LampConvention::MoveThenRandomize, 2},
        {build_complete(5, true), 2, LampConvention::BothEndpoints, 4},
        {build_hypercube(2, 0.5), 3, LampConvention::BothEndpoints, 1},
    };
    for (auto& c : cases) {
        auto w = build_wreath(c.base, {c.m, c.convention});
        auto series = reduced_distance_series(c.base, {c.m, c.convention}, c.start, 40);
        for (std::size_t t = 0; t <= 40; ++t) {
            auto explicit_profile = distances_at(w.explicit_chain(), w.zero_lamps_index(c.start), t);
            EXPECT_LT(max_metric_gap(explicit_profile, series[t]), 1e-10)
                << "n=" << c.base.size() << " m=" << c.m << " t=" << t;
        }
    }
}

TEST(Reduction, CollisionSumGivesTheL2Norm) {
    auto base = build_cycle(3, 0.0);
    LampSpec spec{2, LampConvention::BothEndpoints};
    auto w = build_wreath(base, spec);
    for (std::size_t t = 0; t <= 20; ++t) {
        const double collision = l2_collision(base, spec, 0, t);
        const double l2 = distances_at(w.explicit_chain(), 0, t).l2;
        EXPECT_NEAR(collision, 1.0 + l2 * l2, 1e-10 * collision) << "t=" << t;
    }
}

TEST(Reduction, SingleLetterLampsReduceToTheBase) {
    auto base = build_cycle(5, 0.5);
    for (std::size_t t = 0; t < 30; t += 3) {
        auto r = reduced_distances(base, {1, LampConvention::BothEndpoints}, 0, t);
        EXPECT_LT(max_metric_gap(r, distances_at(base, 0, t)), 1e-12);
    }
    auto wreath = wreath_mixing_times(base, {1, LampConvention::BothEndpoints});
    auto plain = mixing_times(base);
    EXPECT_EQ(wreath.tau_tv, plain.tau_tv);
    EXPECT_EQ(wreath.tau_2, plain.tau_2);
    EXPECT_EQ(wreath.tau_sep, plain.tau_sep);
    EXPECT_EQ(wreath.tau_ent, plain.tau_ent);
}

TEST(Reduction, LargeAlphabetStaysFinite) {
    auto p = reduced_distances(build_cycle(12, 0.5), {std::size_t{1} << 16, LampConvention::BothEndpoints}, 0, 30);
    EXPECT_TRUE(std::isfinite(p.tv));
    EXPECT_TRUE(std::isfinite(p.entropy));
    EXPECT_GT(p.l2, 0.0);
    EXPECT_LE(p.tv, 1.0);
    EXPECT_THROW(reduced_distances(build_cycle(4, 0.5), {(std::size_t{1} << 16) + 1, {}}, 0, 1), Error);
}

TEST(WreathMixing, MatchesExplicitChainOnCompleteGraph) {
    auto base = build_complete(5, true);
    LampSpec spec{2, LampConvention::BothEndpoints};
    auto w = build_wreath(base, spec);
    auto reduced = wreath_mixing_times(base, spec);
    StartSet starts;
    for (std::size_t x = 0; x < 5; ++x) starts.states.push_back(w.zero_lamps_index(x));
    MixingOptions opts;
    opts.starts = starts;
    auto explicit_times = mixing_times(w.explicit_chain(), {}, opts);
    EXPECT_EQ(reduced.tau_tv, explicit_times.tau_tv);
    EXPECT_EQ(reduced.tau_2, explicit_times.tau_2);
    EXPECT_EQ(reduced.tau_sep, explicit_times.tau_sep);
    EXPECT_EQ(reduced.tau_ent, explicit_times.tau_ent);
}

TEST(WreathMixing, L2TimeGrowsWithAlphabet) {
    auto base = build_cycle(8, 0.5);
    WreathMixingOptions opts;
    opts.starts = {0};
    auto small = wreath_mixing_times(base, {2, LampConvention::BothEndpoints}, {}, opts);
    auto large = wreath_mixing_times(base, {16, LampConvention::BothEndpoints}, {}, opts);
    EXPECT_LT(small.tau_2, large.tau_2);
    EXPECT_LE(small.tau_tv, large.tau_tv);
}

TEST(WreathMixing, PeriodicBaseHitsTheHorizon) {
    WreathMixingOptions opts;
    opts.starts = {0};
    opts.max_horizon = 200;
    EXPECT_THROW(wreath_mixing_times(build_cycle(4, 0.0), {2, LampConvention::BothEndpoints}, {}, opts),
                 HorizonExceededError);
}

TEST(Conventions, ParseRoundTrip) {
    for (auto c : {LampConvention::BothEndpoints, LampConvention::RandomizeThenMove,
                   LampConvention::MoveThenRandomize}) {
        EXPECT_EQ(parse_lamp_convention(to_string(c)), c);
    }
    EXPECT_THROW(parse_lamp_convention("sometimes"), Error);
}
